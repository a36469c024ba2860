// Contrastive Divergence learning: per-sample CD-k chains on seed-derived
// generator streams, batch-averaged deltas, plain SGD updates, and per-epoch
// diagnostics (reconstruction error, classification cross-entropy, eval-set
// scores) collected into a TrainReport.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dcrbm/dataset.hpp"
#include "dcrbm/inference.hpp"
#include "dcrbm/metrics.hpp"
#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 1;
  int cd_steps = 1;
  int batch_size = 32;
  std::uint64_t seed = 1;
  bool shuffle = false;
  int eval_every = 1;
  double momentum = 0.0;
  double weight_decay = 0.0;

  // learning_rate 0 is allowed so the zero-rate fixpoint is expressible.
  void validate() const {
    detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate),
                    "learning_rate must be finite and >= 0");
    detail::require(epochs >= 1, "epochs must be >= 1");
    detail::require(cd_steps >= 1, "cd_steps must be >= 1");
    detail::require(batch_size >= 1, "batch_size must be >= 1");
    detail::require(eval_every >= 1, "eval_every must be >= 1");
    detail::require(momentum >= 0.0 && momentum < 1.0,
                    "momentum must lie in [0, 1)");
    detail::require(weight_decay >= 0.0, "weight_decay must be >= 0");
  }
};

// CD deltas share the shape family of ModelParams.
using ParamDeltas = ModelParams;

inline ModelParams zero_params(const ModelConfig& config) {
  config.validate();
  ModelParams params;
  params.weights = Eigen::MatrixXd::Zero(config.visible, config.hidden);
  params.visible_bias = Eigen::VectorXd::Zero(config.visible);
  params.hidden_bias = Eigen::VectorXd::Zero(config.hidden);
  params.past_to_visible =
      Eigen::MatrixXd::Zero(config.history_dim(), config.visible);
  params.past_to_hidden =
      Eigen::MatrixXd::Zero(config.history_dim(), config.hidden);
  params.label_weights = Eigen::MatrixXd::Zero(config.hidden, config.labels);
  params.label_bias = Eigen::VectorXd::Zero(config.labels);
  return params;
}

// Stream seed for the chain of batch element i; exposed so tests can replay
// a chain by hand with the same draws.
inline std::uint64_t chain_stream_seed(std::uint64_t chain_seed, std::size_t i) {
  return mix_seed(chain_seed, static_cast<std::uint64_t>(i));
}

// One CD-k estimate, batch-averaged, unscaled by the learning rate. Positive
// phase pairs the data (v0, y0) with hidden probabilities p(h | v0, y0).
// Negative phase runs k sampled Gibbs sweeps and closes with a half-step of
// hidden probabilities under the final samples (v_k, y_k). Statistics pair
// each sampled quantity only with probabilities conditioned on it, so every
// negative moment is an unbiased estimate of the model expectation and the
// batch-mean deltas vanish (statistically) on data drawn from the model
// itself. Bias moments use the final-step distribution parameters (visible
// means, label probabilities) rather than the samples to cut variance.
inline ParamDeltas cd_gradients(const ModelConfig& config,
                                const ModelParams& params,
                                std::span<const Sample> batch,
                                std::uint64_t chain_seed, int cd_steps = 1) {
  detail::require(!batch.empty(), "cd_gradients: empty batch");
  detail::require(cd_steps >= 1, "cd_gradients: cd_steps must be >= 1");
  detail::check_shapes(config, params);

  ParamDeltas deltas = zero_params(config);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& sample = batch[i];
    detail::check_history(config, sample.history);
    detail::check_frame(config, sample.frame);
    sample.label.validate();
    detail::require(sample.label.classes == config.labels,
                    "cd_gradients: sample label class count mismatch");

    const Eigen::VectorXd& hist = sample.history.values;
    const Eigen::VectorXd& v0 = sample.frame.values;
    const Eigen::VectorXd y0 = sample.label.one_hot();
    const Eigen::VectorXd h0 =
        hidden_prob(config, params, sample.frame, sample.history, sample.label);

    Rng rng(chain_stream_seed(chain_seed, i));
    Frame v = sample.frame;
    Label y = sample.label;
    GibbsStep step;
    for (int t = 0; t < cd_steps; ++t) {
      step = gibbs_step(config, params, v, y, sample.history, rng);
      v = step.visible_sample;
      y = step.label_sample;
    }
    const Eigen::VectorXd hk = hidden_prob(config, params, v, sample.history, y);
    const Eigen::VectorXd yk = y.one_hot();

    deltas.weights += v0 * h0.transpose() - v.values * hk.transpose();
    deltas.visible_bias += v0 - step.visible_param;
    deltas.hidden_bias += h0 - hk;
    deltas.past_to_visible += hist * (v0 - step.visible_param).transpose();
    deltas.past_to_hidden += hist * (h0 - hk).transpose();
    deltas.label_weights += h0 * y0.transpose() - hk * yk.transpose();
    deltas.label_bias += y0 - step.label_dist;
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  deltas.weights *= inv;
  deltas.visible_bias *= inv;
  deltas.hidden_bias *= inv;
  deltas.past_to_visible *= inv;
  deltas.past_to_hidden *= inv;
  deltas.label_weights *= inv;
  deltas.label_bias *= inv;
  return deltas;
}

// params += learning_rate * deltas; aborts loudly if any tensor turns
// non-finite.
inline void apply_update(const ModelConfig& config, ModelParams& params,
                         const ParamDeltas& deltas, double learning_rate) {
  detail::check_shapes(config, params);
  detail::check_shapes(config, deltas);
  params.weights += learning_rate * deltas.weights;
  params.visible_bias += learning_rate * deltas.visible_bias;
  params.hidden_bias += learning_rate * deltas.hidden_bias;
  params.past_to_visible += learning_rate * deltas.past_to_visible;
  params.past_to_hidden += learning_rate * deltas.past_to_hidden;
  params.label_weights += learning_rate * deltas.label_weights;
  params.label_bias += learning_rate * deltas.label_bias;

  const auto check = [](bool finite, const char* tensor) {
    if (!finite) {
      throw std::runtime_error(std::string("training diverged: non-finite values in ") +
                               tensor);
    }
  };
  check(params.weights.allFinite(), "weights");
  check(params.visible_bias.allFinite(), "visible_bias");
  check(params.hidden_bias.allFinite(), "hidden_bias");
  check(params.past_to_visible.allFinite(), "past_to_visible");
  check(params.past_to_hidden.allFinite(), "past_to_hidden");
  check(params.label_weights.allFinite(), "label_weights");
  check(params.label_bias.allFinite(), "label_bias");
}

// Mean over samples of |v - one-step reconstruction mean|^2 / V. The
// reconstruction goes through mean-field hidden probabilities given the
// sample's own label; no sampling, so the value is deterministic.
inline double reconstruction_error(const ModelConfig& config,
                                   const ModelParams& params,
                                   std::span<const Sample> dataset) {
  detail::require(!dataset.empty(), "reconstruction_error: empty dataset");
  double acc = 0.0;
  for (const Sample& sample : dataset) {
    const Eigen::VectorXd h =
        hidden_prob(config, params, sample.frame, sample.history, sample.label);
    const Eigen::VectorXd mean = visible_conditional(config, params, h,
                                                     sample.history,
                                                     sample.frame.total);
    acc += (sample.frame.values - mean).squaredNorm() /
           static_cast<double>(config.visible);
  }
  return acc / static_cast<double>(dataset.size());
}

// Mean binary cross-entropy between true labels and the class-1 posterior
// from classify, clamped to [1e-12, 1 - 1e-12]. Binary labels only.
inline double classification_bce(const ModelConfig& config,
                                 const ModelParams& params,
                                 std::span<const Sample> dataset) {
  detail::require(config.labels == 2, "classification_bce requires L = 2");
  detail::require(!dataset.empty(), "classification_bce: empty dataset");
  // Clamp in loss space: forming 1 - 1e-12 in double would round the bound
  // away, while -log1p(-1e-12) is exact.
  constexpr double kClamp = 1e-12;
  const double floor = -std::log1p(-kClamp);
  const double ceil = -std::log(kClamp);
  double acc = 0.0;
  for (const Sample& sample : dataset) {
    const LabelScores scores =
        classify(config, params, sample.frame, sample.history);
    const double p = scores.posterior[1];
    const double raw = sample.label.index == 1 ? -std::log(p) : -std::log1p(-p);
    acc += std::min(std::max(raw, floor), ceil);
  }
  return acc / static_cast<double>(dataset.size());
}

inline std::vector<int> predict_labels(const ModelConfig& config,
                                       const ModelParams& params,
                                       std::span<const Sample> dataset) {
  std::vector<int> predictions;
  predictions.reserve(dataset.size());
  for (const Sample& sample : dataset) {
    predictions.push_back(static_cast<int>(
        classify(config, params, sample.frame, sample.history).predicted));
  }
  return predictions;
}

inline std::vector<int> true_labels(std::span<const Sample> dataset) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const Sample& sample : dataset) {
    labels.push_back(static_cast<int>(sample.label.index));
  }
  return labels;
}

struct TrainReportRow {
  int epoch = 0;
  double recon_error = 0.0;
  double bce = 0.0;
  ScoreSet scores;
};

struct TrainReport {
  std::vector<TrainReportRow> rows;

  const TrainReportRow& first() const {
    if (rows.empty()) throw std::logic_error("empty train report");
    return rows.front();
  }
  const TrainReportRow& last() const {
    if (rows.empty()) throw std::logic_error("empty train report");
    return rows.back();
  }
};

inline std::string train_report_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch,recon_error,bce,accuracy,precision,recall,f1,mcc\n";
  out << std::setprecision(17);
  for (const TrainReportRow& row : report.rows) {
    out << row.epoch << ',' << row.recon_error << ',' << row.bce << ','
        << row.scores.accuracy << ',' << row.scores.precision << ','
        << row.scores.recall << ',' << row.scores.f1 << ',' << row.scores.mcc
        << '\n';
  }
  return out.str();
}

inline void save_train_report(const TrainReport& report,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write train report: " + path);
  out << train_report_csv(report);
}

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

namespace detail {

inline void check_dataset(const ModelConfig& config,
                          std::span<const Sample> dataset, const char* name) {
  require(!dataset.empty(), std::string("train: empty ") + name + " set");
  for (const Sample& sample : dataset) {
    check_history(config, sample.history);
    check_frame(config, sample.frame);
    sample.label.validate();
    require(sample.label.classes == config.labels,
            std::string("train: label class count mismatch in ") + name +
                " set");
  }
}

inline TrainReportRow evaluate_epoch(const ModelConfig& config,
                                     const ModelParams& params,
                                     std::span<const Sample> eval_set,
                                     int epoch) {
  TrainReportRow row;
  row.epoch = epoch;
  row.recon_error = reconstruction_error(config, params, eval_set);
  row.bce = classification_bce(config, params, eval_set);
  row.scores =
      score(confusion(predict_labels(config, params, eval_set),
                      true_labels(eval_set)));
  return row;
}

}  // namespace detail

// Full training loop. Diagnostics are recorded on the eval set before any
// update (epoch 0), every eval_every epochs, and at the final epoch. Batches
// are chronological chunks unless shuffle reorders samples each epoch. Every
// random draw derives from config.seed, so identical inputs give bit-identical
// results.
inline TrainResult train(const ModelConfig& config, ModelParams params,
                         std::span<const Sample> train_set,
                         std::span<const Sample> eval_set,
                         const TrainConfig& train_config) {
  train_config.validate();
  detail::check_shapes(config, params);
  detail::check_dataset(config, train_set, "train");
  detail::check_dataset(config, eval_set, "eval");

  TrainReport report;
  report.rows.push_back(detail::evaluate_epoch(config, params, eval_set, 0));

  std::vector<Sample> pool;
  if (train_config.shuffle) pool.assign(train_set.begin(), train_set.end());
  Rng order_rng(mix_seed(train_config.seed, 0xc0ffeeull));
  ParamDeltas velocity = zero_params(config);
  const std::size_t n = train_set.size();
  const std::size_t batch_size =
      std::min<std::size_t>(static_cast<std::size_t>(train_config.batch_size), n);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::span<const Sample> ordered = train_set;
    if (train_config.shuffle) {
      for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(
            order_rng.uniform() * static_cast<double>(i + 1));
        std::swap(pool[i], pool[j]);
      }
      ordered = pool;
    }

    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batch_index) {
      const std::size_t size = std::min(batch_size, n - start);
      const std::uint64_t chain_seed =
          mix_seed(train_config.seed, static_cast<std::uint64_t>(epoch),
                   static_cast<std::uint64_t>(batch_index));
      ParamDeltas deltas = cd_gradients(config, params,
                                        ordered.subspan(start, size),
                                        chain_seed, train_config.cd_steps);
      if (train_config.weight_decay > 0.0) {
        deltas.weights -= train_config.weight_decay * params.weights;
        deltas.past_to_visible -= train_config.weight_decay * params.past_to_visible;
        deltas.past_to_hidden -= train_config.weight_decay * params.past_to_hidden;
        deltas.label_weights -= train_config.weight_decay * params.label_weights;
      }
      if (train_config.momentum > 0.0) {
        velocity.weights = train_config.momentum * velocity.weights + deltas.weights;
        velocity.visible_bias =
            train_config.momentum * velocity.visible_bias + deltas.visible_bias;
        velocity.hidden_bias =
            train_config.momentum * velocity.hidden_bias + deltas.hidden_bias;
        velocity.past_to_visible = train_config.momentum * velocity.past_to_visible +
                                   deltas.past_to_visible;
        velocity.past_to_hidden = train_config.momentum * velocity.past_to_hidden +
                                  deltas.past_to_hidden;
        velocity.label_weights =
            train_config.momentum * velocity.label_weights + deltas.label_weights;
        velocity.label_bias =
            train_config.momentum * velocity.label_bias + deltas.label_bias;
        deltas = velocity;
      }
      try {
        apply_update(config, params, deltas, train_config.learning_rate);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error("epoch " + std::to_string(epoch) + ": " +
                                 e.what());
      }
    }

    if (epoch % train_config.eval_every == 0 || epoch == train_config.epochs) {
      report.rows.push_back(
          detail::evaluate_epoch(config, params, eval_set, epoch));
    }
  }

  return TrainResult{std::move(params), std::move(report)};
}

// Seeded initialization refined for count data: the visible bias starts at
// the log of each unit's mean share of the frame total over the training set,
// so initial reconstructions already sit near the data's mix proportions.
inline ModelParams initialize_for_dataset(const ModelConfig& config,
                                          std::uint64_t seed,
                                          std::span<const Sample> train_set) {
  ModelParams params = initialize_params(config, seed);
  if (config.units != UnitKind::Count || train_set.empty()) return params;
  Eigen::VectorXd share = Eigen::VectorXd::Zero(config.visible);
  std::size_t counted = 0;
  for (const Sample& sample : train_set) {
    if (sample.frame.total <= 0.0) continue;
    share += sample.frame.values / sample.frame.total;
    ++counted;
  }
  if (counted == 0) return params;
  share /= static_cast<double>(counted);
  for (Eigen::Index i = 0; i < config.visible; ++i) {
    params.visible_bias[i] = std::log(std::max(share[i], 1e-6));
  }
  return params;
}

}  // namespace dcrbm
