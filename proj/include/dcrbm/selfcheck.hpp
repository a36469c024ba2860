// Named property checks over tiny randomly drawn models: oracle agreement,
// conservation laws, CD equilibrium statistics, and round-trip contracts.
// Shared by the `verify` command and the acceptance tests so both report the
// same evidence.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcrbm/dataset.hpp"
#include "dcrbm/inference.hpp"
#include "dcrbm/metrics.hpp"
#include "dcrbm/model.hpp"
#include "dcrbm/model_io.hpp"
#include "dcrbm/rng.hpp"
#include "dcrbm/training.hpp"

namespace dcrbm {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // observed vs expected, or a summary statistic
};

struct SelfCheckOptions {
  std::uint64_t seed = 20260815;
  // Test hook: offsets the class-0 score inside the classification check to
  // prove a corrupted scoring path is caught and named. 0 disables.
  double score_perturbation = 0.0;
};

namespace detail {

inline void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = scale * (2.0 * rng.uniform() - 1.0);
    }
  }
}

inline void fill_uniform(Eigen::VectorXd& v, Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = scale * (2.0 * rng.uniform() - 1.0);
  }
}

inline ModelParams random_params(const ModelConfig& config, Rng& rng,
                                 double scale) {
  ModelParams params = zero_params(config);
  fill_uniform(params.weights, rng, scale);
  fill_uniform(params.visible_bias, rng, scale);
  fill_uniform(params.hidden_bias, rng, scale);
  fill_uniform(params.past_to_visible, rng, scale);
  fill_uniform(params.past_to_hidden, rng, scale);
  fill_uniform(params.label_weights, rng, scale);
  fill_uniform(params.label_bias, rng, scale);
  return params;
}

inline Eigen::VectorXd random_unit_values(UnitKind kind, Eigen::Index size,
                                          Rng& rng) {
  Eigen::VectorXd values(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    switch (kind) {
      case UnitKind::Binary:
        values[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
        break;
      case UnitKind::Real:
        values[i] = rng.normal();
        break;
      case UnitKind::Count:
        values[i] = std::floor(4.0 * rng.uniform());
        break;
    }
  }
  return values;
}

inline Frame random_frame(const ModelConfig& config, Rng& rng) {
  return make_frame(config, random_unit_values(config.units, config.visible, rng));
}

inline HistoryWindow random_history(const ModelConfig& config, Rng& rng) {
  return HistoryWindow{
      random_unit_values(config.units, config.history_dim(), rng)};
}

inline Eigen::VectorXd flatten_deltas(const ModelConfig& config,
                                      const ParamDeltas& deltas) {
  const Eigen::Index total =
      config.visible * config.hidden + config.visible + config.hidden +
      config.history_dim() * config.visible +
      config.history_dim() * config.hidden + config.hidden * config.labels +
      config.labels;
  Eigen::VectorXd flat(total);
  Eigen::Index at = 0;
  const auto push_matrix = [&flat, &at](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) flat[at++] = m(i, j);
    }
  };
  const auto push_vector = [&flat, &at](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) flat[at++] = v[i];
  };
  push_matrix(deltas.weights);
  push_vector(deltas.visible_bias);
  push_vector(deltas.hidden_bias);
  push_matrix(deltas.past_to_visible);
  push_matrix(deltas.past_to_hidden);
  push_matrix(deltas.label_weights);
  push_vector(deltas.label_bias);
  return flat;
}

inline bool params_equal(const ModelParams& a, const ModelParams& b) {
  return a.weights == b.weights && a.visible_bias == b.visible_bias &&
         a.hidden_bias == b.hidden_bias &&
         a.past_to_visible == b.past_to_visible &&
         a.past_to_hidden == b.past_to_hidden &&
         a.label_weights == b.label_weights && a.label_bias == b.label_bias;
}

inline std::string format_double(double x) {
  std::ostringstream out;
  out << std::setprecision(6) << x;
  return out.str();
}

}  // namespace detail

// classify against the 2^H enumeration oracle: pairwise score differences and
// the predicted class must agree on random models of every unit kind.
inline CheckResult check_classification_oracle(std::uint64_t seed,
                                               int model_count, double tol,
                                               double score_perturbation = 0.0) {
  CheckResult result{"classify-enumeration-agreement", true, ""};
  Rng rng(mix_seed(seed, 0x01));
  double worst = 0.0;
  for (int trial = 0; trial < model_count; ++trial) {
    ModelConfig config;
    config.visible = 1 + static_cast<Eigen::Index>(4.0 * rng.uniform());
    config.hidden = 1 + static_cast<Eigen::Index>(10.0 * rng.uniform());
    config.labels = trial % 2 == 0 ? 2 : 3;
    config.history = trial % 3 == 0 ? 2 : 1;
    config.units = static_cast<UnitKind>(trial % 3);
    config.visible = std::min<Eigen::Index>(config.visible, 4);
    config.hidden = std::min<Eigen::Index>(config.hidden, 10);

    const ModelParams params = detail::random_params(config, rng, 0.5);
    const Frame frame = detail::random_frame(config, rng);
    const HistoryWindow history = detail::random_history(config, rng);

    LabelScores scored = classify(config, params, frame, history);
    scored.scores[0] += score_perturbation;
    const Eigen::VectorXd logits =
        enumerate_label_logits(config, params, frame, history);

    Eigen::Index enum_predicted = 0;
    for (Eigen::Index l = 1; l < config.labels; ++l) {
      if (logits[l] > logits[enum_predicted]) enum_predicted = l;
    }
    Eigen::Index perturbed_predicted = 0;
    for (Eigen::Index l = 1; l < config.labels; ++l) {
      if (scored.scores[l] > scored.scores[perturbed_predicted]) {
        perturbed_predicted = l;
      }
    }

    for (Eigen::Index l1 = 0; l1 < config.labels; ++l1) {
      for (Eigen::Index l2 = l1 + 1; l2 < config.labels; ++l2) {
        const double got = scored.scores[l1] - scored.scores[l2];
        const double want = logits[l1] - logits[l2];
        worst = std::max(worst, std::abs(got - want));
      }
    }
    if (perturbed_predicted != enum_predicted) {
      result.passed = false;
      result.detail = "trial " + std::to_string(trial) + ": predicted class " +
                      std::to_string(perturbed_predicted) + ", enumeration says " +
                      std::to_string(enum_predicted);
      return result;
    }
  }
  result.passed = worst <= tol;
  result.detail = "max score-difference deviation " +
                  detail::format_double(worst) + " (tolerance " +
                  detail::format_double(tol) + ", " +
                  std::to_string(model_count) + " models)";
  return result;
}

// hidden_prob and visible_conditional against exact conditionals enumerated
// from exp(-E_DC) on tiny Binary models.
inline CheckResult check_conditional_oracle(std::uint64_t seed, int model_count,
                                            double tol) {
  CheckResult result{"gibbs-conditional-agreement", true, ""};
  Rng rng(mix_seed(seed, 0x02));
  double worst = 0.0;
  for (int trial = 0; trial < model_count; ++trial) {
    ModelConfig config;
    config.visible = 1 + static_cast<Eigen::Index>(3.0 * rng.uniform());
    config.hidden = 1 + static_cast<Eigen::Index>(3.0 * rng.uniform());
    config.labels = 2;
    config.history = trial % 2 == 0 ? 1 : 2;
    config.units = UnitKind::Binary;

    const ModelParams params = detail::random_params(config, rng, 0.8);
    const Frame frame = detail::random_frame(config, rng);
    const HistoryWindow history = detail::random_history(config, rng);
    const Label label{static_cast<Eigen::Index>(2.0 * rng.uniform()), 2};

    // Hidden units: P(h_j = 1 | rest) from energy ratios must equal
    // hidden_prob[j] in every context of the other hidden units.
    const Eigen::VectorXd h_prob =
        hidden_prob(config, params, frame, history, label);
    Eigen::VectorXd hidden(config.hidden);
    const std::uint64_t states = 1ull << config.hidden;
    for (std::uint64_t bits = 0; bits < states; ++bits) {
      for (Eigen::Index j = 0; j < config.hidden; ++j) {
        hidden[j] = (bits >> j) & 1u ? 1.0 : 0.0;
      }
      for (Eigen::Index j = 0; j < config.hidden; ++j) {
        Eigen::VectorXd on = hidden, off = hidden;
        on[j] = 1.0;
        off[j] = 0.0;
        const double e_on =
            discriminative_energy(config, params, frame, on, label, history);
        const double e_off =
            discriminative_energy(config, params, frame, off, label, history);
        const double exact = 1.0 / (1.0 + std::exp(e_on - e_off));
        worst = std::max(worst, std::abs(exact - h_prob[j]));
      }
    }

    // Visible units: context is the frame itself with unit i toggled.
    Eigen::VectorXd h_sample(config.hidden);
    for (Eigen::Index j = 0; j < config.hidden; ++j) {
      h_sample[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const Eigen::VectorXd v_prob =
        visible_conditional(config, params, h_sample, history);
    for (Eigen::Index i = 0; i < config.visible; ++i) {
      Frame on = frame, off = frame;
      on.values[i] = 1.0;
      off.values[i] = 0.0;
      const double e_on =
          discriminative_energy(config, params, on, h_sample, label, history);
      const double e_off =
          discriminative_energy(config, params, off, h_sample, label, history);
      const double exact = 1.0 / (1.0 + std::exp(e_on - e_off));
      worst = std::max(worst, std::abs(exact - v_prob[i]));
    }
  }
  result.passed = worst <= tol;
  result.detail = "max conditional deviation " + detail::format_double(worst) +
                  " (tolerance " + detail::format_double(tol) + ", " +
                  std::to_string(model_count) + " models)";
  return result;
}

// Constrained-Poisson rates must sum to the frame total m.
inline CheckResult check_count_conservation(std::uint64_t seed, int draws,
                                            double rel_tol) {
  CheckResult result{"count-rate-conservation", true, ""};
  Rng rng(mix_seed(seed, 0x03));
  double worst = 0.0;
  for (int trial = 0; trial < draws; ++trial) {
    ModelConfig config;
    config.visible = 1 + static_cast<Eigen::Index>(6.0 * rng.uniform());
    config.hidden = 1 + static_cast<Eigen::Index>(5.0 * rng.uniform());
    config.labels = 2;
    config.history = 1;
    config.units = UnitKind::Count;

    const ModelParams params = detail::random_params(config, rng, 1.5);
    const HistoryWindow history = detail::random_history(config, rng);
    Eigen::VectorXd hidden(config.hidden);
    for (Eigen::Index j = 0; j < config.hidden; ++j) {
      hidden[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    const double m = std::floor(101.0 * rng.uniform());
    const Eigen::VectorXd rates =
        visible_conditional(config, params, hidden, history, m);
    const double rel = std::abs(rates.sum() - m) / std::max(m, 1.0);
    worst = std::max(worst, rel);
  }
  result.passed = worst <= rel_tol;
  result.detail = "max relative deviation of rate sums " +
                  detail::format_double(worst) + " (tolerance " +
                  detail::format_double(rel_tol) + ", " +
                  std::to_string(draws) + " draws)";
  return result;
}

// On data sampled exactly from a fixed tiny Binary model, every CD delta must
// average to zero within 3 sigma of its empirical mean distribution.
inline CheckResult check_cd_equilibrium(std::uint64_t seed, int sample_count) {
  CheckResult result{"cd-equilibrium", true, ""};
  ModelConfig config;
  config.visible = 2;
  config.hidden = 2;
  config.labels = 2;
  config.history = 1;
  config.units = UnitKind::Binary;

  Rng rng(mix_seed(seed, 0x04));
  const ModelParams params = detail::random_params(config, rng, 0.7);
  const HistoryWindow history = detail::random_history(config, rng);
  const DynamicBiases bias = dynamic_biases(config, params, history);

  // Exact joint p(v, y | history) by enumerating v in {0,1}^V and y, with the
  // hidden layer summed out analytically.
  const Eigen::Index v_states = 1 << config.visible;
  Eigen::VectorXd joint(v_states * config.labels);
  for (Eigen::Index bits = 0; bits < v_states; ++bits) {
    Eigen::VectorXd v(config.visible);
    for (Eigen::Index i = 0; i < config.visible; ++i) {
      v[i] = (bits >> i) & 1 ? 1.0 : 0.0;
    }
    const Eigen::VectorXd hidden_in =
        bias.hidden + params.weights.transpose() * v;
    for (Eigen::Index y = 0; y < config.labels; ++y) {
      double log_w = bias.visible.dot(v) + params.label_bias[y];
      for (Eigen::Index j = 0; j < config.hidden; ++j) {
        log_w += detail::softplus(hidden_in[j] + params.label_weights(j, y));
      }
      joint[y * v_states + bits] = std::exp(log_w);
    }
  }
  joint /= joint.sum();

  Eigen::VectorXd mean, m2;
  for (int i = 0; i < sample_count; ++i) {
    const Eigen::Index pick = rng.categorical(joint);
    const Eigen::Index bits = pick % v_states;
    Sample sample;
    sample.history = history;
    Eigen::VectorXd v(config.visible);
    for (Eigen::Index k = 0; k < config.visible; ++k) {
      v[k] = (bits >> k) & 1 ? 1.0 : 0.0;
    }
    sample.frame = make_frame(config, v);
    sample.label = Label{pick / v_states, config.labels};

    const ParamDeltas deltas =
        cd_gradients(config, params, std::span<const Sample>(&sample, 1),
                     mix_seed(seed, 0x05, static_cast<std::uint64_t>(i)), 1);
    const Eigen::VectorXd flat = detail::flatten_deltas(config, deltas);
    if (i == 0) {
      mean = Eigen::VectorXd::Zero(flat.size());
      m2 = Eigen::VectorXd::Zero(flat.size());
    }
    const Eigen::VectorXd delta_to_mean = flat - mean;
    mean += delta_to_mean / static_cast<double>(i + 1);
    m2 += delta_to_mean.cwiseProduct(flat - mean);
  }

  const double n = static_cast<double>(sample_count);
  double worst_z = 0.0;
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    const double sigma_mean = std::sqrt(m2[k] / (n - 1.0) / n);
    if (sigma_mean == 0.0) {
      if (mean[k] != 0.0) worst_z = std::numeric_limits<double>::infinity();
      continue;
    }
    worst_z = std::max(worst_z, std::abs(mean[k]) / sigma_mean);
  }
  result.passed = worst_z <= 3.0;
  result.detail = "max |z| over " + std::to_string(mean.size()) +
                  " delta entries: " + detail::format_double(worst_z) +
                  " (limit 3, " + std::to_string(sample_count) + " samples)";
  return result;
}

// aggregate_labels against a brute-force any-in-window scan.
inline CheckResult check_label_aggregation(std::uint64_t seed, int trials) {
  CheckResult result{"label-aggregation", true, ""};
  Rng rng(mix_seed(seed, 0x06));
  const int windows[] = {1, 4, 128};
  int checked = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const Eigen::Index t_len =
        2 + static_cast<Eigen::Index>(511.0 * rng.uniform());
    const double p = 0.02 + 0.3 * rng.uniform();
    std::vector<int> stream(static_cast<std::size_t>(t_len));
    for (int& x : stream) x = rng.bernoulli(p) ? 1 : 0;
    for (const int window : windows) {
      if (t_len <= window) continue;
      const std::vector<int> got = aggregate_labels(stream, window);
      for (std::size_t t = 0; t + window < stream.size(); ++t) {
        int any = 0;
        for (std::size_t u = t; u <= t + static_cast<std::size_t>(window); ++u) {
          if (stream[u] != 0) any = 1;
        }
        if (got[t] != any) {
          result.passed = false;
          result.detail = "T=" + std::to_string(t_len) + " W=" +
                          std::to_string(window) + " t=" + std::to_string(t) +
                          ": got " + std::to_string(got[t]) + ", expected " +
                          std::to_string(any);
          return result;
        }
      }
      ++checked;
    }
  }
  result.detail = "exact match on " + std::to_string(checked) +
                  " stream/window combinations";
  return result;
}

// Hand-computed confusion scores and the never-miss predictor convention.
inline CheckResult check_metric_formulas(double tol) {
  CheckResult result{"metric-formulas", true, ""};
  const ScoreSet set = score(ConfusionCounts{40, 10, 30, 20});
  const double expected[][2] = {{set.precision, 0.8},
                                {set.recall, 2.0 / 3.0},
                                {set.f1, 0.727272727272727},
                                {set.mcc, 0.408248290463863},
                                {set.accuracy, 0.7}};
  double worst = 0.0;
  for (const auto& pair : expected) {
    worst = std::max(worst, std::abs(pair[0] - pair[1]));
  }

  std::vector<int> truth(100, 0);
  for (int i = 0; i < 10; ++i) truth[static_cast<std::size_t>(i * 7)] = 1;
  const std::vector<int> never(100, 0);
  const ScoreSet never_set = score(confusion(never, truth));
  const bool never_ok = never_set.f1 == 0.0 && never_set.mcc == 0.0;

  result.passed = worst <= tol && never_ok;
  result.detail = "max |observed - expected| " + detail::format_double(worst) +
                  " (tolerance " + detail::format_double(tol) +
                  "); never-miss F1=" + detail::format_double(never_set.f1) +
                  " MCC=" + detail::format_double(never_set.mcc);
  return result;
}

// Serialization round-trip must preserve classify outputs bit-exactly.
inline CheckResult check_serialization_roundtrip(std::uint64_t seed) {
  CheckResult result{"serialization-roundtrip", true, ""};
  Rng rng(mix_seed(seed, 0x07));
  ModelConfig config;
  config.visible = 3;
  config.hidden = 5;
  config.labels = 2;
  config.history = 2;
  config.units = UnitKind::Count;
  const ModelParams params = detail::random_params(config, rng, 0.6);

  const ModelFile original{config, params, nlohmann::json()};
  const std::string text = model_to_json(original).dump();
  const ModelFile loaded = model_from_json(nlohmann::json::parse(text));

  if (!detail::params_equal(original.params, loaded.params)) {
    result.passed = false;
    result.detail = "parameter tensors changed across the round-trip";
    return result;
  }
  for (int trial = 0; trial < 20; ++trial) {
    const Frame frame = detail::random_frame(config, rng);
    const HistoryWindow history = detail::random_history(config, rng);
    const LabelScores before = classify(config, params, frame, history);
    const LabelScores after =
        classify(loaded.config, loaded.params, frame, history);
    if (before.scores != after.scores || before.posterior != after.posterior ||
        before.predicted != after.predicted) {
      result.passed = false;
      result.detail = "classify output differs after round-trip on trial " +
                      std::to_string(trial);
      return result;
    }
  }
  result.detail = "bit-exact classify outputs on 20 random inputs";
  return result;
}

// Same seed, same data: bit-identical report and final parameters.
inline CheckResult check_train_determinism(std::uint64_t seed) {
  CheckResult result{"train-determinism", true, ""};
  ModelConfig config;
  config.visible = 3;
  config.hidden = 3;
  config.labels = 2;
  config.history = 2;
  config.units = UnitKind::Count;

  Rng rng(mix_seed(seed, 0x08));
  std::vector<Sample> train_set, eval_set;
  for (int i = 0; i < 24; ++i) {
    Sample sample;
    sample.history = detail::random_history(config, rng);
    sample.frame = detail::random_frame(config, rng);
    sample.label = Label{rng.bernoulli(0.5) ? 1 : 0, 2};
    sample.origin_t = i;
    (i < 16 ? train_set : eval_set).push_back(std::move(sample));
  }

  TrainConfig train_config;
  train_config.learning_rate = 1e-4;
  train_config.epochs = 5;
  train_config.batch_size = 8;
  train_config.eval_every = 2;
  train_config.seed = mix_seed(seed, 0x09);
  train_config.shuffle = true;

  const ModelParams init =
      initialize_for_dataset(config, train_config.seed, train_set);
  const TrainResult first = train(config, init, train_set, eval_set, train_config);
  const TrainResult second = train(config, init, train_set, eval_set, train_config);

  const std::string csv_first = train_report_csv(first.report);
  const std::string csv_second = train_report_csv(second.report);
  if (csv_first != csv_second) {
    result.passed = false;
    result.detail = "train reports differ between identical runs";
    return result;
  }
  if (!detail::params_equal(first.params, second.params)) {
    result.passed = false;
    result.detail = "final parameters differ between identical runs";
    return result;
  }
  result.detail = "reports and final parameters bit-identical across reruns";
  return result;
}

inline std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options) {
  std::vector<CheckResult> results;
  results.push_back(check_classification_oracle(options.seed, 120, 1e-6,
                                                options.score_perturbation));
  results.push_back(check_conditional_oracle(options.seed, 120, 1e-9));
  results.push_back(check_count_conservation(options.seed, 1000, 1e-10));
  results.push_back(check_cd_equilibrium(options.seed, 10000));
  results.push_back(check_label_aggregation(options.seed, 40));
  results.push_back(check_metric_formulas(1e-4));
  results.push_back(check_serialization_roundtrip(options.seed));
  results.push_back(check_train_determinism(options.seed));
  return results;
}

}  // namespace dcrbm
