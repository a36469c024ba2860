// Label scoring and classification by analytic marginalization of the hidden
// layer, the block Gibbs step shared with training, and a brute-force
// enumeration oracle for verification on small models.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

struct LabelScores {
  Eigen::VectorXd scores;     // higher = more probable, one per class
  Eigen::VectorXd posterior;  // softmax of scores
  Eigen::Index predicted = 0;
};

// Unnormalized log-probability of class l given the frame and history, with
// the hidden layer summed out:
//   score(l) = s_l + sum_j softplus(d_j + u_jl + sum_i v_i w_ij)
// Terms independent of l are dropped, so only score differences are
// meaningful across classes.
inline double free_energy_score(const ModelConfig& config,
                                const ModelParams& params, const Frame& frame,
                                const HistoryWindow& history,
                                Eigen::Index label_index) {
  detail::require(label_index >= 0 && label_index < config.labels,
                  "label index out of range");
  detail::check_frame(config, frame);
  const DynamicBiases bias = dynamic_biases(config, params, history);
  const Eigen::VectorXd input = bias.hidden +
                                params.weights.transpose() * frame.values +
                                params.label_weights.col(label_index);
  double score = params.label_bias[label_index];
  for (Eigen::Index j = 0; j < input.size(); ++j) {
    score += detail::softplus(input[j]);
  }
  return score;
}

// Scores every class; ties break toward the smaller index.
inline LabelScores classify(const ModelConfig& config,
                            const ModelParams& params, const Frame& frame,
                            const HistoryWindow& history) {
  LabelScores result;
  result.scores.resize(config.labels);
  for (Eigen::Index l = 0; l < config.labels; ++l) {
    result.scores[l] = free_energy_score(config, params, frame, history, l);
  }
  result.posterior = detail::softmax(result.scores);
  result.predicted = 0;
  for (Eigen::Index l = 1; l < config.labels; ++l) {
    if (result.scores[l] > result.scores[result.predicted]) result.predicted = l;
  }
  return result;
}

// One bottom-up / top-down sweep. Returns both the samples and the exact
// distribution parameters they were drawn from.
struct GibbsStep {
  Eigen::VectorXd hidden_prob;    // p(h | v, y, history)
  Eigen::VectorXd hidden_sample;  // 0/1 draw from hidden_prob
  Eigen::VectorXd visible_param;  // mean / probability / rate per unit
  Frame visible_sample;
  Eigen::VectorXd label_dist;     // p(y | hidden_sample)
  Label label_sample;
};

inline GibbsStep gibbs_step(const ModelConfig& config,
                            const ModelParams& params, const Frame& frame,
                            const Label& label, const HistoryWindow& history,
                            Rng& rng) {
  GibbsStep step;
  step.hidden_prob = hidden_prob(config, params, frame, history, label);
  step.hidden_sample.resize(config.hidden);
  for (Eigen::Index j = 0; j < config.hidden; ++j) {
    step.hidden_sample[j] = rng.bernoulli(step.hidden_prob[j]) ? 1.0 : 0.0;
  }

  step.visible_param = visible_conditional(config, params, step.hidden_sample,
                                           history, frame.total);
  step.visible_sample.values.resize(config.visible);
  step.visible_sample.total = 0.0;
  for (Eigen::Index i = 0; i < config.visible; ++i) {
    switch (config.units) {
      case UnitKind::Real:
        step.visible_sample.values[i] = step.visible_param[i] + rng.normal();
        break;
      case UnitKind::Binary:
        step.visible_sample.values[i] =
            rng.bernoulli(step.visible_param[i]) ? 1.0 : 0.0;
        break;
      case UnitKind::Count: {
        const double count = static_cast<double>(rng.poisson(step.visible_param[i]));
        step.visible_sample.values[i] = count;
        step.visible_sample.total += count;
        break;
      }
    }
  }

  step.label_dist = label_prob(config, params, step.hidden_sample);
  step.label_sample = Label{rng.categorical(step.label_dist), config.labels};
  return step;
}

// log sum_h exp(-E(y_l, v, h | history)) for every class, by enumerating all
// 2^H hidden states. Verification oracle; refuses models it cannot enumerate.
inline Eigen::VectorXd enumerate_label_logits(const ModelConfig& config,
                                              const ModelParams& params,
                                              const Frame& frame,
                                              const HistoryWindow& history) {
  detail::require(config.hidden <= 20,
                  "enumeration supports at most 20 hidden units, got " +
                      std::to_string(config.hidden));
  const std::uint64_t state_count = 1ull << config.hidden;
  Eigen::VectorXd logits(config.labels);
  Eigen::VectorXd hidden(config.hidden);
  for (Eigen::Index l = 0; l < config.labels; ++l) {
    const Label label{l, config.labels};
    double max_neg_energy = -std::numeric_limits<double>::infinity();
    std::vector<double> neg_energies(state_count);
    for (std::uint64_t bits = 0; bits < state_count; ++bits) {
      for (Eigen::Index j = 0; j < config.hidden; ++j) {
        hidden[j] = (bits >> j) & 1u ? 1.0 : 0.0;
      }
      const double neg =
          -discriminative_energy(config, params, frame, hidden, label, history);
      neg_energies[bits] = neg;
      max_neg_energy = std::max(max_neg_energy, neg);
    }
    double acc = 0.0;
    for (const double neg : neg_energies) {
      acc += std::exp(neg - max_neg_energy);
    }
    logits[l] = max_neg_energy + std::log(acc);
  }
  return logits;
}

}  // namespace dcrbm
