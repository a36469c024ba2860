// Conditional RBM with a discriminative label layer, for binary, real and
// count-valued visible units. Visible and hidden biases are shifted by linear
// functions of the previous N visible frames; count frames use a constrained
// Poisson conditional whose rates are normalized to the frame total.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "dcrbm/rng.hpp"

namespace dcrbm {

enum class UnitKind { Binary, Real, Count };

inline std::string to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::Binary: return "binary";
    case UnitKind::Real: return "real";
    case UnitKind::Count: return "count";
  }
  throw std::logic_error("unreachable unit kind");
}

inline UnitKind unit_kind_from_string(const std::string& name) {
  if (name == "binary") return UnitKind::Binary;
  if (name == "real") return UnitKind::Real;
  if (name == "count") return UnitKind::Count;
  throw std::invalid_argument("unknown unit kind '" + name +
                              "' (expected binary, real or count)");
}

namespace detail {

inline void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x), stable over the whole double range.
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double log_factorial(double n) { return std::lgamma(n + 1.0); }

// Softmax with max subtraction.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  Eigen::VectorXd e = (x.array() - m).exp();
  return e / e.sum();
}

}  // namespace detail

struct ModelConfig {
  Eigen::Index visible = 0;  // units per frame
  Eigen::Index hidden = 0;
  Eigen::Index labels = 2;
  Eigen::Index history = 1;  // number of conditioning frames
  UnitKind units = UnitKind::Count;

  Eigen::Index history_dim() const { return history * visible; }

  void validate() const {
    detail::require(visible >= 1, "visible_dim must be >= 1");
    detail::require(hidden >= 1, "hidden_dim must be >= 1");
    detail::require(labels >= 1, "label_dim must be >= 1");
    detail::require(history >= 1, "history_len must be >= 1");
  }
};

// All learnable tensors. The autoregressive matrices act on the flattened
// history vector, oldest frame first.
struct ModelParams {
  Eigen::MatrixXd weights;          // visible x hidden
  Eigen::VectorXd visible_bias;     // visible
  Eigen::VectorXd hidden_bias;      // hidden
  Eigen::MatrixXd past_to_visible;  // (history * visible) x visible
  Eigen::MatrixXd past_to_hidden;   // (history * visible) x hidden
  Eigen::MatrixXd label_weights;    // hidden x labels
  Eigen::VectorXd label_bias;       // labels

  bool all_finite() const {
    return weights.allFinite() && visible_bias.allFinite() &&
           hidden_bias.allFinite() && past_to_visible.allFinite() &&
           past_to_hidden.allFinite() && label_weights.allFinite() &&
           label_bias.allFinite();
  }
};

// One observed frame. For count units `total` is the frame sum m; the other
// kinds ignore it.
struct Frame {
  Eigen::VectorXd values;
  double total = 0.0;
};

// Concatenation of the previous N frames, oldest first.
struct HistoryWindow {
  Eigen::VectorXd values;
};

struct Label {
  Eigen::Index index = 0;
  Eigen::Index classes = 2;

  Eigen::VectorXd one_hot() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(classes);
    y[index] = 1.0;
    return y;
  }

  void validate() const {
    detail::require(classes >= 1, "label must have at least one class");
    detail::require(index >= 0 && index < classes,
                    "label index " + std::to_string(index) +
                        " out of range for " + std::to_string(classes) +
                        " classes");
  }
};

// Effective per-step biases after folding in the history contribution.
struct DynamicBiases {
  Eigen::VectorXd visible;
  Eigen::VectorXd hidden;
};

namespace detail {

inline void check_shapes(const ModelConfig& config, const ModelParams& params) {
  config.validate();
  const Eigen::Index nv = config.history_dim();
  require(params.weights.rows() == config.visible &&
              params.weights.cols() == config.hidden,
          "weights must be visible x hidden");
  require(params.visible_bias.size() == config.visible,
          "visible_bias must have length visible");
  require(params.hidden_bias.size() == config.hidden,
          "hidden_bias must have length hidden");
  require(params.past_to_visible.rows() == nv &&
              params.past_to_visible.cols() == config.visible,
          "past_to_visible must be (history*visible) x visible");
  require(params.past_to_hidden.rows() == nv &&
              params.past_to_hidden.cols() == config.hidden,
          "past_to_hidden must be (history*visible) x hidden");
  require(params.label_weights.rows() == config.hidden &&
              params.label_weights.cols() == config.labels,
          "label_weights must be hidden x labels");
  require(params.label_bias.size() == config.labels,
          "label_bias must have length labels");
}

inline void check_history(const ModelConfig& config, const HistoryWindow& history) {
  require(history.values.size() == config.history_dim(),
          "history window must have length history*visible = " +
              std::to_string(config.history_dim()) + ", got " +
              std::to_string(history.values.size()));
  require(history.values.allFinite(), "history window contains non-finite values");
}

inline void check_frame(const ModelConfig& config, const Frame& frame) {
  require(frame.values.size() == config.visible,
          "frame must have length visible = " + std::to_string(config.visible) +
              ", got " + std::to_string(frame.values.size()));
  require(frame.values.allFinite(), "frame contains non-finite values");
  switch (config.units) {
    case UnitKind::Binary:
      for (Eigen::Index i = 0; i < frame.values.size(); ++i) {
        require(frame.values[i] == 0.0 || frame.values[i] == 1.0,
                "binary frame entries must be 0 or 1");
      }
      break;
    case UnitKind::Count: {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < frame.values.size(); ++i) {
        const double v = frame.values[i];
        require(v >= 0.0 && v == std::floor(v),
                "count frame entries must be nonnegative integers");
        sum += v;
      }
      require(frame.total == sum, "count frame total must equal the entry sum");
      break;
    }
    case UnitKind::Real:
      break;
  }
}

inline void check_hidden(const ModelConfig& config, const Eigen::VectorXd& hidden) {
  require(hidden.size() == config.hidden,
          "hidden vector must have length hidden = " +
              std::to_string(config.hidden));
}

}  // namespace detail

// Builds a frame from raw values, computing the count total.
inline Frame make_frame(const ModelConfig& config, Eigen::VectorXd values) {
  Frame frame{std::move(values), 0.0};
  if (config.units == UnitKind::Count) frame.total = frame.values.sum();
  detail::check_frame(config, frame);
  return frame;
}

// c_i = a_i + sum_p A_{p,i} hist_p ; d_j = b_j + sum_p B_{p,j} hist_p
inline DynamicBiases dynamic_biases(const ModelConfig& config,
                                    const ModelParams& params,
                                    const HistoryWindow& history) {
  detail::check_shapes(config, params);
  detail::check_history(config, history);
  return DynamicBiases{
      params.visible_bias + params.past_to_visible.transpose() * history.values,
      params.hidden_bias + params.past_to_hidden.transpose() * history.values};
}

// Joint energy of (frame, hidden) given the history. Lower is more probable.
inline double energy(const ModelConfig& config, const ModelParams& params,
                     const Frame& frame, const Eigen::VectorXd& hidden,
                     const HistoryWindow& history) {
  detail::check_frame(config, frame);
  detail::check_hidden(config, hidden);
  const DynamicBiases bias = dynamic_biases(config, params, history);
  const Eigen::VectorXd& v = frame.values;

  const double interaction = v.dot(params.weights * hidden);
  const double hidden_term = bias.hidden.dot(hidden);

  double visible_term = 0.0;
  switch (config.units) {
    case UnitKind::Real:
      visible_term = 0.5 * (bias.visible - v).squaredNorm();
      break;
    case UnitKind::Binary:
      visible_term = -bias.visible.dot(v);
      break;
    case UnitKind::Count:
      visible_term = -bias.visible.dot(v);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        visible_term += detail::log_factorial(v[i]);
      }
      break;
  }
  return visible_term - hidden_term - interaction;
}

// Energy extended with the label couplings: the generative energy minus
// h.U[:,l] and minus the label bias of the active class.
inline double discriminative_energy(const ModelConfig& config,
                                    const ModelParams& params,
                                    const Frame& frame,
                                    const Eigen::VectorXd& hidden,
                                    const Label& label,
                                    const HistoryWindow& history) {
  label.validate();
  detail::require(label.classes == config.labels,
                  "label class count does not match model label_dim");
  const double base = energy(config, params, frame, hidden, history);
  return base - hidden.dot(params.label_weights.col(label.index)) -
         params.label_bias[label.index];
}

// p(h_j = 1 | v, [y,] history), factorial across j.
inline Eigen::VectorXd hidden_prob(const ModelConfig& config,
                                   const ModelParams& params,
                                   const Frame& frame,
                                   const HistoryWindow& history,
                                   const std::optional<Label>& label = {}) {
  detail::check_frame(config, frame);
  const DynamicBiases bias = dynamic_biases(config, params, history);
  Eigen::VectorXd input = bias.hidden + params.weights.transpose() * frame.values;
  if (label) {
    label->validate();
    detail::require(label->classes == config.labels,
                    "label class count does not match model label_dim");
    input += params.label_weights.col(label->index);
  }
  return input.unaryExpr([](double x) { return detail::sigmoid(x); });
}

// Per-unit parameters of p(v_i | h, history): means for real units, Bernoulli
// probabilities for binary units, Poisson rates for count units. Count rates
// are normalized so they sum to the frame total m; m = 0 gives all-zero rates.
// `hidden` may hold probabilities for mean-field use.
inline Eigen::VectorXd visible_conditional(const ModelConfig& config,
                                           const ModelParams& params,
                                           const Eigen::VectorXd& hidden,
                                           const HistoryWindow& history,
                                           double total = 0.0) {
  detail::check_hidden(config, hidden);
  const DynamicBiases bias = dynamic_biases(config, params, history);
  Eigen::VectorXd activation = bias.visible + params.weights * hidden;
  switch (config.units) {
    case UnitKind::Real:
      return activation;
    case UnitKind::Binary:
      return activation.unaryExpr([](double x) { return detail::sigmoid(x); });
    case UnitKind::Count: {
      detail::require(total >= 0.0, "count frame total must be >= 0");
      if (total == 0.0) return Eigen::VectorXd::Zero(config.visible);
      return total * detail::softmax(activation);
    }
  }
  throw std::logic_error("unreachable unit kind");
}

// p(y | h) = softmax(s + U^T h). Accepts mean-field hidden probabilities.
inline Eigen::VectorXd label_prob(const ModelConfig& config,
                                  const ModelParams& params,
                                  const Eigen::VectorXd& hidden) {
  detail::check_hidden(config, hidden);
  return detail::softmax(params.label_bias +
                         params.label_weights.transpose() * hidden);
}

// Weights uniform in (-0.01, 0.01) from the seed, biases zero. Count models
// trained on data refine the visible bias afterwards (see training).
inline ModelParams initialize_params(const ModelConfig& config,
                                     std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const auto fill = [&rng](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        m(i, j) = 0.02 * rng.uniform() - 0.01;
      }
    }
  };
  ModelParams params;
  params.weights.resize(config.visible, config.hidden);
  params.past_to_visible.resize(config.history_dim(), config.visible);
  params.past_to_hidden.resize(config.history_dim(), config.hidden);
  params.label_weights.resize(config.hidden, config.labels);
  fill(params.weights);
  fill(params.past_to_visible);
  fill(params.past_to_hidden);
  fill(params.label_weights);
  params.visible_bias = Eigen::VectorXd::Zero(config.visible);
  params.hidden_bias = Eigen::VectorXd::Zero(config.hidden);
  params.label_bias = Eigen::VectorXd::Zero(config.labels);
  return params;
}

}  // namespace dcrbm
