// Shared fixture: a 2x2 count model with hand-set parameters. The pinned
// expected values in the tests were derived from these numbers by hand.
#pragma once

#include <Eigen/Core>

#include "dcrbm/model.hpp"

namespace support {

inline dcrbm::ModelConfig tiny_config(dcrbm::UnitKind kind = dcrbm::UnitKind::Count) {
  dcrbm::ModelConfig config;
  config.visible = 2;
  config.hidden = 2;
  config.labels = 2;
  config.history = 1;
  config.units = kind;
  return config;
}

inline dcrbm::ModelParams tiny_params() {
  dcrbm::ModelParams params;
  params.weights.resize(2, 2);
  params.weights << 0.2, -0.1,
                    0.05, 0.3;
  params.visible_bias.resize(2);
  params.visible_bias << 0.1, -0.2;
  params.hidden_bias.resize(2);
  params.hidden_bias << 0.05, -0.15;
  params.past_to_visible.resize(2, 2);
  params.past_to_visible << 0.02, -0.03,
                            0.01, 0.04;
  params.past_to_hidden.resize(2, 2);
  params.past_to_hidden << -0.02, 0.03,
                           0.05, -0.01;
  params.label_weights.resize(2, 2);
  params.label_weights << 0.3, -0.2,
                          -0.1, 0.15;
  params.label_bias.resize(2);
  params.label_bias << 0.05, -0.05;
  return params;
}

inline dcrbm::HistoryWindow tiny_history() {
  dcrbm::HistoryWindow history;
  history.values.resize(2);
  history.values << 2.0, 5.0;
  return history;
}

inline dcrbm::HistoryWindow zero_history(const dcrbm::ModelConfig& config) {
  dcrbm::HistoryWindow history;
  history.values = Eigen::VectorXd::Zero(config.history_dim());
  return history;
}

// v = (3, 1), m = 4.
inline dcrbm::Frame count_frame() {
  dcrbm::Frame frame;
  frame.values.resize(2);
  frame.values << 3.0, 1.0;
  frame.total = 4.0;
  return frame;
}

}  // namespace support
