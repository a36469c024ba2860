// Model checkpoints as a single self-describing JSON document: the config,
// a format version, and every tensor as a named row-major array. Doubles are
// written with shortest round-trip precision, so save/load reproduces the
// model bit-exactly.
#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dcrbm/model.hpp"

namespace dcrbm {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  ModelConfig config;
  ModelParams params;
  nlohmann::json metadata;  // free-form provenance, preserved on round-trip
};

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json array = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      array.push_back(m(i, j));
    }
  }
  return array;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json array = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) array.push_back(v[i]);
  return array;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& array,
                                        Eigen::Index rows, Eigen::Index cols,
                                        const std::string& name) {
  require(array.is_array() &&
              static_cast<Eigen::Index>(array.size()) == rows * cols,
          "model file: tensor '" + name + "' must hold " +
              std::to_string(rows * cols) + " values");
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index flat = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = array[static_cast<std::size_t>(flat++)].get<double>();
    }
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& array,
                                        Eigen::Index size,
                                        const std::string& name) {
  require(array.is_array() && static_cast<Eigen::Index>(array.size()) == size,
          "model file: tensor '" + name + "' must hold " +
              std::to_string(size) + " values");
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    v[i] = array[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelFile& model) {
  detail::check_shapes(model.config, model.params);
  nlohmann::json doc;
  doc["format"] = "dcrbm-model";
  doc["format_version"] = kModelFormatVersion;
  doc["history_order"] = "oldest_first";
  doc["layout"] = "row_major";
  doc["config"] = {{"visible", model.config.visible},
                   {"hidden", model.config.hidden},
                   {"labels", model.config.labels},
                   {"history", model.config.history},
                   {"units", to_string(model.config.units)}};
  doc["params"] = {
      {"weights", detail::matrix_to_json(model.params.weights)},
      {"visible_bias", detail::vector_to_json(model.params.visible_bias)},
      {"hidden_bias", detail::vector_to_json(model.params.hidden_bias)},
      {"past_to_visible", detail::matrix_to_json(model.params.past_to_visible)},
      {"past_to_hidden", detail::matrix_to_json(model.params.past_to_hidden)},
      {"label_weights", detail::matrix_to_json(model.params.label_weights)},
      {"label_bias", detail::vector_to_json(model.params.label_bias)}};
  if (!model.metadata.is_null()) doc["metadata"] = model.metadata;
  return doc;
}

inline ModelFile model_from_json(const nlohmann::json& doc) {
  detail::require(doc.is_object() && doc.value("format", "") == "dcrbm-model",
                  "model file: missing 'format: dcrbm-model' tag");
  detail::require(doc.value("format_version", -1) == kModelFormatVersion,
                  "model file: unsupported format_version");
  detail::require(doc.contains("config") && doc.contains("params"),
                  "model file: missing config or params");

  const nlohmann::json& cfg = doc["config"];
  ModelFile model;
  model.config.visible = cfg.at("visible").get<Eigen::Index>();
  model.config.hidden = cfg.at("hidden").get<Eigen::Index>();
  model.config.labels = cfg.at("labels").get<Eigen::Index>();
  model.config.history = cfg.at("history").get<Eigen::Index>();
  model.config.units = unit_kind_from_string(cfg.at("units").get<std::string>());
  model.config.validate();

  const Eigen::Index v = model.config.visible;
  const Eigen::Index h = model.config.hidden;
  const Eigen::Index l = model.config.labels;
  const Eigen::Index nv = model.config.history_dim();
  const nlohmann::json& params = doc["params"];
  const auto tensor = [&params](const std::string& name) -> const nlohmann::json& {
    detail::require(params.contains(name), "model file: missing tensor '" + name + "'");
    return params[name];
  };
  model.params.weights = detail::matrix_from_json(tensor("weights"), v, h, "weights");
  model.params.visible_bias =
      detail::vector_from_json(tensor("visible_bias"), v, "visible_bias");
  model.params.hidden_bias =
      detail::vector_from_json(tensor("hidden_bias"), h, "hidden_bias");
  model.params.past_to_visible = detail::matrix_from_json(
      tensor("past_to_visible"), nv, v, "past_to_visible");
  model.params.past_to_hidden =
      detail::matrix_from_json(tensor("past_to_hidden"), nv, h, "past_to_hidden");
  model.params.label_weights =
      detail::matrix_from_json(tensor("label_weights"), h, l, "label_weights");
  model.params.label_bias =
      detail::vector_from_json(tensor("label_bias"), l, "label_bias");
  if (doc.contains("metadata")) model.metadata = doc["metadata"];
  return model;
}

inline void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write model file: " + path);
  out << model_to_json(model).dump(2) << '\n';
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("model file " + path + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace dcrbm
