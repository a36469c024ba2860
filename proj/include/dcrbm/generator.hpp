// Synthetic trace generator: a Markov chain over activities, each emitting
// per-cycle Poisson instruction counts and Bernoulli miss events. Stands in
// for a cycle-accurate simulator at desk scale.
//
// Config files are flat key = value lines; matrix rows are comma-separated:
//   activities = 2
//   length = 20000
//   seed = 7
//   transition_0 = 0.998,0.002
//   transition_1 = 0.002,0.998
//   rates_0 = 0.6,0.4,0.3,0.2,0,0,0
//   rates_1 = 0,0,0,0,0.7,0.5,0.3
//   miss_prob = 0.0005,0.05
//   categories = int_alu,fp_alu,load,store,branch,sync,misc   (optional)
#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"
#include "dcrbm/trace.hpp"

namespace dcrbm {

inline const std::vector<std::string>& default_categories() {
  static const std::vector<std::string> names = {
      "int_alu", "fp_alu", "load", "store", "branch", "sync", "misc"};
  return names;
}

struct GeneratorConfig {
  Eigen::Index activities = 0;          // K
  Eigen::MatrixXd transition;           // K x K, rows sum to 1
  Eigen::MatrixXd rates;                // K x V Poisson rates
  Eigen::VectorXd miss_prob;            // per-cycle miss probability per activity
  Eigen::Index length = 0;              // cycles to emit
  std::uint64_t seed = 0;
  std::vector<std::string> categories;  // size V; defaulted when empty

  Eigen::Index num_categories() const { return rates.cols(); }

  void validate() const {
    detail::require(activities >= 1, "generator needs at least one activity");
    detail::require(length >= 1, "generator length must be >= 1");
    detail::require(transition.rows() == activities && transition.cols() == activities,
                    "transition must be activities x activities");
    detail::require(rates.rows() == activities && rates.cols() >= 1,
                    "rates must be activities x categories");
    detail::require(miss_prob.size() == activities,
                    "miss_prob must have one entry per activity");
    for (Eigen::Index k = 0; k < activities; ++k) {
      detail::require((transition.row(k).array() >= 0.0).all(),
                      "transition entries must be >= 0");
      detail::require(std::abs(transition.row(k).sum() - 1.0) <= 1e-9,
                      "transition row " + std::to_string(k) +
                          " must sum to 1 (got " +
                          std::to_string(transition.row(k).sum()) + ")");
      detail::require(miss_prob[k] >= 0.0 && miss_prob[k] <= 1.0,
                      "miss_prob entries must be in [0, 1]");
    }
    detail::require((rates.array() >= 0.0).all(), "rates must be >= 0");
    if (!categories.empty()) {
      detail::require(static_cast<Eigen::Index>(categories.size()) == rates.cols(),
                      "categories must match the rates column count");
    }
  }

  std::vector<std::string> resolved_categories() const {
    if (!categories.empty()) return categories;
    if (rates.cols() == static_cast<Eigen::Index>(default_categories().size())) {
      return default_categories();
    }
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < rates.cols(); ++i) {
      names.push_back("cat" + std::to_string(i));
    }
    return names;
  }
};

namespace detail {

inline Eigen::VectorXd parse_number_list(const std::string& text,
                                         const std::string& key) {
  std::vector<double> values;
  std::istringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("generator config: bad number '" + item +
                                  "' in " + key);
    }
  }
  require(!values.empty(), "generator config: empty list for " + key);
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

inline std::string trim(const std::string& text) {
  std::size_t first = text.find_first_not_of(" \t\r");
  std::size_t last = text.find_last_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return text.substr(first, last - first + 1);
}

}  // namespace detail

inline GeneratorConfig load_generator_config(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("generator config line " +
                                  std::to_string(line_no) +
                                  ": expected key = value");
    }
    entries[detail::trim(stripped.substr(0, eq))] =
        detail::trim(stripped.substr(eq + 1));
  }

  const auto required = [&entries](const std::string& key) -> const std::string& {
    const auto it = entries.find(key);
    if (it == entries.end()) {
      throw std::invalid_argument("generator config: missing key '" + key + "'");
    }
    return it->second;
  };
  const auto to_count = [](const std::string& text, const std::string& key) {
    try {
      const long long value = std::stoll(text);
      detail::require(value >= 1, "generator config: " + key + " must be >= 1");
      return static_cast<Eigen::Index>(value);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("generator config: bad integer for " + key);
    }
  };

  GeneratorConfig config;
  config.activities = to_count(required("activities"), "activities");
  config.length = to_count(required("length"), "length");
  if (entries.count("seed")) {
    config.seed = std::stoull(entries.at("seed"));
  }
  config.miss_prob = detail::parse_number_list(required("miss_prob"), "miss_prob");

  for (Eigen::Index k = 0; k < config.activities; ++k) {
    const std::string t_key = "transition_" + std::to_string(k);
    const std::string r_key = "rates_" + std::to_string(k);
    const Eigen::VectorXd t_row = detail::parse_number_list(required(t_key), t_key);
    const Eigen::VectorXd r_row = detail::parse_number_list(required(r_key), r_key);
    if (k == 0) {
      config.transition.resize(config.activities, t_row.size());
      config.rates.resize(config.activities, r_row.size());
    }
    detail::require(t_row.size() == config.transition.cols(),
                    "generator config: ragged transition rows");
    detail::require(r_row.size() == config.rates.cols(),
                    "generator config: ragged rates rows");
    config.transition.row(k) = t_row;
    config.rates.row(k) = r_row;
  }

  if (entries.count("categories")) {
    std::istringstream stream(entries.at("categories"));
    std::string item;
    while (std::getline(stream, item, ',')) {
      config.categories.push_back(detail::trim(item));
    }
  }
  config.validate();
  return config;
}

inline GeneratorConfig load_generator_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open generator config: " + path);
  return load_generator_config(in);
}

inline void save_generator_config(const GeneratorConfig& config, std::ostream& out) {
  out << "activities = " << config.activities << '\n';
  out << "length = " << config.length << '\n';
  out << "seed = " << config.seed << '\n';
  const std::vector<std::string> names = config.resolved_categories();
  out << "categories = ";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << (i ? "," : "") << names[i];
  }
  out << '\n';
  out.precision(17);
  for (Eigen::Index k = 0; k < config.activities; ++k) {
    out << "transition_" << k << " = ";
    for (Eigen::Index j = 0; j < config.transition.cols(); ++j) {
      out << (j ? "," : "") << config.transition(k, j);
    }
    out << '\n';
  }
  for (Eigen::Index k = 0; k < config.activities; ++k) {
    out << "rates_" << k << " = ";
    for (Eigen::Index j = 0; j < config.rates.cols(); ++j) {
      out << (j ? "," : "") << config.rates(k, j);
    }
    out << '\n';
  }
  out << "miss_prob = ";
  for (Eigen::Index k = 0; k < config.activities; ++k) {
    out << (k ? "," : "") << config.miss_prob[k];
  }
  out << '\n';
}

// Samples the activity chain and emissions. Per cycle the draw order is
// fixed: counts in category order, then the miss flag, then the transition.
// The initial activity is uniform over the K activities.
inline Trace generate_synthetic(const GeneratorConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Eigen::Index v = config.num_categories();

  Trace trace;
  trace.categories = config.resolved_categories();
  trace.counts.resize(config.length, v);
  trace.miss_streams.push_back(
      MissStream{"synthetic", std::vector<int>(static_cast<std::size_t>(config.length), 0)});

  Eigen::Index activity = std::min<Eigen::Index>(
      config.activities - 1,
      static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(config.activities)));
  for (Eigen::Index t = 0; t < config.length; ++t) {
    for (Eigen::Index i = 0; i < v; ++i) {
      trace.counts(t, i) =
          static_cast<double>(rng.poisson(config.rates(activity, i)));
    }
    trace.miss_streams[0].events[static_cast<std::size_t>(t)] =
        rng.bernoulli(config.miss_prob[activity]) ? 1 : 0;
    activity = rng.categorical(config.transition.row(activity).transpose());
  }
  return trace;
}

}  // namespace dcrbm
