// Turns a trace into supervised samples: cycle binning, any-miss-in-window
// label aggregation, history window construction and chronological splitting.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dcrbm/model.hpp"
#include "dcrbm/trace.hpp"

namespace dcrbm {

// One supervised instance: the N frames before origin_t (oldest first), the
// frame at origin_t and the aggregated miss label.
struct Sample {
  HistoryWindow history;
  Frame frame;
  Label label;
  Eigen::Index origin_t = 0;
};

// y(t) = 1 iff the stream has a miss anywhere in [t, t+window], inclusive.
// Defined for t in [0, T-window-1].
inline std::vector<int> aggregate_labels(const std::vector<int>& stream,
                                         Eigen::Index window) {
  detail::require(window >= 1, "aggregation window must be >= 1");
  const Eigen::Index t_len = static_cast<Eigen::Index>(stream.size());
  detail::require(t_len > window,
                  "stream length " + std::to_string(t_len) +
                      " must exceed aggregation window " + std::to_string(window));
  std::vector<int> labels(static_cast<std::size_t>(t_len - window), 0);
  Eigen::Index next_miss = t_len;  // nearest miss at index >= t
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    if (stream[static_cast<std::size_t>(t)] == 1) next_miss = t;
    if (t < t_len - window) {
      labels[static_cast<std::size_t>(t)] = next_miss <= t + window ? 1 : 0;
    }
  }
  return labels;
}

// Sums counts over consecutive groups of `bin` cycles and ORs the miss flags.
// A shorter trailing group is kept, so total instruction counts are preserved.
inline Trace bin_trace(const Trace& trace, Eigen::Index bin) {
  detail::require(bin >= 1, "bin must be >= 1");
  if (bin == 1) return trace;
  const Eigen::Index t_len = trace.length();
  const Eigen::Index binned_len = (t_len + bin - 1) / bin;
  Trace binned;
  binned.categories = trace.categories;
  binned.counts = Eigen::MatrixXd::Zero(binned_len, trace.num_categories());
  for (const MissStream& stream : trace.miss_streams) {
    binned.miss_streams.push_back(
        MissStream{stream.name, std::vector<int>(static_cast<std::size_t>(binned_len), 0)});
  }
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::Index group = t / bin;
    binned.counts.row(group) += trace.counts.row(t);
    for (std::size_t k = 0; k < trace.miss_streams.size(); ++k) {
      binned.miss_streams[k].events[static_cast<std::size_t>(group)] |=
          trace.miss_streams[k].events[static_cast<std::size_t>(t)];
    }
  }
  return binned;
}

// Builds samples from a trace. The label window is given in raw cycles and
// rescaled to ceil(window/bin) binned steps.
inline std::vector<Sample> window_dataset(const Trace& trace,
                                          Eigen::Index history_len,
                                          const std::string& cache_name,
                                          Eigen::Index window,
                                          Eigen::Index bin = 1) {
  detail::require(history_len >= 1, "history_len must be >= 1");
  detail::require(window >= 1, "window must be >= 1");
  trace.miss_stream(cache_name);  // fail early on unknown cache
  const Trace binned = bin_trace(trace, bin);
  const Eigen::Index binned_window = (window + bin - 1) / bin;
  const Eigen::Index t_len = binned.length();
  detail::require(
      t_len > history_len + binned_window,
      "trace too short: need more than " +
          std::to_string(history_len + binned_window) +
          " binned frames, have " + std::to_string(t_len));

  const std::vector<int> labels =
      aggregate_labels(binned.miss_stream(cache_name).events, binned_window);
  const Eigen::Index v = binned.num_categories();

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(t_len - binned_window - history_len));
  for (Eigen::Index t = history_len; t < t_len - binned_window; ++t) {
    Sample sample;
    sample.history.values.resize(history_len * v);
    for (Eigen::Index lag = 0; lag < history_len; ++lag) {
      sample.history.values.segment(lag * v, v) =
          binned.counts.row(t - history_len + lag);
    }
    sample.frame.values = binned.counts.row(t);
    sample.frame.total = sample.frame.values.sum();
    sample.label = Label{labels[static_cast<std::size_t>(t)], 2};
    sample.origin_t = t;
    samples.push_back(std::move(sample));
  }
  return samples;
}

// First floor(fraction*n) samples to train, the rest to test. No shuffling:
// consecutive samples share history content.
inline std::pair<std::vector<Sample>, std::vector<Sample>> split_chronological(
    const std::vector<Sample>& samples, double train_fraction) {
  detail::require(train_fraction > 0.0 && train_fraction < 1.0,
                  "train fraction must be in (0, 1)");
  const std::size_t cut = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(samples.size())));
  detail::require(cut >= 1 && cut < samples.size(),
                  "split leaves an empty side (have " +
                      std::to_string(samples.size()) + " samples)");
  return {std::vector<Sample>(samples.begin(), samples.begin() + cut),
          std::vector<Sample>(samples.begin() + cut, samples.end())};
}

}  // namespace dcrbm
