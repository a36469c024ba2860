// Confusion-matrix accounting and the derived binary-classification scores.
// The positive class is always 1 (a miss). Any metric whose denominator is
// zero is reported as 0.
#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcrbm {

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    return *this;
  }
};

struct ScoreSet {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mcc = 0.0;
};

inline ConfusionCounts confusion(const std::vector<int>& predictions,
                                 const std::vector<int>& truth) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("confusion: predictions and truth differ in length");
  }
  if (predictions.empty()) {
    throw std::invalid_argument("confusion: empty inputs");
  }
  ConfusionCounts counts;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (truth[i] == 1) {
      predictions[i] == 1 ? ++counts.tp : ++counts.fn;
    } else {
      predictions[i] == 1 ? ++counts.fp : ++counts.tn;
    }
  }
  return counts;
}

inline ScoreSet score(const ConfusionCounts& counts) {
  if (counts.total() <= 0) {
    throw std::invalid_argument("score: empty confusion counts");
  }
  const auto ratio = [](double num, double den) {
    return den > 0.0 ? num / den : 0.0;
  };
  const double tp = static_cast<double>(counts.tp);
  const double fp = static_cast<double>(counts.fp);
  const double tn = static_cast<double>(counts.tn);
  const double fn = static_cast<double>(counts.fn);

  ScoreSet scores;
  scores.accuracy = (tp + tn) / static_cast<double>(counts.total());
  scores.precision = ratio(tp, tp + fp);
  scores.recall = ratio(tp, tp + fn);
  scores.f1 = ratio(2.0 * scores.precision * scores.recall,
                    scores.precision + scores.recall);
  const double denom_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  scores.mcc = denom_sq > 0.0 ? (tp * tn - fp * fn) / std::sqrt(denom_sq) : 0.0;
  return scores;
}

// Predicts the most frequent training label for every test sample; a tie
// predicts the negative class.
struct BaselineResult {
  std::vector<int> predictions;
  ScoreSet scores;
};

inline BaselineResult majority_baseline(const std::vector<int>& train_labels,
                                        const std::vector<int>& test_labels) {
  if (train_labels.empty() || test_labels.empty()) {
    throw std::invalid_argument("majority_baseline: empty inputs");
  }
  std::int64_t positives = 0;
  for (const int y : train_labels) positives += (y == 1);
  const int majority =
      2 * positives > static_cast<std::int64_t>(train_labels.size()) ? 1 : 0;
  BaselineResult result;
  result.predictions.assign(test_labels.size(), majority);
  result.scores = score(confusion(result.predictions, test_labels));
  return result;
}

struct ReportRow {
  std::string cache;
  std::string model;
  ScoreSet scores;
};

// Table-style report: two-decimal pretty text plus a full-precision CSV.
inline std::string report_table(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("report_table: no rows");
  std::size_t cache_width = 5, model_width = 5;
  for (const ReportRow& row : rows) {
    cache_width = std::max(cache_width, row.cache.size());
    model_width = std::max(model_width, row.model.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(cache_width)) << "Cache" << "  "
      << std::setw(static_cast<int>(model_width)) << "Model" << "  "
      << std::right << std::setw(6) << "MCC" << "  " << std::setw(6) << "F1"
      << "  " << std::setw(8) << "Accuracy" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const ReportRow& row : rows) {
    out << std::left << std::setw(static_cast<int>(cache_width)) << row.cache
        << "  " << std::setw(static_cast<int>(model_width)) << row.model << "  "
        << std::right << std::setw(6) << row.scores.mcc << "  " << std::setw(6)
        << row.scores.f1 << "  " << std::setw(8) << row.scores.accuracy << '\n';
  }
  return out.str();
}

inline std::string report_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("report_csv: no rows");
  std::ostringstream out;
  out << "cache,model,mcc,f1,accuracy\n";
  out << std::setprecision(17);
  for (const ReportRow& row : rows) {
    out << row.cache << ',' << row.model << ',' << row.scores.mcc << ','
        << row.scores.f1 << ',' << row.scores.accuracy << '\n';
  }
  return out.str();
}

}  // namespace dcrbm
