// Instruction-trace container and its CSV format. One row per cycle:
//   cycle,op_<cat1>,...,op_<catV>,miss_<name1>[,miss_<nameK>]
// with cycles counting up from 0, nonnegative integer counts and 0/1 miss
// flags. Parse errors carry the offending line number.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dcrbm {

struct MissStream {
  std::string name;
  std::vector<int> events;  // 0/1 per cycle
};

struct Trace {
  std::vector<std::string> categories;  // instruction categories, size V
  Eigen::MatrixXd counts;               // cycles x V, integral entries
  std::vector<MissStream> miss_streams;

  Eigen::Index length() const { return counts.rows(); }
  Eigen::Index num_categories() const { return counts.cols(); }

  const MissStream& miss_stream(const std::string& name) const {
    for (const MissStream& stream : miss_streams) {
      if (stream.name == name) return stream;
    }
    std::string known;
    for (const MissStream& stream : miss_streams) {
      known += (known.empty() ? "" : ", ") + stream.name;
    }
    throw std::invalid_argument("unknown miss stream '" + name +
                                "' (trace has: " + known + ")");
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] inline void trace_error(std::size_t line_no, const std::string& what) {
  throw std::invalid_argument("trace line " + std::to_string(line_no) + ": " + what);
}

}  // namespace detail

inline Trace load_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("trace line 1: missing header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "cycle") {
    detail::trace_error(1, "header must start with 'cycle'");
  }

  Trace trace;
  std::size_t column = 1;
  while (column < header.size() && header[column].rfind("op_", 0) == 0) {
    trace.categories.push_back(header[column].substr(3));
    ++column;
  }
  if (trace.categories.empty()) {
    detail::trace_error(1, "header needs at least one op_<category> column");
  }
  for (; column < header.size(); ++column) {
    if (header[column].rfind("miss_", 0) != 0) {
      detail::trace_error(1, "unexpected column '" + header[column] +
                                 "' (op_ columns must precede miss_ columns)");
    }
    trace.miss_streams.push_back(MissStream{header[column].substr(5), {}});
  }

  const std::size_t v = trace.categories.size();
  const std::size_t want = 1 + v + trace.miss_streams.size();
  std::vector<Eigen::VectorXd> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = detail::split_csv_line(line);
    if (fields.size() != want) {
      detail::trace_error(line_no, "expected " + std::to_string(want) +
                                       " fields, got " +
                                       std::to_string(fields.size()));
    }
    const auto parse_int = [&](const std::string& text, const char* what) {
      try {
        std::size_t used = 0;
        const long long value = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return value;
      } catch (const std::exception&) {
        detail::trace_error(line_no, std::string(what) + " '" + text +
                                         "' is not an integer");
      }
    };
    const long long cycle = parse_int(fields[0], "cycle");
    if (cycle != static_cast<long long>(rows.size())) {
      detail::trace_error(line_no, "cycle " + fields[0] + " out of order (expected " +
                                       std::to_string(rows.size()) + ")");
    }
    Eigen::VectorXd row(static_cast<Eigen::Index>(v));
    for (std::size_t i = 0; i < v; ++i) {
      const long long count = parse_int(fields[1 + i], "count");
      if (count < 0) {
        detail::trace_error(line_no, "count '" + fields[1 + i] + "' is negative");
      }
      row[static_cast<Eigen::Index>(i)] = static_cast<double>(count);
    }
    for (std::size_t k = 0; k < trace.miss_streams.size(); ++k) {
      const long long flag = parse_int(fields[1 + v + k], "miss flag");
      if (flag != 0 && flag != 1) {
        detail::trace_error(line_no, "miss flag '" + fields[1 + v + k] +
                                         "' must be 0 or 1");
      }
      trace.miss_streams[k].events.push_back(static_cast<int>(flag));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    detail::trace_error(line_no + 1, "trace has no data rows");
  }

  trace.counts.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(v));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    trace.counts.row(static_cast<Eigen::Index>(t)) = rows[t];
  }
  return trace;
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trace file: " + path);
  try {
    return load_trace(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

inline void save_trace(const Trace& trace, std::ostream& out) {
  out << "cycle";
  for (const std::string& category : trace.categories) out << ",op_" << category;
  for (const MissStream& stream : trace.miss_streams) out << ",miss_" << stream.name;
  out << '\n';
  for (Eigen::Index t = 0; t < trace.length(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < trace.num_categories(); ++i) {
      out << ',' << static_cast<long long>(trace.counts(t, i));
    }
    for (const MissStream& stream : trace.miss_streams) {
      out << ',' << stream.events[static_cast<std::size_t>(t)];
    }
    out << '\n';
  }
}

inline void save_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write trace file: " + path);
  save_trace(trace, out);
}

}  // namespace dcrbm
