#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamtune/errors.hpp"

namespace streamtune {

using json = nlohmann::json;

/// One point in the tuning space: how many stream partitions the device is
/// split into and how many tasks the work is cut into.
struct StreamConfig {
  int partitions = 1;
  int tasks = 1;

  friend auto operator<=>(const StreamConfig&, const StreamConfig&) = default;
};

inline std::string to_string(const StreamConfig& c) {
  return "(" + std::to_string(c.partitions) + "," + std::to_string(c.tasks) +
         ")";
}

/// Cartesian search grid over the two axes.  Axes are kept sorted, unique and
/// strictly positive.
struct Grid {
  std::vector<int> partitions;
  std::vector<int> tasks;

  void validate() const {
    auto check_axis = [](const std::vector<int>& axis, const char* name) {
      if (axis.empty())
        throw InvalidGridError(std::string("grid axis empty: ") + name);
      int prev = 0;
      for (int v : axis) {
        if (v <= 0)
          throw InvalidGridError(std::string("grid axis not positive: ") +
                                 name);
        if (v <= prev)
          throw InvalidGridError(std::string("grid axis not strictly "
                                             "increasing: ") +
                                 name);
        prev = v;
      }
    };
    check_axis(partitions, "partitions");
    check_axis(tasks, "tasks");
  }

  std::size_t size() const { return partitions.size() * tasks.size(); }

  std::vector<StreamConfig> points() const {
    validate();
    std::vector<StreamConfig> out;
    out.reserve(size());
    for (int p : partitions)
      for (int t : tasks) out.push_back({p, t});
    return out;
  }

  bool contains(const StreamConfig& c) const {
    return std::binary_search(partitions.begin(), partitions.end(),
                              c.partitions) &&
           std::binary_search(tasks.begin(), tasks.end(), c.tasks);
  }

  /// Nearest grid point per axis; ties resolve toward the smaller value.
  StreamConfig snap(const StreamConfig& c) const {
    validate();
    auto nearest = [](const std::vector<int>& axis, int want) {
      int best = axis.front();
      for (int v : axis)
        if (std::abs(v - want) < std::abs(best - want)) best = v;
      return best;
    };
    return {nearest(partitions, c.partitions), nearest(tasks, c.tasks)};
  }

  /// The desk-scale default: 11 partition counts x 9 task counts.
  static Grid desk_default() {
    return {{1, 2, 4, 7, 8, 14, 16, 28, 56, 112, 224},
            {1, 2, 4, 8, 16, 32, 64, 128, 256}};
  }

  /// Parse "1,2,4x8,16" (partitions axis, 'x', tasks axis).
  static Grid parse(const std::string& text) {
    const auto cross = text.find('x');
    if (cross == std::string::npos)
      throw InvalidGridError("grid spec needs '<partitions>x<tasks>': " +
                             text);
    auto parse_axis = [&](std::string part) {
      std::vector<int> axis;
      std::string cur;
      part += ',';
      for (char ch : part) {
        if (ch == ',') {
          if (cur.empty())
            throw InvalidGridError("empty element in grid spec: " + text);
          try {
            axis.push_back(std::stoi(cur));
          } catch (const std::exception&) {
            throw InvalidGridError("bad integer in grid spec: " + cur);
          }
          cur.clear();
        } else {
          cur += ch;
        }
      }
      return axis;
    };
    Grid g{parse_axis(text.substr(0, cross)), parse_axis(text.substr(cross + 1))};
    g.validate();
    return g;
  }
};

/// Analytic description of one (program, dataset) pair: enough to price any
/// stream configuration without running real hardware.
struct WorkloadSpec {
  std::string program_id;
  std::string dataset_id;
  std::int64_t elements = 1;
  double bytes_per_element_in = 0.0;
  double bytes_per_element_out = 0.0;
  double transfer_alpha = 0.0;   // seconds per byte on the channel
  double transfer_beta = 0.0;    // per-transfer latency, seconds
  double compute_eta = 0.0;      // seconds per element per core
  double compute_gamma = 0.0;    // per-task launch cost, seconds
  double thread_overhead = 0.0;  // seconds per spawned thread
  double partition_overhead = 0.0;  // seconds per partition per run
  int total_cores = 224;
  std::int64_t outer_iterations = 1;
  double noise_sigma = 0.0;  // relative runtime noise (truncated gaussian)

  void validate() const {
    if (program_id.empty()) throw InvalidArgumentError("program_id empty");
    if (dataset_id.empty()) throw InvalidArgumentError("dataset_id empty");
    if (elements < 1) throw InvalidArgumentError("elements < 1");
    if (total_cores < 1) throw InvalidArgumentError("total_cores < 1");
    if (outer_iterations < 1)
      throw InvalidArgumentError("outer_iterations < 1");
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidArgumentError(std::string("negative or non-finite ") +
                                   name);
    };
    nonneg(bytes_per_element_in, "bytes_per_element_in");
    nonneg(bytes_per_element_out, "bytes_per_element_out");
    nonneg(transfer_alpha, "transfer_alpha");
    nonneg(transfer_beta, "transfer_beta");
    nonneg(compute_eta, "compute_eta");
    nonneg(compute_gamma, "compute_gamma");
    nonneg(thread_overhead, "thread_overhead");
    nonneg(partition_overhead, "partition_overhead");
    nonneg(noise_sigma, "noise_sigma");
  }
};

inline void to_json(json& j, const WorkloadSpec& w) {
  j = json{{"program_id", w.program_id},
           {"dataset_id", w.dataset_id},
           {"elements", w.elements},
           {"bytes_per_element_in", w.bytes_per_element_in},
           {"bytes_per_element_out", w.bytes_per_element_out},
           {"transfer_alpha", w.transfer_alpha},
           {"transfer_beta", w.transfer_beta},
           {"compute_eta", w.compute_eta},
           {"compute_gamma", w.compute_gamma},
           {"thread_overhead", w.thread_overhead},
           {"partition_overhead", w.partition_overhead},
           {"total_cores", w.total_cores},
           {"outer_iterations", w.outer_iterations},
           {"noise_sigma", w.noise_sigma}};
}

inline void from_json(const json& j, WorkloadSpec& w) {
  auto grab = [&](const char* key, auto& into) {
    auto it = j.find(key);
    if (it == j.end()) return;  // optional: defaults stand
    try {
      it->get_to(into);
    } catch (const json::exception& e) {
      throw ParseError(std::string("workload field '") + key + "': " +
                       e.what());
    }
  };
  auto require = [&](const char* key, auto& into) {
    if (!j.contains(key))
      throw ParseError(std::string("workload missing field '") + key + "'");
    grab(key, into);
  };
  require("program_id", w.program_id);
  require("dataset_id", w.dataset_id);
  require("elements", w.elements);
  grab("bytes_per_element_in", w.bytes_per_element_in);
  grab("bytes_per_element_out", w.bytes_per_element_out);
  grab("transfer_alpha", w.transfer_alpha);
  grab("transfer_beta", w.transfer_beta);
  grab("compute_eta", w.compute_eta);
  grab("compute_gamma", w.compute_gamma);
  grab("thread_overhead", w.thread_overhead);
  grab("partition_overhead", w.partition_overhead);
  grab("total_cores", w.total_cores);
  grab("outer_iterations", w.outer_iterations);
  grab("noise_sigma", w.noise_sigma);
}

}  // namespace streamtune
