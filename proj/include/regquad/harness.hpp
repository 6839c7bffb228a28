#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "regquad/instances.hpp"
#include "regquad/solvers.hpp"

namespace regquad {

enum class ExperimentKind { kSingle, kSweep, kBeta, kGrid, kOneStep, kResist };
const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct SolverEntry {
  Method method = Method::kGd;
  SolverConfig config;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kSingle;
  InstanceSpec instance;
  std::vector<std::int64_t> sweep_n;
  std::vector<double> sweep_l;
  std::vector<double> sweep_s;
  std::vector<SolverEntry> solvers;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::int64_t repeats = 1;
  std::int64_t threads = 1;
  std::optional<std::pair<double, double>> slope_range;
  // The parsed document, echoed into the manifest.
  nlohmann::json source;

  void validate() const;
};

// Accepts {"experiment", "instance", "sweep": {"N", "L", "s"}, "solvers",
// "solver_config", "out_dir", "seed", "repeats", "threads", "slope_range"}.
// Sweep lists are arrays or {"start", "stop", "step"} ranges.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base = {});

// Writes CSV files and manifest.json under config.out_dir and returns the
// report that is also stored as report.json.
nlohmann::json run_experiment(const ExperimentConfig& config);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::string warning;
};

// Least squares on (log N, log value). Nonpositive values are dropped with a
// warning; fewer than five remaining points is an error.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& series,
                          std::optional<std::pair<double, double>> range = std::nullopt);

// Hex SHA-1 of "blob <size>\0<contents>", the hash git assigns to a file.
std::string git_blob_hash(std::string_view contents);

}  // namespace regquad
