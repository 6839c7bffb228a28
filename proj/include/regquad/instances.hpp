#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "regquad/core_model.hpp"

namespace regquad {

enum class InstanceKind { kOneStep, kMultiStep, kRandom, kBeta };
enum class PiMode { kExact, kHeuristic, kUniform };

const char* to_string(InstanceKind kind);
const char* to_string(PiMode mode);
InstanceKind parse_instance_kind(std::string_view name);
PiMode parse_pi_mode(std::string_view name);

struct InstanceSpec {
  InstanceKind kind = InstanceKind::kMultiStep;
  Index dim = 11;
  double p = 3.0;
  double s = 1.0;
  double mu = 0.0;
  double lipschitz = 1.0;
  // Target ||x*||; unset selects the radius that maximizes the bound for N.
  std::optional<double> r;
  std::int64_t n = 5;
  PiMode pi_mode = PiMode::kHeuristic;
  std::uint64_t seed = 0;
  // Beta spectrum shape parameters.
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
};

nlohmann::json spec_to_json(const InstanceSpec& spec);
// Missing fields keep their defaults; "r": "auto" or null means automatic.
InstanceSpec spec_from_json(const nlohmann::json& j);

struct PiVector {
  Vector weights;
  PiMode provenance = PiMode::kUniform;
  // Achieved min_q sum_i pi_i (1 - t_i q(t_i))^2 and its Chebyshev target,
  // filled by pi_exact_small.
  std::optional<double> objective;
  std::optional<double> certificate;
  std::string warning;
};

// One-step construction: A = diag(mu, L, ..., L), b = (mu r + s r^{p-1}) e_1,
// known solution r e_1.
RegQuadProblem build_one_step(double mu, double lipschitz, double s, double p, double r, Index dim);
double choose_r_one_step(double lipschitz, double s, double p, std::int64_t n);
double choose_r_multistep(double lipschitz, double s, double p, std::int64_t n);

// Extrema of T_{2N} mapped affinely onto [mu_star, L_star], ascending.
Vector chebyshev_eigenvalues(double mu_star, double l_star, std::int64_t n);

PiVector pi_uniform(std::int64_t n);
PiVector pi_exact_small(const Vector& lambdas_star, Index max_dim_guard = 13);
PiVector pi_heuristic(std::int64_t n);

struct WeightObjective {
  double value = 0.0;
  // 1 - t_i q(t_i) at the weighted least-squares optimum.
  Vector residuals;
};
// min over polynomials q of degree len-2 of sum_i pi_i (1 - t_i q(t_i))^2.
WeightObjective chebyshev_weight_objective(const Vector& lambdas_star, const Vector& pi);

// Constants of the fitted heuristic weight model; see pi_heuristic.
struct HeuristicModel {
  // pi_first(n) = a_first exp(-kappa_first n) + d_first, likewise for the last weight.
  double a_first = 0.0, kappa_first = 0.0, d_first = 0.0;
  double a_last = 0.0, kappa_last = 0.0, d_last = 0.0;
  // Interior pi_u = [c2 (u - c1)]^{-c3} for 1-based u in 2..n-1.
  double c1 = 0.0, c2 = 1.0, c3 = 1.0;
};
const HeuristicModel& heuristic_model();
HeuristicModel fit_heuristic_model();

// Spectral description of a multi-step instance in eigen-coordinates
// (A = diag(eigenvalues) before any rotation).
struct MultistepData {
  double p = 3.0;
  double s = 1.0;
  double r = 1.0;
  double shift = 0.0;
  double mu_star = 0.0;
  double l_star = 0.0;
  Vector eigenvalues;
  Vector sqrt_pi;
  Vector b;
  PiVector pi;
  // Number of coordinates carrying weight (2N+1).
  Index active = 0;
};

MultistepData multistep_data(const InstanceSpec& spec);
RegQuadProblem problem_from_multistep(const MultistepData& data);
RegQuadProblem build_multistep(const InstanceSpec& spec);

RegQuadProblem random_instance(const InstanceSpec& spec);
RegQuadProblem beta_spectrum_instance(const InstanceSpec& spec, double alpha, double beta);

RegQuadProblem generate(const InstanceSpec& spec);

}  // namespace regquad
