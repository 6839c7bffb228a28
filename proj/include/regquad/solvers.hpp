#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regquad/core_model.hpp"

namespace regquad {

struct SolverConfig {
  std::int64_t max_iters = 1000;
  // Stop once ||grad f|| <= grad_tol; unset means 1e-12 * max(1, ||b||).
  std::optional<double> grad_tol;
  // Initial estimate M_0 for the adaptive method.
  double m0 = 1.0;
  bool record_trace = true;
  double inner_tol = 1e-12;
  // Gradient descent only: use this constant step instead of the theoretical rule.
  std::optional<double> fixed_step;

  void validate() const;
};

struct TraceRecord {
  std::int64_t iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  // eta_k for gd, M_k for adaptive, 1/(L + s r_{k+1}^{p-2}) for composite,
  // Krylov dimension for krylov.
  double step_or_m = 0.0;
  OracleCounter counters;
  Vector x;
};

enum class SolverStatus { kConverged, kIterBudget, kStalled };
const char* to_string(SolverStatus status);

enum class Method { kGd, kAdaptive, kComposite, kKrylov, kExact };
const char* to_string(Method method);
Method parse_method(std::string_view name);

struct SolverTrace {
  Method method = Method::kGd;
  std::vector<TraceRecord> records;
  SolverStatus status = SolverStatus::kIterBudget;
  Vector final_x;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  std::int64_t iterations = 0;
  OracleCounter totals;
};

/// Black-box first-order access to an objective of the regularized-quadratic
/// family. Methods interact with the objective only through this interface,
/// which lets an adversary decide the function while the method runs.
class FirstOrderOracle {
 public:
  virtual ~FirstOrderOracle() = default;

  virtual Index dim() const = 0;
  virtual FirstOrderInfo query(const Vector& x) = 0;
  virtual double value(const Vector& x) { return query(x).value; }
  virtual Vector gradient(const Vector& x) { return query(x).gradient; }

  // The quadratic part acting on v. The default recovers it from gradient
  // differences: A v = grad f(v) - grad f(0) - s ||v||^{p-2} v.
  virtual Vector matvec(const Vector& v, double p, double s);
  // b = -grad f(0); cached after the first call.
  virtual Vector linear_term();

  const OracleCounter& counter() const { return counter_; }
  OracleCounter& counter() { return counter_; }

 protected:
  OracleCounter counter_;

 private:
  std::optional<Vector> b_cache_;
};

class ProblemOracle final : public FirstOrderOracle {
 public:
  explicit ProblemOracle(const RegQuadProblem& problem) : problem_(problem) {}

  Index dim() const override { return problem_.dim(); }
  FirstOrderInfo query(const Vector& x) override;
  double value(const Vector& x) override;
  Vector gradient(const Vector& x) override;
  Vector matvec(const Vector& v, double p, double s) override;
  Vector linear_term() override { return problem_.b(); }

 private:
  const RegQuadProblem& problem_;
};

// What a method may know about the objective besides oracle answers.
struct ProblemClass {
  double p = 3.0;
  double s = 1.0;
  double lipschitz = 1.0;

  static ProblemClass of(const RegQuadProblem& problem) {
    return {problem.p(), problem.s(), problem.lipschitz()};
  }
};

// min{1/M, [p / (s 2^{p-2} g^{p-2})]^{1/(p-1)}}
double eta_theoretical(double p, double s, double grad_norm, double m);
double eta_theoretical(const RegQuadProblem& problem, double grad_norm, double m);

// Unique r >= 0 with (l_reg + s r^{p-2}) r = rhs.
double composite_secular_root(double l_reg, double s, double p, double rhs, double tol = 1e-12);

// Core runners over an arbitrary oracle. All start from x_0 = 0.
SolverTrace gd_core(FirstOrderOracle& oracle, const ProblemClass& cls, double r_star,
                    const SolverConfig& config);
SolverTrace adaptive_gd_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                             const SolverConfig& config);
SolverTrace composite_gm_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                              const SolverConfig& config);
SolverTrace krylov_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                        const SolverConfig& config);

// Problem-level entry points. gd_run computes ||x*|| with exact_solve when
// r_star is not given (or read from known_solution) and counts that solve.
SolverTrace gd_run(const RegQuadProblem& problem, const SolverConfig& config,
                   std::optional<double> r_star = std::nullopt);
SolverTrace adaptive_gd_run(const RegQuadProblem& problem, const SolverConfig& config);
SolverTrace composite_gm_run(const RegQuadProblem& problem, const SolverConfig& config);
SolverTrace krylov_solve(const RegQuadProblem& problem, const SolverConfig& config);
SolverTrace exact_solve_trace(const RegQuadProblem& problem, const SolverConfig& config);
SolverTrace run_method(Method method, const RegQuadProblem& problem, const SolverConfig& config);

/// Global minimizer via the secular equation r = ||(A + s r^{p-2} I)^{-1} b||.
/// p = 2 falls back to the closed form and s = 0 to a spectral linear solve.
Vector exact_solve(const RegQuadProblem& problem, double tol = 1e-12);

// Minimizer of 1/2 y^T diag(lambda) y - bt^T y + (s/p)||y||^p (eigen-coordinates).
Vector exact_solve_spectral(const Vector& lambda, const Vector& bt, double p, double s,
                            double tol = 1e-12);

// Columns: iter, f, [f_gap], grad_norm, step_or_M, matvecs.
void write_trace_csv(const SolverTrace& trace, std::ostream& out,
                     std::optional<double> f_star = std::nullopt);

}  // namespace regquad
