#include "regquad/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include "regquad/errors.hpp"
#include "regquad/serialization.hpp"

namespace regquad {

namespace {

constexpr int kMaxDoublings = 200;
constexpr int kMaxRootIters = 300;
constexpr double kOrthogonalityLoss = 1e-6;

double resolve_grad_tol(const SolverConfig& config, double b_norm) {
  return config.grad_tol ? *config.grad_tol : 1e-12 * std::max(1.0, b_norm);
}

class Recorder {
 public:
  Recorder(SolverTrace& trace, const SolverConfig& config, const FirstOrderOracle& oracle)
      : trace_(trace), config_(config), oracle_(oracle) {}

  void add(std::int64_t iter, double f, double grad_norm, double step, const Vector& x) {
    TraceRecord rec;
    rec.iter = iter;
    rec.f = f;
    rec.grad_norm = grad_norm;
    rec.step_or_m = step;
    rec.counters = oracle_.counter();
    if (config_.record_trace) rec.x = x;
    trace_.records.push_back(std::move(rec));
    trace_.final_x = x;
    trace_.final_f = f;
    trace_.final_grad_norm = grad_norm;
    trace_.iterations = iter;
    trace_.totals = oracle_.counter();
  }

 private:
  SolverTrace& trace_;
  const SolverConfig& config_;
  const FirstOrderOracle& oracle_;
};

void require_uniformly_convex(const ProblemClass& cls, const char* who) {
  if (!(cls.p > 2.0)) throw UnsupportedError(std::string(who) + " requires p > 2");
  if (!(cls.s > 0.0)) throw UnsupportedError(std::string(who) + " requires s > 0");
}

// Solution of y_i (lambda_i + shift) = bt_i, refusing a zero pivot on a
// nonzero right-hand side.
Vector shifted_diagonal_solve(const Vector& lambda, const Vector& bt, double shift) {
  Vector y(bt.size());
  for (Index i = 0; i < bt.size(); ++i) {
    const double d = lambda(i) + shift;
    if (d == 0.0) {
      if (bt(i) != 0.0) throw SingularSystemError("shifted system is singular on the rhs");
      y(i) = 0.0;
    } else {
      y(i) = bt(i) / d;
    }
  }
  return y;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 0) throw ArgumentError("max_iters must be >= 0");
  if (!(m0 > 0.0)) throw ArgumentError("m0 must be > 0");
  if (grad_tol && !(*grad_tol > 0.0)) throw ArgumentError("grad_tol must be > 0");
  if (!(inner_tol > 0.0)) throw ArgumentError("inner_tol must be > 0");
  if (fixed_step && !(*fixed_step > 0.0)) throw ArgumentError("fixed_step must be > 0");
}

const char* to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::kConverged: return "converged";
    case SolverStatus::kIterBudget: return "iter-budget";
    case SolverStatus::kStalled: return "stalled";
  }
  return "unknown";
}

const char* to_string(Method method) {
  switch (method) {
    case Method::kGd: return "gd";
    case Method::kAdaptive: return "adaptive";
    case Method::kComposite: return "composite";
    case Method::kKrylov: return "krylov";
    case Method::kExact: return "exact";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "gd") return Method::kGd;
  if (name == "adaptive") return Method::kAdaptive;
  if (name == "composite") return Method::kComposite;
  if (name == "krylov") return Method::kKrylov;
  if (name == "exact") return Method::kExact;
  throw ArgumentError("unknown method '" + std::string(name) + "'");
}

Vector FirstOrderOracle::linear_term() {
  if (!b_cache_) b_cache_ = -query(Vector::Zero(dim())).gradient;
  return *b_cache_;
}

Vector FirstOrderOracle::matvec(const Vector& v, double p, double s) {
  const Vector b = linear_term();
  Vector g = query(v).gradient;
  return g + b - (s * norm_power(v.norm(), p)) * v;
}

FirstOrderInfo ProblemOracle::query(const Vector& x) { return eval(problem_, x, &counter_); }

double ProblemOracle::value(const Vector& x) { return eval_value(problem_, x, &counter_); }

Vector ProblemOracle::gradient(const Vector& x) {
  FirstOrderInfo info = eval(problem_, x, nullptr);
  ++counter_.grad_evals;
  ++counter_.matvecs;
  return std::move(info.gradient);
}

Vector ProblemOracle::matvec(const Vector& v, double, double) {
  ++counter_.matvecs;
  return problem_.matrix().matvec(v);
}

double eta_theoretical(double p, double s, double grad_norm, double m) {
  if (!(m > 0.0)) throw ArgumentError("eta_theoretical requires m > 0");
  if (grad_norm < 0.0) throw ArgumentError("gradient norm must be nonnegative");
  const double first = 1.0 / m;
  if (grad_norm == 0.0 || s == 0.0) return first;
  const double second =
      std::pow(p / (s * std::pow(2.0, p - 2.0) * std::pow(grad_norm, p - 2.0)), 1.0 / (p - 1.0));
  return std::min(first, second);
}

double eta_theoretical(const RegQuadProblem& problem, double grad_norm, double m) {
  return eta_theoretical(problem.p(), problem.s(), grad_norm, m);
}

double composite_secular_root(double l_reg, double s, double p, double rhs, double tol) {
  if (rhs < 0.0 || !std::isfinite(rhs)) throw ArgumentError("secular rhs must be finite and >= 0");
  if (l_reg < 0.0 || s < 0.0) throw ArgumentError("secular coefficients must be >= 0");
  if (rhs == 0.0) return 0.0;
  if (s == 0.0 || p == 2.0) {
    const double lin = l_reg + (p == 2.0 ? s : 0.0);
    if (!(lin > 0.0)) throw ArgumentError("secular equation has no solution");
    return rhs / lin;
  }
  // phi(r) = l_reg r + s r^{p-1} - rhs is convex and increasing, so Newton
  // started above the root decreases monotonically onto it.
  double r = std::pow(rhs / s, 1.0 / (p - 1.0));
  if (l_reg > 0.0) r = std::min(r, rhs / l_reg);
  for (int it = 0; it < kMaxRootIters; ++it) {
    const double phi = l_reg * r + s * std::pow(r, p - 1.0) - rhs;
    if (phi <= 0.0) return r;
    const double dphi = l_reg + s * (p - 1.0) * std::pow(r, p - 2.0);
    const double next = r - phi / dphi;
    if (!(next < r)) return r;
    if (next <= 0.0) return 0.0;
    if (r - next <= tol * next) return next;
    r = next;
  }
  return r;
}

Vector exact_solve_spectral(const Vector& lambda, const Vector& bt, double p, double s,
                            double tol) {
  if (lambda.size() != bt.size()) throw ArgumentError("spectral data size mismatch");
  const double b_norm = bt.norm();
  if (b_norm == 0.0) return Vector::Zero(bt.size());
  if (p == 2.0) return shifted_diagonal_solve(lambda, bt, s);
  if (s == 0.0) return shifted_diagonal_solve(lambda, bt, 0.0);

  const Vector bt2 = bt.cwiseAbs2();
  // h(r) = r - ||bt / (lambda + s r^{p-2})||, increasing in r.
  auto eval_h = [&](double r, double* dh) {
    const double t = s * norm_power(r, p);
    double sum2 = 0.0;
    double sum3 = 0.0;
    for (Index i = 0; i < bt.size(); ++i) {
      if (bt2(i) == 0.0) continue;
      const double d = lambda(i) + t;
      if (d <= 0.0) {
        if (dh) *dh = std::numeric_limits<double>::infinity();
        return -std::numeric_limits<double>::infinity();
      }
      sum2 += bt2(i) / (d * d);
      sum3 += bt2(i) / (d * d * d);
    }
    const double phi = std::sqrt(sum2);
    if (dh) {
      const double dt = r > 0.0 ? s * (p - 2.0) * std::pow(r, p - 3.0)
                                : std::numeric_limits<double>::infinity();
      *dh = 1.0 + dt * sum3 / phi;
    }
    return r - phi;
  };

  double lo = 0.0;
  double hi = std::pow(std::max(1.0, b_norm / s), 1.0 / (p - 1.0));
  double h_hi = eval_h(hi, nullptr);
  int doublings = 0;
  while (!(h_hi > 0.0)) {
    if (h_hi == 0.0) return shifted_diagonal_solve(lambda, bt, s * norm_power(hi, p));
    if (++doublings > 1100) {
      throw NumericalError("exact_solve: could not bracket the secular root (hi = " +
                           std::to_string(hi) + ", h = " + std::to_string(h_hi) + ")");
    }
    lo = hi;
    hi *= 2.0;
    h_hi = eval_h(hi, nullptr);
  }

  double r = hi;
  for (int it = 0; it < kMaxRootIters; ++it) {
    double dh = 0.0;
    const double h = eval_h(r, &dh);
    if (std::abs(h) <= tol * std::max(1.0, r)) break;
    if (h < 0.0) lo = r; else hi = r;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    double next = r - h / dh;
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    r = next;
  }
  return shifted_diagonal_solve(lambda, bt, s * norm_power(r, p));
}

Vector exact_solve(const RegQuadProblem& problem, double tol) {
  if (problem.b().norm() == 0.0) return Vector::Zero(problem.dim());
  const SpectralMatrix& a = problem.matrix();
  const Vector y = exact_solve_spectral(a.eigenvalues(), a.to_eigenbasis(problem.b()), problem.p(),
                                        problem.s(), tol);
  Vector x = a.from_eigenbasis(y);
  const double res = stationarity_residual(problem, x);
  const double bound = 1e-9 * std::max(1.0, problem.b().norm());
  if (!(res <= bound)) {
    throw NumericalError("exact_solve: stationarity residual " + std::to_string(res) +
                         " exceeds " + std::to_string(bound) + " at ||x|| = " +
                         std::to_string(x.norm()));
  }
  return x;
}

SolverTrace gd_core(FirstOrderOracle& oracle, const ProblemClass& cls, double r_star,
                    const SolverConfig& config) {
  config.validate();
  if (!config.fixed_step) require_uniformly_convex(cls, "gd_run");
  if (!(r_star >= 0.0)) throw ArgumentError("gd_run requires r_star >= 0");
  SolverTrace trace;
  trace.method = Method::kGd;
  Recorder rec(trace, config, oracle);

  const double m = m_star(cls.lipschitz, cls.s, cls.p, r_star);
  Vector x = Vector::Zero(oracle.dim());
  FirstOrderInfo info = oracle.query(x);
  const double tol = resolve_grad_tol(config, info.gradient.norm());
  for (std::int64_t k = 0;; ++k) {
    const double gn = info.gradient.norm();
    const double eta = config.fixed_step ? *config.fixed_step
                                         : eta_theoretical(cls.p, cls.s, gn, m);
    rec.add(k, info.value, gn, eta, x);
    if (gn <= tol) {
      trace.status = SolverStatus::kConverged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolverStatus::kIterBudget;
      break;
    }
    x -= eta * info.gradient;
    info = oracle.query(x);
  }
  return trace;
}

SolverTrace adaptive_gd_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                             const SolverConfig& config) {
  config.validate();
  require_uniformly_convex(cls, "adaptive_gd_run");
  SolverTrace trace;
  trace.method = Method::kAdaptive;
  Recorder rec(trace, config, oracle);

  Vector x = Vector::Zero(oracle.dim());
  FirstOrderInfo info = oracle.query(x);
  double f = info.value;
  Vector g = std::move(info.gradient);
  const double tol = resolve_grad_tol(config, g.norm());
  double m = config.m0;
  for (std::int64_t k = 0;; ++k) {
    const double gn = g.norm();
    rec.add(k, f, gn, m, x);
    if (gn <= tol) {
      trace.status = SolverStatus::kConverged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolverStatus::kIterBudget;
      break;
    }
    double m_plus = 0.25 * m;
    bool accepted = false;
    Vector x_plus;
    double f_plus = 0.0;
    for (int n = 0; n < kMaxDoublings && !accepted; ++n) {
      m_plus *= 2.0;
      const double eta = eta_theoretical(cls.p, cls.s, gn, m_plus);
      // Below this the trial point equals x in floating point.
      if (eta * gn <= std::numeric_limits<double>::epsilon() * (1.0 + x.norm())) break;
      x_plus = x - eta * g;
      f_plus = oracle.value(x_plus);
      // Rounding in f allows a few ulps of slack in the decrease test.
      const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(f) + std::abs(f_plus));
      accepted = f - f_plus + slack >= 0.5 * eta * gn * gn;
    }
    if (!accepted) {
      trace.status = SolverStatus::kStalled;
      trace.totals = oracle.counter();
      break;
    }
    m = m_plus;
    x = std::move(x_plus);
    f = f_plus;
    g = oracle.gradient(x);
  }
  return trace;
}

SolverTrace composite_gm_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                              const SolverConfig& config) {
  config.validate();
  if (!(cls.p >= 2.0)) throw UnsupportedError("composite_gm_run requires p >= 2");
  if (!(cls.lipschitz > 0.0) && !(cls.s > 0.0)) {
    throw ArgumentError("composite_gm_run requires L > 0 or s > 0");
  }
  SolverTrace trace;
  trace.method = Method::kComposite;
  Recorder rec(trace, config, oracle);

  const double l = cls.lipschitz;
  Vector x = Vector::Zero(oracle.dim());
  FirstOrderInfo info = oracle.query(x);
  const double tol = resolve_grad_tol(config, info.gradient.norm());
  for (std::int64_t k = 0;; ++k) {
    const double gn = info.gradient.norm();
    // L x_k - grad q(x_k), with grad q = grad f - s ||x||^{p-2} x.
    const Vector v = l * x - info.gradient + (cls.s * norm_power(x.norm(), cls.p)) * x;
    const double r_next = composite_secular_root(l, cls.s, cls.p, v.norm(), config.inner_tol);
    const double denom = l + cls.s * norm_power(r_next, cls.p);
    rec.add(k, info.value, gn, denom > 0.0 ? 1.0 / denom : 0.0, x);
    if (gn <= tol) {
      trace.status = SolverStatus::kConverged;
      break;
    }
    if (k == config.max_iters) {
      trace.status = SolverStatus::kIterBudget;
      break;
    }
    x = denom > 0.0 ? Vector(v / denom) : Vector(Vector::Zero(oracle.dim()));
    info = oracle.query(x);
  }
  return trace;
}

SolverTrace krylov_core(FirstOrderOracle& oracle, const ProblemClass& cls,
                        const SolverConfig& config) {
  config.validate();
  if (!(cls.p >= 2.0) || !(cls.s >= 0.0)) throw ArgumentError("krylov_solve requires p >= 2, s >= 0");
  SolverTrace trace;
  trace.method = Method::kKrylov;
  Recorder rec(trace, config, oracle);

  const Index d = oracle.dim();
  Vector x = Vector::Zero(d);
  FirstOrderInfo info = oracle.query(x);
  const Vector b = -info.gradient;
  const double b_norm = b.norm();
  const double tol = resolve_grad_tol(config, b_norm);
  rec.add(0, info.value, info.gradient.norm(), 0.0, x);
  if (info.gradient.norm() <= tol) {
    trace.status = SolverStatus::kConverged;
    return trace;
  }

  std::vector<Vector> basis{b / b_norm};
  std::vector<double> alpha;
  std::vector<double> beta;
  double scale = 0.0;
  bool invariant = false;

  auto lanczos_step = [&]() {
    const std::size_t j = alpha.size();
    Vector w = oracle.matvec(basis[j], cls.p, cls.s);
    const double a = basis[j].dot(w);
    w -= a * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : basis) w -= q.dot(w) * q;
    }
    alpha.push_back(a);
    const double bj = w.norm();
    scale = std::max({scale, std::abs(a), bj});
    if (bj <= 1e-12 * scale || basis.size() == static_cast<std::size_t>(d)) {
      invariant = true;
      return;
    }
    beta.push_back(bj);
    Vector q = w / bj;
    double loss = 0.0;
    for (const Vector& prev : basis) loss = std::max(loss, std::abs(prev.dot(q)));
    if (loss > kOrthogonalityLoss) {
      throw NumericalError("Lanczos lost orthogonality (" + std::to_string(loss) + ") at step " +
                           std::to_string(j + 1));
    }
    basis.push_back(std::move(q));
  };

  for (std::int64_t k = 1; k <= config.max_iters; ++k) {
    const std::size_t target = static_cast<std::size_t>(2 * k - 1);
    while (alpha.size() < target && !invariant) lanczos_step();
    const Index m = static_cast<Index>(alpha.size());

    Vector diag(m);
    Vector sub(std::max<Index>(m - 1, 0));
    for (Index i = 0; i < m; ++i) diag(i) = alpha[i];
    for (Index i = 0; i + 1 < m; ++i) sub(i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver failed");
    const Vector theta = es.eigenvalues().cwiseMax(0.0);
    const Matrix& w = es.eigenvectors();
    const Vector bt = b_norm * w.row(0).transpose();
    const Vector c = w * exact_solve_spectral(theta, bt, cls.p, cls.s, config.inner_tol);

    x.setZero();
    for (Index i = 0; i < m; ++i) x += c(i) * basis[i];
    info = oracle.query(x);
    const double gn = info.gradient.norm();
    rec.add(k, info.value, gn, static_cast<double>(m), x);
    if (gn <= tol || invariant) {
      trace.status = SolverStatus::kConverged;
      return trace;
    }
  }
  trace.status = SolverStatus::kIterBudget;
  return trace;
}

SolverTrace gd_run(const RegQuadProblem& problem, const SolverConfig& config,
                   std::optional<double> r_star) {
  OracleCounter setup;
  if (!r_star) {
    if (problem.known_solution()) {
      r_star = problem.known_solution()->norm();
    } else {
      r_star = exact_solve(problem, config.inner_tol).norm();
      setup.exact_solves = 1;
    }
  }
  ProblemOracle oracle(problem);
  oracle.counter() += setup;
  return gd_core(oracle, ProblemClass::of(problem), *r_star, config);
}

SolverTrace adaptive_gd_run(const RegQuadProblem& problem, const SolverConfig& config) {
  ProblemOracle oracle(problem);
  return adaptive_gd_core(oracle, ProblemClass::of(problem), config);
}

SolverTrace composite_gm_run(const RegQuadProblem& problem, const SolverConfig& config) {
  ProblemOracle oracle(problem);
  return composite_gm_core(oracle, ProblemClass::of(problem), config);
}

SolverTrace krylov_solve(const RegQuadProblem& problem, const SolverConfig& config) {
  ProblemOracle oracle(problem);
  return krylov_core(oracle, ProblemClass::of(problem), config);
}

SolverTrace exact_solve_trace(const RegQuadProblem& problem, const SolverConfig& config) {
  config.validate();
  SolverTrace trace;
  trace.method = Method::kExact;
  ProblemOracle oracle(problem);
  const Vector x = exact_solve(problem, config.inner_tol);
  oracle.counter().exact_solves = 1;
  const FirstOrderInfo info = oracle.query(x);
  Recorder rec(trace, config, oracle);
  rec.add(0, info.value, info.gradient.norm(), 0.0, x);
  trace.status = SolverStatus::kConverged;
  return trace;
}

SolverTrace run_method(Method method, const RegQuadProblem& problem, const SolverConfig& config) {
  switch (method) {
    case Method::kGd: return gd_run(problem, config);
    case Method::kAdaptive: return adaptive_gd_run(problem, config);
    case Method::kComposite: return composite_gm_run(problem, config);
    case Method::kKrylov: return krylov_solve(problem, config);
    case Method::kExact: return exact_solve_trace(problem, config);
  }
  throw ArgumentError("unknown method");
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out, std::optional<double> f_star) {
  out << (f_star ? "iter,f,f_gap,grad_norm,step_or_M,matvecs\n"
                 : "iter,f,grad_norm,step_or_M,matvecs\n");
  CsvWriter csv(out);
  for (const TraceRecord& r : trace.records) {
    csv.field(static_cast<long long>(r.iter)).field(r.f);
    if (f_star) csv.field(r.f - *f_star);
    csv.field(r.grad_norm).field(r.step_or_m).field(static_cast<long long>(r.counters.matvecs));
    csv.end_row();
  }
}

}  // namespace regquad
