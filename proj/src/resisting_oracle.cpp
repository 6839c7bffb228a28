#include "regquad/resisting_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "regquad/bounds.hpp"
#include "regquad/errors.hpp"

namespace regquad {

namespace {

constexpr double kInsideTol = 1e-10;
constexpr double kReflectorTol = 1e-12;

Vector project_out(const Matrix& basis, Index cols, const Vector& x) {
  Vector out = x;
  if (cols == 0) return out;
  const auto q = basis.leftCols(cols);
  for (int pass = 0; pass < 2; ++pass) out -= q * (q.transpose() * out);
  return out;
}

}  // namespace

ResistingOracle::ResistingOracle(MultistepData data) : data_(std::move(data)) {
  const Index d = data_.eigenvalues.size();
  if (d == 0 || data_.b.size() != d) throw ArgumentError("resisting oracle needs spectral data");
  const double b_norm = data_.b.norm();
  if (!(b_norm > 0.0)) throw ArgumentError("resisting oracle needs b != 0");
  u_ = Matrix::Identity(d, d);

  // Lanczos on diag(lambda) from b with full reorthogonalization.
  std::vector<Vector> cols{data_.b / b_norm};
  double scale = 0.0;
  while (static_cast<Index>(cols.size()) < d) {
    Vector w = data_.eigenvalues.cwiseProduct(cols.back());
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vector& q : cols) w -= q.dot(w) * q;
    }
    const double beta = w.norm();
    scale = std::max(scale, data_.eigenvalues.cwiseAbs().maxCoeff());
    if (beta <= kInsideTol * std::max(scale, 1.0)) break;
    cols.push_back(w / beta);
  }
  krylov_dim_ = static_cast<Index>(cols.size());
  w_.resize(d, krylov_dim_);
  for (Index j = 0; j < krylov_dim_; ++j) w_.col(j) = cols[static_cast<std::size_t>(j)];
  v_ = w_;
}

void ResistingOracle::protect(const Vector& x) {
  if (x.size() != dim()) throw ArgumentError("query dimension mismatch");
  const double tol = kInsideTol * (1.0 + x.norm());
  const Index free_cols = std::min<Index>(2 * rounds_, krylov_dim_);
  if (project_out(v_, free_cols, x).norm() <= tol) return;
  if (rounds_ >= round_budget()) {
    throw ExhaustedError("adversary exhausted after " + std::to_string(rounds_) +
                         " rounds; finalize before querying outside E_" +
                         std::to_string(free_cols));
  }
  const Index fixed_cols = 2 * rounds_ + 1;
  const Vector out = project_out(v_, fixed_cols, x);
  const double out_norm = out.norm();
  if (out_norm > tol) {
    const Vector target = v_.col(fixed_cols);
    Vector y = out / out_norm;
    if (y.dot(target) < 0.0) y = -y;
    Vector w = target - y;
    const double w_norm = w.norm();
    if (w_norm > kReflectorTol) {
      w /= w_norm;
      u_.noalias() -= 2.0 * w * (w.transpose() * u_);
      v_.noalias() -= 2.0 * w * (w.transpose() * v_);
      ++reflections_;
    }
  }
  ++rounds_;
}

FirstOrderInfo ResistingOracle::serve(const Vector& x) const {
  Vector y = u_.transpose() * x;
  y.array() *= data_.eigenvalues.array();
  const Vector ax = u_ * y;
  const double nx = x.norm();
  FirstOrderInfo info;
  info.value = 0.5 * x.dot(ax) - data_.b.dot(x) + (data_.s / data_.p) * std::pow(nx, data_.p);
  info.gradient = ax + (data_.s * norm_power(nx, data_.p)) * x - data_.b;
  return info;
}

FirstOrderInfo ResistingOracle::query(const Vector& x) {
  protect(x);
  FirstOrderInfo info = serve(x);
  ++counter_.grad_evals;
  ++counter_.func_evals;
  ++counter_.matvecs;
  log_.push_back({x, info.value, info.gradient, rounds_});
  return info;
}

void ResistingOracle::commit(const Vector& x) { protect(x); }

RegQuadProblem ResistingOracle::finalize() const {
  Vector x_star = data_.r * (u_ * data_.sqrt_pi);
  return RegQuadProblem(SpectralMatrix::dense(data_.eigenvalues, u_), data_.b, data_.p, data_.s,
                        std::move(x_star));
}

double ResistingOracle::replay_deviation() const {
  const RegQuadProblem problem = finalize();
  double worst = 0.0;
  for (const LogEntry& e : log_) {
    const FirstOrderInfo info = eval(problem, e.x);
    const double df = std::abs(info.value - e.value) / std::max(1.0, std::abs(e.value));
    const double dg = (info.gradient - e.gradient).norm() / std::max(1.0, e.gradient.norm());
    worst = std::max({worst, df, dg});
  }
  return worst;
}

double ResistingOracle::orthogonality_error() const {
  const Index d = dim();
  return (u_.transpose() * u_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
}

double ResistingOracle::b_invariance_error() const {
  return (u_ * data_.b - data_.b).norm() / data_.b.norm();
}

MethodUnderTest wrap_solver(Method method, const ProblemClass& cls, double r_star,
                            SolverConfig config) {
  if (method == Method::kExact) {
    throw UnsupportedError("the exact solver is not a first-order method");
  }
  config.record_trace = false;
  return [=](FirstOrderOracle& oracle, Index, std::int64_t n) -> Vector {
    SolverConfig cfg = config;
    cfg.max_iters = n;
    switch (method) {
      case Method::kGd: return gd_core(oracle, cls, r_star, cfg).final_x;
      case Method::kAdaptive: return adaptive_gd_core(oracle, cls, cfg).final_x;
      case Method::kComposite: return composite_gm_core(oracle, cls, cfg).final_x;
      case Method::kKrylov: return krylov_core(oracle, cls, cfg).final_x;
      case Method::kExact: break;
    }
    throw UnsupportedError("unsupported method");
  };
}

ResistReport run_resisted(const InstanceSpec& spec, Method method, const MethodUnderTest& run) {
  MultistepData data = multistep_data(spec);
  ResistReport rep;
  rep.method = method;
  rep.n = spec.n;
  rep.r = data.r;
  rep.q_star = data.l_star / data.mu_star;

  ResistingOracle oracle(std::move(data));
  const Vector x_n = run(oracle, oracle.dim(), spec.n);
  oracle.commit(x_n);

  const RegQuadProblem problem = oracle.finalize();
  const Vector x_star = exact_solve(problem, 1e-12);
  rep.rounds = oracle.rounds_used();
  rep.reflections = oracle.reflections();
  rep.distance = (x_n - x_star).norm();
  rep.solution_norm = x_star.norm();
  rep.distance_bound = lb_multistep_distance(spec.mu, spec.lipschitz, spec.s, spec.p, rep.r,
                                             static_cast<double>(spec.n))
                           .value;
  rep.replay_deviation = oracle.replay_deviation();
  rep.orthogonality_error = oracle.orthogonality_error();
  rep.b_invariance_error = oracle.b_invariance_error();
  rep.replay_ok = rep.replay_deviation <= 1e-8;
  rep.bound_ok = rep.distance >= rep.distance_bound;
  return rep;
}

ResistReport run_resisted(const InstanceSpec& spec, Method method, SolverConfig config) {
  const ProblemClass cls{spec.p, spec.s, spec.lipschitz};
  const double r = spec.r ? *spec.r : choose_r_multistep(spec.lipschitz, spec.s, spec.p, spec.n);
  return run_resisted(spec, method, wrap_solver(method, cls, r, config));
}

}  // namespace regquad
