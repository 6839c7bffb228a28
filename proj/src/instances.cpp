#include "regquad/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/QR>
#include <boost/math/tools/minima.hpp>
#include <boost/random/beta_distribution.hpp>

#include "regquad/bounds.hpp"
#include "regquad/errors.hpp"

namespace regquad {

namespace {

constexpr double kRidge = 1e-12;
constexpr int kRestarts = 20;
constexpr int kMaxAscentSteps = 10000;
constexpr std::uint64_t kRestartSeed = 0x5eed5eedULL;

double radius_power(double r, double p) { return p == 2.0 ? 1.0 : std::pow(r, p - 2.0); }

// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index i = 0; i < n; ++i) {
    cumsum += u[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0).matrix();
}

Vector normalized(Vector w) {
  w /= w.sum();
  return w;
}

}  // namespace

const char* to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::kOneStep: return "one-step";
    case InstanceKind::kMultiStep: return "multi-step";
    case InstanceKind::kRandom: return "random";
    case InstanceKind::kBeta: return "beta";
  }
  return "unknown";
}

const char* to_string(PiMode mode) {
  switch (mode) {
    case PiMode::kExact: return "exact";
    case PiMode::kHeuristic: return "heuristic";
    case PiMode::kUniform: return "uniform";
  }
  return "unknown";
}

InstanceKind parse_instance_kind(std::string_view name) {
  if (name == "one-step") return InstanceKind::kOneStep;
  if (name == "multi-step") return InstanceKind::kMultiStep;
  if (name == "random") return InstanceKind::kRandom;
  if (name == "beta") return InstanceKind::kBeta;
  throw ArgumentError("unknown instance kind '" + std::string(name) + "'");
}

PiMode parse_pi_mode(std::string_view name) {
  if (name == "exact") return PiMode::kExact;
  if (name == "heuristic") return PiMode::kHeuristic;
  if (name == "uniform") return PiMode::kUniform;
  throw ArgumentError("unknown pi mode '" + std::string(name) + "'");
}

void InstanceSpec::validate() const {
  if (dim < 1) throw ArgumentError("dim must be >= 1");
  if (!(p >= 2.0) || !std::isfinite(p)) throw ArgumentError("p must be >= 2");
  if (!(s >= 0.0)) throw ArgumentError("s must be >= 0");
  if (!(mu >= 0.0) || !(lipschitz >= mu)) throw ArgumentError("need 0 <= mu <= L");
  if (r && !(*r > 0.0)) throw ArgumentError("r must be > 0");
  switch (kind) {
    case InstanceKind::kMultiStep:
      if (n < 1) throw ArgumentError("N must be >= 1");
      if (dim < 2 * n + 1) {
        throw ArgumentError("multi-step instance needs dim >= 2N+1 (dim = " + std::to_string(dim) +
                            ", N = " + std::to_string(n) + ")");
      }
      break;
    case InstanceKind::kOneStep:
      if (!r && n < 1) throw ArgumentError("N must be >= 1 for the automatic radius");
      break;
    case InstanceKind::kRandom:
      if (dim < 2) throw ArgumentError("random instance needs dim >= 2");
      break;
    case InstanceKind::kBeta:
      if (dim < 2) throw ArgumentError("beta instance needs dim >= 2");
      if (!(alpha > 0.0) || !(beta > 0.0)) throw ArgumentError("alpha and beta must be > 0");
      if (!r && n < 1) throw ArgumentError("N must be >= 1 for the automatic radius");
      break;
  }
}

nlohmann::json spec_to_json(const InstanceSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  j["dim"] = spec.dim;
  j["p"] = spec.p;
  j["s"] = spec.s;
  j["mu"] = spec.mu;
  j["L"] = spec.lipschitz;
  if (spec.r) j["r"] = *spec.r; else j["r"] = "auto";
  j["N"] = spec.n;
  j["pi_mode"] = to_string(spec.pi_mode);
  j["seed"] = spec.seed;
  j["alpha"] = spec.alpha;
  j["beta"] = spec.beta;
  return j;
}

InstanceSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("instance spec must be a JSON object");
  InstanceSpec spec;
  try {
    if (j.contains("kind")) spec.kind = parse_instance_kind(j.at("kind").get<std::string>());
    if (j.contains("dim")) spec.dim = j.at("dim").get<Index>();
    if (j.contains("p")) spec.p = j.at("p").get<double>();
    if (j.contains("s")) spec.s = j.at("s").get<double>();
    if (j.contains("mu")) spec.mu = j.at("mu").get<double>();
    if (j.contains("L")) spec.lipschitz = j.at("L").get<double>();
    if (j.contains("r")) {
      const auto& r = j.at("r");
      if (r.is_number()) {
        spec.r = r.get<double>();
      } else if (!r.is_null() && !(r.is_string() && r.get<std::string>() == "auto")) {
        throw ParseError("r must be a number or \"auto\"");
      }
    }
    if (j.contains("N")) spec.n = j.at("N").get<std::int64_t>();
    if (j.contains("pi_mode")) spec.pi_mode = parse_pi_mode(j.at("pi_mode").get<std::string>());
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("alpha")) spec.alpha = j.at("alpha").get<double>();
    if (j.contains("beta")) spec.beta = j.at("beta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance spec: ") + e.what());
  }
  return spec;
}

RegQuadProblem build_one_step(double mu, double lipschitz, double s, double p, double r,
                              Index dim) {
  if (dim < 1) throw ArgumentError("dim must be >= 1");
  if (!(r > 0.0)) throw ArgumentError("r must be > 0");
  if (!(mu >= 0.0) || !(lipschitz >= mu)) throw ArgumentError("need 0 <= mu <= L");
  Vector eig = Vector::Constant(dim, lipschitz);
  eig(0) = mu;
  Vector b = Vector::Zero(dim);
  b(0) = mu * r + s * std::pow(r, p - 1.0);
  Vector x_star = Vector::Zero(dim);
  x_star(0) = r;
  return RegQuadProblem(SpectralMatrix::diagonal(std::move(eig)), std::move(b), p, s,
                        std::move(x_star));
}

double choose_r_one_step(double lipschitz, double s, double p, std::int64_t n) {
  if (!(p > 2.0)) throw UnsupportedError("automatic radius requires p > 2");
  if (!(s > 0.0) || !(lipschitz > 0.0)) throw ArgumentError("automatic radius requires L, s > 0");
  if (n < 1) throw ArgumentError("N must be >= 1");
  return std::pow(lipschitz / (s * (p - 1.0) * static_cast<double>(n)), 1.0 / (p - 2.0));
}

double choose_r_multistep(double lipschitz, double s, double p, std::int64_t n) {
  if (!(p > 2.0)) throw UnsupportedError("automatic radius requires p > 2");
  if (!(s > 0.0) || !(lipschitz > 0.0)) throw ArgumentError("automatic radius requires L, s > 0");
  if (n < 1) throw ArgumentError("N must be >= 1");
  return final_radius(lipschitz, s, p, static_cast<double>(n));
}

Vector chebyshev_eigenvalues(double mu_star, double l_star, std::int64_t n) {
  if (!(mu_star > 0.0) || !(l_star >= mu_star)) {
    throw ArgumentError("Chebyshev grid requires 0 < mu* <= L*");
  }
  if (n < 0) throw ArgumentError("N must be >= 0");
  if (n == 0) return Vector::Constant(1, mu_star);
  const Index m = 2 * n + 1;
  Vector out(m);
  for (Index k = 0; k < m; ++k) {
    const double c = std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(2 * n));
    out(k) = 0.5 * (l_star + mu_star - (l_star - mu_star) * c);
  }
  out(0) = mu_star;
  out(m - 1) = l_star;
  return out;
}

PiVector pi_uniform(std::int64_t n) {
  if (n < 0) throw ArgumentError("N must be >= 0");
  PiVector out;
  const Index m = 2 * n + 1;
  out.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
  out.provenance = PiMode::kUniform;
  return out;
}

WeightObjective chebyshev_weight_objective(const Vector& lambdas_star, const Vector& pi) {
  const Index n = lambdas_star.size();
  if (n == 0 || pi.size() != n) throw ArgumentError("weights and grid sizes differ");
  WeightObjective out;
  if (n == 1) {
    out.residuals = Vector::Ones(1);
    out.value = pi.sum();
    return out;
  }
  const double top = lambdas_star.maxCoeff();
  if (!(top > 0.0)) throw ArgumentError("grid must contain a positive point");
  const Vector t = lambdas_star / top;
  const double lo = t.minCoeff();
  const double hi = t.maxCoeff();
  const Index cols = n - 1;
  // t T_j(xi(t)) on [lo, hi]: a well-conditioned basis of degree-(n-1) polynomials
  // vanishing at the origin.
  Matrix basis(n, cols);
  for (Index i = 0; i < n; ++i) {
    const double xi = hi > lo ? (2.0 * t(i) - lo - hi) / (hi - lo) : 0.0;
    double t_prev = 1.0;
    double t_cur = xi;
    for (Index j = 0; j < cols; ++j) {
      double tj;
      if (j == 0) {
        tj = 1.0;
      } else if (j == 1) {
        tj = xi;
      } else {
        tj = 2.0 * xi * t_cur - t_prev;
        t_prev = t_cur;
        t_cur = tj;
      }
      basis(i, j) = t(i) * tj;
    }
  }
  Matrix lhs(n + cols, cols);
  Vector rhs = Vector::Zero(n + cols);
  const Vector w = pi.cwiseMax(0.0).cwiseSqrt();
  lhs.topRows(n) = w.asDiagonal() * basis;
  lhs.bottomRows(cols) = std::sqrt(kRidge) * Matrix::Identity(cols, cols);
  rhs.head(n) = w;
  const Vector c = lhs.colPivHouseholderQr().solve(rhs);
  out.residuals = Vector::Ones(n) - basis * c;
  out.value = pi.dot(out.residuals.cwiseAbs2());
  return out;
}

PiVector pi_exact_small(const Vector& lambdas_star, Index max_dim_guard) {
  const Index n = lambdas_star.size();
  if (n < 1) throw ArgumentError("empty eigenvalue grid");
  if (n > max_dim_guard) {
    throw UnsupportedError("pi_exact_small: grid of " + std::to_string(n) +
                           " points exceeds the guard of " + std::to_string(max_dim_guard) +
                           "; use the heuristic weights");
  }
  PiVector best;
  best.provenance = PiMode::kExact;
  if (n == 1) {
    best.weights = Vector::Ones(1);
    best.objective = 1.0;
    best.certificate = 1.0;
    return best;
  }

  std::mt19937_64 rng(kRestartSeed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  double best_value = -1.0;
  for (int restart = 0; restart < kRestarts; ++restart) {
    Vector pi(n);
    if (restart == 0) {
      pi.setConstant(1.0 / static_cast<double>(n));
    } else {
      for (Index i = 0; i < n; ++i) pi(i) = gamma(rng);
      pi = normalized(pi);
    }
    WeightObjective cur = chebyshev_weight_objective(lambdas_star, pi);
    double step = 1.0;
    for (int it = 0; it < kMaxAscentSteps && step > 1e-14; ++it) {
      const Vector cand = project_simplex(pi + step * cur.residuals.cwiseAbs2());
      WeightObjective next = chebyshev_weight_objective(lambdas_star, cand);
      if (next.value > cur.value) {
        pi = cand;
        cur = std::move(next);
        step *= 2.0;
      } else {
        step *= 0.5;
      }
    }
    if (cur.value > best_value) {
      best_value = cur.value;
      best.weights = pi;
    }
  }
  best.weights = normalized(best.weights);
  best.objective = best_value;
  const double lo = lambdas_star.minCoeff();
  if (lo > 0.0) {
    const double theta = theta_c(lambdas_star.maxCoeff() / lo, static_cast<double>(n - 1)).value;
    best.certificate = theta * theta;
    if (best_value < theta * theta - 1e-4) {
      best.warning = "weight optimization stopped at " + std::to_string(best_value) +
                     ", below the Chebyshev value " + std::to_string(theta * theta);
    }
  }
  return best;
}

HeuristicModel fit_heuristic_model() {
  const std::vector<std::int64_t> sizes{5, 7, 9, 11, 13};
  std::vector<Vector> exact;
  for (std::int64_t m : sizes) {
    const std::int64_t n = (m - 1) / 2;
    const double q = 3.0 * static_cast<double>(n * n) + 1.0;
    exact.push_back(pi_exact_small(chebyshev_eigenvalues(1.0, q, n)).weights);
  }

  // y_m ~ a exp(-kappa m) + d, fitted in relative error for fixed kappa.
  auto fit_endpoint = [&](bool last, double* a, double* kappa, double* d) {
    auto solve = [&](double k, Eigen::Vector2d* coef) {
      Matrix x(static_cast<Index>(sizes.size()), 2);
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        const Vector& w = exact[i];
        const double y = last ? w(w.size() - 1) : w(0);
        const double m = static_cast<double>(sizes[i]);
        x(static_cast<Index>(i), 0) = std::exp(-k * m) / y;
        x(static_cast<Index>(i), 1) = 1.0 / y;
      }
      const Vector ones = Vector::Ones(x.rows());
      const Eigen::Vector2d c = x.colPivHouseholderQr().solve(ones);
      if (coef) *coef = c;
      return (x * c - ones).squaredNorm();
    };
    const auto res = boost::math::tools::brent_find_minima(
        [&](double k) { return solve(k, nullptr); }, 1e-3, 5.0, 40);
    Eigen::Vector2d c;
    solve(res.first, &c);
    *kappa = res.first;
    *a = c(0);
    *d = c(1);
  };

  HeuristicModel model;
  fit_endpoint(false, &model.a_first, &model.kappa_first, &model.d_first);
  fit_endpoint(true, &model.a_last, &model.kappa_last, &model.d_last);

  std::vector<double> us;
  std::vector<double> logs;
  for (const Vector& w : exact) {
    for (Index u = 2; u < w.size(); ++u) {
      us.push_back(static_cast<double>(u));
      logs.push_back(std::log(w(u - 1)));
    }
  }
  const Index rows = static_cast<Index>(us.size());
  const Vector y = Eigen::Map<const Vector>(logs.data(), rows);
  auto solve_interior = [&](double c1, Eigen::Vector2d* coef) {
    Matrix x(rows, 2);
    for (Index i = 0; i < rows; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = std::log(us[static_cast<std::size_t>(i)] - c1);
    }
    const Eigen::Vector2d c = x.colPivHouseholderQr().solve(y);
    if (coef) *coef = c;
    return (x * c - y).squaredNorm();
  };
  const auto res = boost::math::tools::brent_find_minima(
      [&](double c1) { return solve_interior(c1, nullptr); }, -10.0, 1.999, 40);
  Eigen::Vector2d c;
  solve_interior(res.first, &c);
  // log pi = alpha + beta log(u - c1) = -c3 log(c2 (u - c1))
  model.c1 = res.first;
  model.c3 = -c(1);
  model.c2 = std::exp(c(0) / c(1));
  return model;
}

const HeuristicModel& heuristic_model() {
  static const HeuristicModel model = fit_heuristic_model();
  return model;
}

PiVector pi_heuristic(std::int64_t n) {
  if (n < 1) throw ArgumentError("N must be >= 1");
  const HeuristicModel& h = heuristic_model();
  const Index m = 2 * n + 1;
  const double md = static_cast<double>(m);
  Vector w(m);
  w(0) = h.a_first * std::exp(-h.kappa_first * md) + h.d_first;
  w(m - 1) = h.a_last * std::exp(-h.kappa_last * md) + h.d_last;
  for (Index u = 2; u < m; ++u) {
    w(u - 1) = std::pow(h.c2 * (static_cast<double>(u) - h.c1), -h.c3);
  }
  if (!((w.array() > 0.0).all())) throw NumericalError("heuristic weights are not positive");
  PiVector out;
  out.weights = normalized(std::move(w));
  out.provenance = PiMode::kHeuristic;
  return out;
}

MultistepData multistep_data(const InstanceSpec& spec) {
  InstanceSpec checked = spec;
  checked.kind = InstanceKind::kMultiStep;
  checked.validate();
  MultistepData out;
  out.p = spec.p;
  out.s = spec.s;
  out.r = spec.r ? *spec.r : choose_r_multistep(spec.lipschitz, spec.s, spec.p, spec.n);
  out.shift = spec.s * radius_power(out.r, spec.p);
  out.mu_star = spec.mu + out.shift;
  out.l_star = spec.lipschitz + out.shift;
  const Vector grid = chebyshev_eigenvalues(out.mu_star, out.l_star, spec.n);
  const Index active = grid.size();
  out.active = active;

  switch (spec.pi_mode) {
    case PiMode::kExact: out.pi = pi_exact_small(grid); break;
    case PiMode::kHeuristic: out.pi = pi_heuristic(spec.n); break;
    case PiMode::kUniform: out.pi = pi_uniform(spec.n); break;
  }

  struct Slot {
    double eig;
    double weight;
  };
  std::vector<Slot> slots;
  slots.reserve(static_cast<std::size_t>(spec.dim));
  for (Index k = 0; k < active; ++k) slots.push_back({grid(k) - out.shift, out.pi.weights(k)});
  slots.front().eig = spec.mu;
  slots[static_cast<std::size_t>(active - 1)].eig = spec.lipschitz;
  const Index inert = spec.dim - active;
  for (Index j = 1; j <= inert; ++j) {
    slots.push_back({spec.mu + (spec.lipschitz - spec.mu) * static_cast<double>(j) /
                                   static_cast<double>(inert + 1),
                     0.0});
  }
  std::stable_sort(slots.begin(), slots.end(),
                   [](const Slot& a, const Slot& b) { return a.eig < b.eig; });

  out.eigenvalues.resize(spec.dim);
  out.sqrt_pi.resize(spec.dim);
  for (Index i = 0; i < spec.dim; ++i) {
    out.eigenvalues(i) = slots[static_cast<std::size_t>(i)].eig;
    out.sqrt_pi(i) = std::sqrt(slots[static_cast<std::size_t>(i)].weight);
  }
  out.b = out.r * (out.eigenvalues.array() + out.shift).matrix().cwiseProduct(out.sqrt_pi);
  return out;
}

RegQuadProblem problem_from_multistep(const MultistepData& data) {
  return RegQuadProblem(SpectralMatrix::diagonal(data.eigenvalues), data.b, data.p, data.s,
                        Vector(data.r * data.sqrt_pi));
}

RegQuadProblem build_multistep(const InstanceSpec& spec) {
  return problem_from_multistep(multistep_data(spec));
}

RegQuadProblem random_instance(const InstanceSpec& spec) {
  InstanceSpec checked = spec;
  checked.kind = InstanceKind::kRandom;
  checked.validate();
  const Index d = spec.dim;
  const double r = spec.r.value_or(1.0);

  Vector eig(d);
  for (Index i = 0; i < d; ++i) {
    eig(i) = spec.mu + (spec.lipschitz - spec.mu) * static_cast<double>(i) / static_cast<double>(d - 1);
  }
  eig(d - 1) = spec.lipschitz;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(d, d);
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix u = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix& packed = qr.matrixQR();
  for (Index j = 0; j < d; ++j) {
    if (packed(j, j) < 0.0) u.col(j) = -u.col(j);
  }
  Vector v(d);
  for (Index i = 0; i < d; ++i) v(i) = normal(rng);
  const Vector x_star = (r / v.norm()) * v;

  // A = U^T Lambda U, so the stored eigenvector factor is U^T.
  SpectralMatrix a = SpectralMatrix::dense(std::move(eig), u.transpose());
  Vector b = a.matvec(x_star) + (spec.s * radius_power(r, spec.p)) * x_star;
  return RegQuadProblem(std::move(a), std::move(b), spec.p, spec.s, x_star);
}

RegQuadProblem beta_spectrum_instance(const InstanceSpec& spec, double alpha, double beta) {
  InstanceSpec checked = spec;
  checked.kind = InstanceKind::kBeta;
  checked.alpha = alpha;
  checked.beta = beta;
  checked.validate();
  const Index d = spec.dim;
  std::mt19937_64 rng(spec.seed);
  boost::random::beta_distribution<double> dist(alpha, beta);
  Vector eig(d);
  for (Index i = 0; i < d; ++i) eig(i) = spec.mu + (spec.lipschitz - spec.mu) * dist(rng);
  std::sort(eig.data(), eig.data() + d);
  eig(0) = spec.mu;
  eig(d - 1) = spec.lipschitz;

  const double r = spec.r ? *spec.r : choose_r_multistep(spec.lipschitz, spec.s, spec.p, spec.n);
  const double shift = spec.s * radius_power(r, spec.p);
  const double w = 1.0 / std::sqrt(static_cast<double>(d));
  Vector b = (r * w) * (eig.array() + shift).matrix();
  Vector x_star = Vector::Constant(d, r * w);
  return RegQuadProblem(SpectralMatrix::diagonal(std::move(eig)), std::move(b), spec.p, spec.s,
                        std::move(x_star));
}

RegQuadProblem generate(const InstanceSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case InstanceKind::kOneStep: {
      const double r = spec.r ? *spec.r : choose_r_one_step(spec.lipschitz, spec.s, spec.p, spec.n);
      return build_one_step(spec.mu, spec.lipschitz, spec.s, spec.p, r, spec.dim);
    }
    case InstanceKind::kMultiStep: return build_multistep(spec);
    case InstanceKind::kRandom: return random_instance(spec);
    case InstanceKind::kBeta: return beta_spectrum_instance(spec, spec.alpha, spec.beta);
  }
  throw ArgumentError("unknown instance kind");
}

}  // namespace regquad
