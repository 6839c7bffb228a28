#include "regquad/bounds.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "regquad/errors.hpp"
#include "regquad/serialization.hpp"

namespace regquad {

namespace {

constexpr double kUnderflow = 1e-300;
const double kLogUnderflow = std::log(kUnderflow);

BoundValue from_log(double log_value) {
  BoundValue out;
  if (std::isnan(log_value)) throw NumericalError("bound evaluated to NaN");
  out.log_value = log_value;
  if (log_value < kLogUnderflow) {
    out.underflow = true;
    return out;
  }
  out.value = std::exp(log_value);
  return out;
}

void require_p_above_two(double p, const char* who) {
  if (!(p > 2.0)) throw UnsupportedError(std::string(who) + " requires p > 2");
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ArgumentError(std::string(what) + " must be > 0");
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw ArgumentError(std::string(what) + " must be >= 0");
}

double krylov_q(double mu, double lipschitz, double s, double p, double r) {
  const double shift = s * std::pow(r, p - 2.0);
  const double denom = mu + shift;
  if (!(denom > 0.0)) throw DegenerateError("mu + s r^{p-2} must be > 0");
  return (lipschitz + shift) / denom;
}

// exp(-c N / (sqrt(Q) - 1)) in log form; Q = 1 gives -inf for N > 0.
double log_decay(double q, double c, double n, bool* degenerate) {
  const double root = std::sqrt(q) - 1.0;
  if (!(root > 0.0)) {
    *degenerate = true;
    return n == 0.0 ? 0.0 : -INFINITY;
  }
  return -c * n / root;
}

BoundValue multistep(double log_prefactor, double q, double c, double n, bool simplified,
                     double simplified_rate) {
  bool degenerate = false;
  // The simplified forms replace 1/(sqrt(Q)-1) by 2 sqrt(s r^{p-2} / L).
  const double decay =
      simplified ? -2.0 * c * n * simplified_rate : log_decay(q, c, n, &degenerate);
  BoundValue out = std::isinf(decay) ? BoundValue{} : from_log(log_prefactor + decay);
  out.degenerate = degenerate;
  return out;
}

void check_simplified(double mu, double q) {
  if (mu != 0.0) throw ArgumentError("simplified bounds require mu = 0");
  if (!(q >= 2.0)) throw ArgumentError("simplified bounds require Q* >= 2");
}

}  // namespace

BoundValue upper_bound_gd(double f0, double m_star, double m0, double s, double p, double k) {
  require_p_above_two(p, "upper_bound_gd");
  require_positive(s, "s");
  require_positive(f0, "F0");
  require_nonnegative(k, "k");
  const double log_c = std::log(8.0 * std::max(2.0 * m_star, m0)) - (2.0 / p) * std::log(4.0 * s) +
                       (2.0 * (p - 1.0) / p) * std::log(p - 1.0);
  const double x = std::pow(p * f0, (p - 2.0) / p) * (p - 2.0);
  return from_log(std::log(f0) + (p / (p - 2.0)) * (log_c - std::log1p(x * k)));
}

BoundValue upper_bound_gd_telescoped(double f0, double m_star, double m0, double s, double p,
                                     double k) {
  require_p_above_two(p, "upper_bound_gd_telescoped");
  require_positive(s, "s");
  require_positive(f0, "F0");
  require_nonnegative(k, "k");
  const double c = 8.0 * std::max(2.0 * m_star, m0) / std::pow(4.0 * s, 2.0 / p) *
                   std::pow(p - 1.0, 2.0 * (p - 1.0) / p);
  const double x = std::pow(p * f0, (p - 2.0) / p) * (p - 2.0);
  return from_log(std::log(f0) + (p / (p - 2.0)) * (std::log(c) - std::log(c + x * k)));
}

BoundValue init_residual_bound(double m_star, double s, double p) {
  require_p_above_two(p, "init_residual_bound");
  require_positive(s, "s");
  require_positive(m_star, "M*");
  return from_log(-3.0 * std::log(2.0) - (2.0 / (p - 2.0)) * std::log((p - 1.0) * s) +
                  (p / (p - 2.0)) * std::log(m_star));
}

BoundValue lb_one_step_distance(double lipschitz, double s, double p, double r, double n,
                                double mu) {
  require_positive(r, "r");
  require_nonnegative(n, "N");
  const double shift = s * (p - 1.0) * std::pow(r, p - 2.0);
  if (!(mu + shift > 0.0)) throw DegenerateError("mu + s(p-1) r^{p-2} must be > 0");
  const double q_bar = (lipschitz + shift) / (mu + shift);
  BoundValue out;
  if (!(q_bar > 1.0)) {
    out.degenerate = true;
    if (n == 0.0) out.value = r;
    return out;
  }
  return from_log(std::log(r) - n / (q_bar - 1.0));
}

BoundValue lb_one_step_residual(double lipschitz, double s, double p, double n) {
  require_p_above_two(p, "lb_one_step_residual");
  require_positive(s, "s");
  require_positive(lipschitz, "L");
  if (!(n >= 1.0)) throw ArgumentError("N must be >= 1");
  return from_log(std::log(s) - std::log(p) - (p - 2.0) * std::log(2.0) - p +
                  (p / (p - 2.0)) * std::log(lipschitz / (s * (p - 1.0) * n)));
}

BoundValue lb_one_step_grad(double lipschitz, double s, double p, double n) {
  require_p_above_two(p, "lb_one_step_grad");
  require_positive(s, "s");
  require_positive(lipschitz, "L");
  if (!(n >= 1.0)) throw ArgumentError("N must be >= 1");
  const double log_pow = (p / (p - 1.0)) * std::log(s * std::pow(2.0, 2.0 - p)) -
                         std::log(p - 1.0) - p +
                         (p / (p - 2.0)) * std::log(lipschitz / (s * (p - 1.0) * n));
  return from_log(((p - 1.0) / p) * log_pow);
}

BoundValue theta_c(double c, double n) {
  if (!(c >= 1.0)) throw ArgumentError("theta_c requires c >= 1");
  require_nonnegative(n, "n");
  BoundValue out;
  if (c == 1.0) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  const double sq = std::sqrt(c);
  const double x = n * std::log((sq + 1.0) / (sq - 1.0));
  // 2 / (e^x + e^{-x}) = 2 e^{-x} / (1 + e^{-2x})
  return from_log(std::log(2.0) - x - std::log1p(std::exp(-2.0 * x)));
}

BoundValue theta_lower(double c, double n) {
  if (!(c >= 1.0)) throw ArgumentError("theta_lower requires c >= 1");
  require_nonnegative(n, "n");
  BoundValue out;
  if (c == 1.0) {
    out.value = n == 0.0 ? 0.5 : 0.0;
    out.degenerate = true;
    return out;
  }
  const double y = 2.0 * n / (std::sqrt(c) - 1.0);
  return from_log(-y - std::log1p(std::exp(-y)));
}

BoundValue lb_multistep_distance(double mu, double lipschitz, double s, double p, double r,
                                 double n, bool simplified) {
  require_positive(r, "r");
  require_nonnegative(n, "N");
  const double q = krylov_q(mu, lipschitz, s, p, r);
  if (simplified) check_simplified(mu, q);
  const double rate = std::sqrt(s * std::pow(r, p - 2.0) / lipschitz);
  return multistep(std::log(r), q, 8.0, n, simplified, rate);
}

BoundValue lb_multistep_residual(double mu, double lipschitz, double s, double p, double r,
                                 double n, bool simplified) {
  require_positive(r, "r");
  require_positive(s, "s");
  require_nonnegative(n, "N");
  const double q = krylov_q(mu, lipschitz, s, p, r);
  if (simplified) check_simplified(mu, q);
  const double rate = std::sqrt(s * std::pow(r, p - 2.0) / lipschitz);
  const double log_pre = std::log(s) - std::log(p) - (p - 2.0) * std::log(2.0) + p * std::log(r);
  return multistep(log_pre, q, 8.0 * p, n, simplified, rate);
}

BoundValue lb_multistep_grad(double mu, double lipschitz, double s, double p, double r, double n,
                             bool simplified) {
  require_positive(r, "r");
  require_positive(s, "s");
  require_nonnegative(n, "N");
  const double q = krylov_q(mu, lipschitz, s, p, r);
  if (simplified) check_simplified(mu, q);
  const double rate = std::sqrt(s * std::pow(r, p - 2.0) / lipschitz);
  const double log_pre = (2.0 - p) * std::log(2.0) + std::log(s) -
                         ((p - 1.0) / p) * std::log(p - 1.0) + (p - 1.0) * std::log(r);
  return multistep(log_pre, q, 8.0 * (p - 1.0), n, simplified, rate);
}

ThetaChain theta_chain(double q_star, double r, double n) {
  ThetaChain out;
  out.sharp = r * theta_c(q_star, 2.0 * n).value;
  out.middle = 2.0 * r * theta_lower(q_star, 2.0 * n).value;
  bool degenerate = false;
  const double decay = log_decay(q_star, 8.0, n, &degenerate);
  out.exponential = std::isinf(decay) ? 0.0 : r * std::exp(decay);
  return out;
}

double final_radius(double lipschitz, double s, double p, double n) {
  require_p_above_two(p, "final_radius");
  require_positive(s, "s");
  require_positive(lipschitz, "L");
  if (!(n >= 1.0)) throw ArgumentError("N must be >= 1");
  return std::pow(lipschitz / (3.0 * s * n * n), 1.0 / (p - 2.0));
}

BoundValue lb_final_residual(double lipschitz, double s, double p, double n) {
  const double r = final_radius(lipschitz, s, p, n);
  return lb_multistep_residual(0.0, lipschitz, s, p, r, n, true);
}

BoundValue lb_final_grad(double lipschitz, double s, double p, double n) {
  const double r = final_radius(lipschitz, s, p, n);
  return lb_multistep_grad(0.0, lipschitz, s, p, r, n, true);
}

std::pair<BoundValue, BoundValue> lb_strongly_convex(double mu, double lipschitz, double s,
                                                     double r, double n) {
  require_nonnegative(mu, "mu");
  require_nonnegative(s, "s");
  require_positive(r, "r");
  require_nonnegative(n, "N");
  if (!(mu + s > 0.0)) throw DegenerateError("mu + s must be > 0");
  if (!(lipschitz >= mu)) throw ArgumentError("L must be >= mu");
  const double q = (lipschitz + s) / (mu + s);
  BoundValue res;
  BoundValue grad;
  if (s == 0.0) {
    res.degenerate = grad.degenerate = true;
    return {res, grad};
  }
  res = multistep(std::log(s) + 2.0 * std::log(r), q, 16.0, n, false, 0.0);
  grad = multistep(std::log(s) + std::log(r), q, 8.0, n, false, 0.0);
  return {res, grad};
}

BoundValue cg_upper_bound(double q, double m, double f0) {
  if (!(q >= 1.0)) throw ArgumentError("condition number must be >= 1");
  require_nonnegative(m, "m");
  require_nonnegative(f0, "F0");
  if (f0 == 0.0) return {};
  const double sq = std::sqrt(q);
  if (q == 1.0) return m == 0.0 ? BoundValue{4.0 * f0} : BoundValue{};
  return from_log(std::log(4.0 * f0) + 2.0 * m * std::log((sq - 1.0) / (sq + 1.0)));
}

double lb_final_slope(double lipschitz, double s, double p, double n_lo, double n_hi) {
  if (!(n_hi > n_lo)) throw ArgumentError("slope range must satisfy n_lo < n_hi");
  const BoundValue lo = lb_final_residual(lipschitz, s, p, n_lo);
  const BoundValue hi = lb_final_residual(lipschitz, s, p, n_hi);
  if (!std::isfinite(lo.log_value) || !std::isfinite(hi.log_value)) {
    throw NumericalError("bound vanishes on the slope range");
  }
  return (hi.log_value - lo.log_value) / (std::log(n_hi) - std::log(n_lo));
}

double trust_region_limit_slope(double d_radius, double lipschitz, double p, double n_lo,
                                double n_hi) {
  require_positive(d_radius, "D");
  return lb_final_slope(lipschitz, std::pow(d_radius, -p), p, n_lo, n_hi);
}

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kUpperGd: return "upper-gd";
    case BoundKind::kLbOneStepDist: return "lb-one-step-dist";
    case BoundKind::kLbOneStepRes: return "lb-one-step-res";
    case BoundKind::kLbOneStepGrad: return "lb-one-step-grad";
    case BoundKind::kLbMultiDist: return "lb-multi-dist";
    case BoundKind::kLbMultiRes: return "lb-multi-res";
    case BoundKind::kLbMultiGrad: return "lb-multi-grad";
    case BoundKind::kLbFinalRes: return "lb-final-res";
    case BoundKind::kLbFinalGrad: return "lb-final-grad";
    case BoundKind::kLbStrongCvxRes: return "lb-strongcvx-res";
    case BoundKind::kLbStrongCvxGrad: return "lb-strongcvx-grad";
    case BoundKind::kInitRes: return "init-res";
  }
  return "unknown";
}

BoundKind parse_bound_kind(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(BoundKind::kInitRes); ++i) {
    const auto kind = static_cast<BoundKind>(i);
    if (name == to_string(kind)) return kind;
  }
  throw ArgumentError("unknown bound kind '" + std::string(name) + "'");
}

BoundValue evaluate_bound(BoundKind kind, const BoundParams& a, double k) {
  switch (kind) {
    case BoundKind::kUpperGd: return upper_bound_gd(a.f0, a.m_star, a.m0, a.s, a.p, k);
    case BoundKind::kLbOneStepDist: return lb_one_step_distance(a.lipschitz, a.s, a.p, a.r, k, a.mu);
    case BoundKind::kLbOneStepRes: return lb_one_step_residual(a.lipschitz, a.s, a.p, k);
    case BoundKind::kLbOneStepGrad: return lb_one_step_grad(a.lipschitz, a.s, a.p, k);
    case BoundKind::kLbMultiDist:
      return lb_multistep_distance(a.mu, a.lipschitz, a.s, a.p, a.r, k, a.simplified);
    case BoundKind::kLbMultiRes:
      return lb_multistep_residual(a.mu, a.lipschitz, a.s, a.p, a.r, k, a.simplified);
    case BoundKind::kLbMultiGrad:
      return lb_multistep_grad(a.mu, a.lipschitz, a.s, a.p, a.r, k, a.simplified);
    case BoundKind::kLbFinalRes: return lb_final_residual(a.lipschitz, a.s, a.p, k);
    case BoundKind::kLbFinalGrad: return lb_final_grad(a.lipschitz, a.s, a.p, k);
    case BoundKind::kLbStrongCvxRes: return lb_strongly_convex(a.mu, a.lipschitz, a.s, a.r, k).first;
    case BoundKind::kLbStrongCvxGrad:
      return lb_strongly_convex(a.mu, a.lipschitz, a.s, a.r, k).second;
    case BoundKind::kInitRes: return init_residual_bound(a.m_star, a.s, a.p);
  }
  throw ArgumentError("unknown bound kind");
}

BoundEnvelope make_envelope(BoundKind kind, const BoundParams& params,
                            const std::vector<std::int64_t>& iters) {
  BoundEnvelope env;
  env.kind = kind;
  env.params = params;
  env.values.reserve(iters.size());
  for (std::int64_t k : iters) {
    env.values.emplace_back(k, evaluate_bound(kind, params, static_cast<double>(k)));
  }
  return env;
}

void write_envelope_csv(const BoundEnvelope& envelope, std::ostream& out, bool header) {
  if (header) out << "iter,value,kind\n";
  CsvWriter csv(out);
  for (const auto& [k, v] : envelope.values) {
    csv.field(static_cast<long long>(k)).field(v.value).field(to_string(envelope.kind));
    csv.end_row();
  }
}

}  // namespace regquad
