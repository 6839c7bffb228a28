#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace regquad {

// A bound evaluation. Values below 1e-300 are clamped to 0 and flagged; a
// degenerate condition number (Q = 1) yields the limiting value with a flag.
struct BoundValue {
  double value = 0.0;
  bool degenerate = false;
  bool underflow = false;
  // Natural log of the bound, kept even when `value` underflows to zero.
  double log_value = -std::numeric_limits<double>::infinity();

  operator double() const { return value; }  // NOLINT(google-explicit-constructor)
};

// F0 [8 max{2M*, M0} (p-1)^{2(p-1)/p} / (4s)^{2/p} / ((pF0)^{(p-2)/p}(p-2)k + 1)]^{p/(p-2)}
BoundValue upper_bound_gd(double f0, double m_star, double m0, double s, double p, double k);
// Same constants with the telescoped denominator C + X k instead of 1 + X k.
BoundValue upper_bound_gd_telescoped(double f0, double m_star, double m0, double s, double p,
                                     double k);

// f(0) - f* <= 2^{-3} ((p-1)s)^{-2/(p-2)} M*^{p/(p-2)}
BoundValue init_residual_bound(double m_star, double s, double p);

// r exp(-N / (Qbar - 1)) with the (p-1)-weighted condition number.
BoundValue lb_one_step_distance(double lipschitz, double s, double p, double r, double n,
                                double mu = 0.0);
// Lower bounds at the radius (L / (s(p-1)N))^{1/(p-2)}.
BoundValue lb_one_step_residual(double lipschitz, double s, double p, double n);
BoundValue lb_one_step_grad(double lipschitz, double s, double p, double n);

// 2 / (a^n + a^{-n}) with a = (sqrt(c)+1)/(sqrt(c)-1).
BoundValue theta_c(double c, double n);
// 1 / (exp(2n / (sqrt(c)-1)) + 1)
BoundValue theta_lower(double c, double n);

// Krylov lower bounds for a target radius r; `simplified` selects the mu = 0
// forms that need Q* >= 2.
BoundValue lb_multistep_distance(double mu, double lipschitz, double s, double p, double r,
                                 double n, bool simplified = false);
BoundValue lb_multistep_residual(double mu, double lipschitz, double s, double p, double r,
                                 double n, bool simplified = false);
BoundValue lb_multistep_grad(double mu, double lipschitz, double s, double p, double r, double n,
                             bool simplified = false);

// The three successively weaker distance displays for the Chebyshev argument.
struct ThetaChain {
  double sharp = 0.0;
  double middle = 0.0;
  double exponential = 0.0;
};
ThetaChain theta_chain(double q_star, double r, double n);

// Radius (L / (3 s N^2))^{1/(p-2)} substituted into the simplified forms.
double final_radius(double lipschitz, double s, double p, double n);
BoundValue lb_final_residual(double lipschitz, double s, double p, double n);
BoundValue lb_final_grad(double lipschitz, double s, double p, double n);

// (s r^2 exp(-16N/(sqrt(Q)-1)), s r exp(-8N/(sqrt(Q)-1))) with Q = (L+s)/(mu+s).
std::pair<BoundValue, BoundValue> lb_strongly_convex(double mu, double lipschitz, double s,
                                                     double r, double n);

// 4 ((sqrt(Q)-1)/(sqrt(Q)+1))^{2m} F0: residual guarantee of m conjugate
// gradient steps on a quadratic with condition number Q.
BoundValue cg_upper_bound(double q, double m, double f0);

// Log-log slope of lb_final_residual between n_lo and n_hi.
double lb_final_slope(double lipschitz, double s, double p, double n_lo, double n_hi);
// Same slope for s = D^{-p}; tends to -2 as p grows.
double trust_region_limit_slope(double d_radius, double lipschitz, double p, double n_lo,
                                double n_hi);

enum class BoundKind {
  kUpperGd,
  kLbOneStepDist,
  kLbOneStepRes,
  kLbOneStepGrad,
  kLbMultiDist,
  kLbMultiRes,
  kLbMultiGrad,
  kLbFinalRes,
  kLbFinalGrad,
  kLbStrongCvxRes,
  kLbStrongCvxGrad,
  kInitRes,
};

const char* to_string(BoundKind kind);
BoundKind parse_bound_kind(std::string_view name);

struct BoundParams {
  double p = 3.0;
  double s = 1.0;
  double mu = 0.0;
  double lipschitz = 1.0;
  double r = 1.0;
  double m_star = 1.0;
  double m0 = 1.0;
  double f0 = 1.0;
  bool simplified = false;
};

BoundValue evaluate_bound(BoundKind kind, const BoundParams& params, double k);

struct BoundEnvelope {
  BoundKind kind = BoundKind::kUpperGd;
  BoundParams params;
  std::vector<std::pair<std::int64_t, BoundValue>> values;
};

BoundEnvelope make_envelope(BoundKind kind, const BoundParams& params,
                            const std::vector<std::int64_t>& iters);

// Columns iter, value, kind; `header` controls the header row so several
// envelopes can share one file.
void write_envelope_csv(const BoundEnvelope& envelope, std::ostream& out, bool header = true);

}  // namespace regquad
