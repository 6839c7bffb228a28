// Reference computations used by the tests. Nothing here calls into the
// solvers or bound evaluators under test; each helper recomputes its quantity
// from scratch by a different route.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Index;

inline double fd_directional(const std::function<double(const Vec&)>& f, const Vec& x,
                             const Vec& h, double eps) {
  return (f(x + eps * h) - f(x - eps * h)) / (2.0 * eps);
}

// f(x) = 1/2 x^T A x - b^T x + (s/p)||x||^p on an explicit dense A.
struct DenseObjective {
  Mat a;
  Vec b;
  double p = 3.0;
  double s = 1.0;

  double value(const Vec& x) const {
    return 0.5 * x.dot(a * x) - b.dot(x) + s / p * std::pow(x.norm(), p);
  }
  Vec gradient(const Vec& x) const {
    const double n = x.norm();
    const double w = p == 2.0 ? 1.0 : (n > 0.0 ? std::pow(n, p - 2.0) : 0.0);
    return a * x + s * w * x - b;
  }
};

// Minimizes c -> 1/2 c^T H c - g^T c + (s/p)||c||^p by damped Newton.
// The objective is strictly convex for s > 0 or H positive definite.
inline Vec newton_minimize(const Mat& h, const Vec& g, double p, double s, int iters = 200) {
  const Index m = g.size();
  auto val = [&](const Vec& c) {
    return 0.5 * c.dot(h * c) - g.dot(c) + s / p * std::pow(c.norm(), p);
  };
  Vec c = Vec::Zero(m);
  for (int it = 0; it < iters; ++it) {
    const double n = c.norm();
    const double w = p == 2.0 ? 1.0 : (n > 0.0 ? std::pow(n, p - 2.0) : 0.0);
    const Vec grad = h * c + s * w * c - g;
    if (grad.norm() <= 1e-15 * (1.0 + g.norm())) break;
    Mat hess = h + s * w * Mat::Identity(m, m);
    if (p != 2.0 && n > 0.0) hess += s * (p - 2.0) * std::pow(n, p - 4.0) * c * c.transpose();
    hess += 1e-14 * (1.0 + h.norm()) * Mat::Identity(m, m);
    const Vec step = hess.ldlt().solve(-grad);
    double t = 1.0;
    const double f0 = val(c);
    while (t > 1e-12 && val(c + t * step) > f0 + 1e-4 * t * grad.dot(step)) t *= 0.5;
    c += t * step;
  }
  return c;
}

// min f over span{b, Ab, ..., A^{m-1} b}: explicit Krylov matrix, column
// scaling, Householder QR, then Newton on the reduced problem.
inline double brute_force_krylov_min(const DenseObjective& obj, Index m) {
  const Index d = obj.b.size();
  Mat k(d, m);
  Vec v = obj.b;
  for (Index j = 0; j < m; ++j) {
    k.col(j) = v / v.norm();
    v = obj.a * k.col(j);
  }
  Eigen::ColPivHouseholderQR<Mat> qr(k);
  const Index rank = qr.rank();
  const Mat q = (qr.householderQ() * Mat::Identity(d, m)).leftCols(rank);
  const Mat h = q.transpose() * obj.a * q;
  const Vec g = q.transpose() * obj.b;
  const Vec c = newton_minimize(0.5 * (h + h.transpose()), g, obj.p, obj.s);
  return obj.value(q * c);
}

// Unique r >= 0 with (l + s r^{p-2}) r = rhs, by bisection.
inline double secular_bisect(double l, double s, double p, double rhs) {
  if (rhs <= 0.0) return 0.0;
  auto lhs = [&](double r) { return (l + s * (p == 2.0 ? 1.0 : std::pow(r, p - 2.0))) * r; };
  double lo = 0.0;
  double hi = 1.0;
  while (lhs(hi) < rhs) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (lhs(mid) < rhs) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Scalar simulation of a one-step method on the one-step instance
// A = diag(mu, L, ..., L), b = (mu r + s r^{p-1}) e_1. Iterates are r_k e_1 and
// x_{k+1} = alpha_k x_k - beta_k grad q(x_k) becomes
// r_{k+1} = (alpha_k - beta_k mu) r_k + beta_k (mu r + s r^{p-1}).
struct OneStepScalar {
  double mu = 0.0;
  double l = 1.0;
  double s = 1.0;
  double p = 3.0;
  double r = 1.0;

  double b1() const { return mu * r + s * std::pow(r, p - 1.0); }

  // Gradient descent with a fixed step, or with the min{1/M, ...} rule when
  // step <= 0 and m > 0.
  std::vector<double> gd(int steps, double step, double m = 0.0) const {
    std::vector<double> rs{0.0};
    for (int k = 0; k < steps; ++k) {
      const double rk = rs.back();
      const double w = std::pow(std::abs(rk), p - 2.0);
      double eta = step;
      if (eta <= 0.0) {
        const double g = std::abs(mu * rk + s * w * rk - b1());
        eta = 1.0 / m;
        if (g > 0.0) {
          eta = std::min(eta, std::pow(p / (s * std::pow(2.0, p - 2.0) * std::pow(g, p - 2.0)),
                                       1.0 / (p - 1.0)));
        }
      }
      const double alpha = 1.0 - eta * s * w;
      const double beta = eta;
      rs.push_back((alpha - beta * mu) * rk + beta * b1());
    }
    return rs;
  }

  std::vector<double> composite(int steps) const {
    std::vector<double> rs{0.0};
    for (int k = 0; k < steps; ++k) {
      const double rk = rs.back();
      const double rhs = std::abs(l * rk - (mu * rk - b1()));
      const double next = secular_bisect(l, s, p, rhs);
      const double denom = l + s * std::pow(next, p - 2.0);
      const double alpha = l / denom;
      const double beta = 1.0 / denom;
      rs.push_back((alpha - beta * mu) * rk + beta * b1());
    }
    return rs;
  }
};

// 2 / (a^n + a^{-n}) with a = (sqrt(c)+1)/(sqrt(c)-1), evaluated directly.
inline double theta(double c, int n) {
  const double a = (std::sqrt(c) + 1.0) / (std::sqrt(c) - 1.0);
  return 2.0 / (std::pow(a, n) + std::pow(a, -n));
}

inline Vec chebyshev_grid(double lo, double hi, int n) {
  Vec t(2 * n + 1);
  for (int k = 0; k <= 2 * n; ++k) {
    t(k) = 0.5 * (hi + lo - (hi - lo) * std::cos(k * std::numbers::pi / (2.0 * n)));
  }
  return t;
}

// min over q of degree len-2 of sum_i pi_i (1 - t_i q(t_i))^2, solved with a
// monomial basis in the centered variable and a full SVD.
inline double weighted_lsq_residual(const Vec& t, const Vec& pi) {
  const Index n = t.size();
  const double lo = t.minCoeff();
  const double hi = t.maxCoeff();
  Mat v(n, n - 1);
  Vec rhs(n);
  for (Index i = 0; i < n; ++i) {
    const double xi = hi > lo ? (2.0 * t(i) - lo - hi) / (hi - lo) : 0.0;
    const double w = std::sqrt(pi(i));
    double pw = 1.0;
    for (Index j = 0; j < n - 1; ++j) {
      v(i, j) = w * t(i) * pw;
      pw *= xi;
    }
    rhs(i) = w;
  }
  Eigen::JacobiSVD<Mat> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-14);
  const Vec c = svd.solve(rhs);
  return (rhs - v * c).squaredNorm();
}

// Least squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

}  // namespace oracles
