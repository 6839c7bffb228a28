#pragma once

#include <cstdint>
#include <optional>

#include "regquad/types.hpp"

namespace regquad {

/// Symmetric matrix stored through its spectral decomposition A = U diag(lambda) U^T.
///
/// In diagonal mode U is the identity and is not stored. Eigenvalues are kept in
/// ascending order; builders arrange coordinates accordingly.
class SpectralMatrix {
 public:
  enum class Representation { kDiagonal, kDenseSpectral };

  static SpectralMatrix diagonal(Vector eigenvalues);
  static SpectralMatrix dense(Vector eigenvalues, Matrix factor);

  Index dim() const { return eigenvalues_.size(); }
  Representation representation() const { return rep_; }
  bool is_diagonal() const { return rep_ == Representation::kDiagonal; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  // Empty in diagonal mode.
  const Matrix& factor() const { return factor_; }

  double min_eigenvalue() const { return eigenvalues_.size() ? eigenvalues_(0) : 0.0; }
  double max_eigenvalue() const {
    return eigenvalues_.size() ? eigenvalues_(eigenvalues_.size() - 1) : 0.0;
  }

  Vector matvec(const Vector& x) const;
  // U^T x and U y.
  Vector to_eigenbasis(const Vector& x) const;
  Vector from_eigenbasis(const Vector& y) const;
  // (A + shift I)^{-1} v. Throws SingularSystemError on a zero shifted eigenvalue
  // that meets a nonzero component of v.
  Vector shifted_solve(double shift, const Vector& v) const;
  Matrix to_dense() const;
  // max |U^T U - I|; zero in diagonal mode.
  double orthogonality_error() const;

 private:
  SpectralMatrix(Representation rep, Vector eigenvalues, Matrix factor);

  Representation rep_;
  Vector eigenvalues_;
  Matrix factor_;
};

struct FirstOrderInfo {
  double value = 0.0;
  Vector gradient;
};

struct OracleCounter {
  std::int64_t grad_evals = 0;
  std::int64_t func_evals = 0;
  std::int64_t matvecs = 0;
  // Exact solves performed for setup (e.g. computing ||x*|| for gd_run).
  std::int64_t exact_solves = 0;

  OracleCounter& operator+=(const OracleCounter& o) {
    grad_evals += o.grad_evals;
    func_evals += o.func_evals;
    matvecs += o.matvecs;
    exact_solves += o.exact_solves;
    return *this;
  }
};

/// f(x) = 1/2 x^T A x - b^T x + (s/p) ||x||^p with A symmetric PSD.
///
/// Immutable after construction. The constructor validates every invariant
/// (p >= 2, s >= 0, nonnegative spectrum, dimension agreement, and stationarity
/// of `known_solution` when one is supplied) and throws ArgumentError otherwise.
class RegQuadProblem {
 public:
  RegQuadProblem(SpectralMatrix matrix, Vector b, double p, double s,
                 std::optional<Vector> known_solution = std::nullopt);

  Index dim() const { return b_.size(); }
  double p() const { return p_; }
  double s() const { return s_; }
  const SpectralMatrix& matrix() const { return matrix_; }
  const Vector& b() const { return b_; }
  const std::optional<Vector>& known_solution() const { return known_solution_; }
  double mu() const { return matrix_.min_eigenvalue(); }
  double lipschitz() const { return matrix_.max_eigenvalue(); }

 private:
  SpectralMatrix matrix_;
  Vector b_;
  double p_;
  double s_;
  std::optional<Vector> known_solution_;
};

// ||x||^{p-2}, with the p = 2 branch returning 1 and 0^{p-2} = 0 for p > 2.
double norm_power(double norm, double p);

FirstOrderInfo eval(const RegQuadProblem& problem, const Vector& x,
                    OracleCounter* counter = nullptr);
double eval_value(const RegQuadProblem& problem, const Vector& x,
                  OracleCounter* counter = nullptr);
double stationarity_residual(const RegQuadProblem& problem, const Vector& x);

// (A + sI)^{-1} b; p must be exactly 2.
Vector closed_form_p2(const RegQuadProblem& problem);

double sigma_p(double p, double s);
double sigma_p(const RegQuadProblem& problem);

// L + s (p-1) 2^{p-2} r^{p-2}
double m_star(double lipschitz, double s, double p, double r);
double m_star(const RegQuadProblem& problem, double r);

enum class ConditionForm {
  kKrylov,   // Q* = (L + s r^{p-2}) / (mu + s r^{p-2})
  kOneStep,  // Qbar = (L + s(p-1) r^{p-2}) / (mu + s(p-1) r^{p-2})
};

double modified_condition_number(double mu, double lipschitz, double s, double p, double r,
                                 ConditionForm form = ConditionForm::kKrylov);

}  // namespace regquad
