#include "regquad/core_model.hpp"

#include <cmath>
#include <string>

#include "regquad/errors.hpp"

namespace regquad {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kArgument: return "argument error";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kSingularSystem: return "singular system";
    case ErrorCode::kNumerical: return "numerical error";
    case ErrorCode::kDegenerate: return "degenerate instance";
    case ErrorCode::kExhausted: return "adversary exhausted";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kParse: return "parse error";
  }
  return "unknown error";
}

namespace {

constexpr double kOrthogonalityTol = 1e-10;

void require_dim(const RegQuadProblem& problem, const Vector& x) {
  if (x.size() != problem.dim()) {
    throw ArgumentError("dimension mismatch: expected " + std::to_string(problem.dim()) +
                        ", got " + std::to_string(x.size()));
  }
}

}  // namespace

SpectralMatrix::SpectralMatrix(Representation rep, Vector eigenvalues, Matrix factor)
    : rep_(rep), eigenvalues_(std::move(eigenvalues)), factor_(std::move(factor)) {
  for (Index i = 0; i < eigenvalues_.size(); ++i) {
    if (!std::isfinite(eigenvalues_(i))) throw ArgumentError("non-finite eigenvalue");
    if (i > 0 && eigenvalues_(i) < eigenvalues_(i - 1)) {
      throw ArgumentError("eigenvalues must be stored in ascending order");
    }
  }
  if (rep_ == Representation::kDenseSpectral) {
    if (factor_.rows() != dim() || factor_.cols() != dim()) {
      throw ArgumentError("spectral factor must be square with the eigenvalue count");
    }
    const double err = orthogonality_error();
    if (!(err <= kOrthogonalityTol)) {
      throw ArgumentError("spectral factor is not orthogonal (max |U^T U - I| = " +
                          std::to_string(err) + ")");
    }
  }
}

SpectralMatrix SpectralMatrix::diagonal(Vector eigenvalues) {
  return SpectralMatrix(Representation::kDiagonal, std::move(eigenvalues), Matrix());
}

SpectralMatrix SpectralMatrix::dense(Vector eigenvalues, Matrix factor) {
  return SpectralMatrix(Representation::kDenseSpectral, std::move(eigenvalues), std::move(factor));
}

Vector SpectralMatrix::to_eigenbasis(const Vector& x) const {
  if (is_diagonal()) return x;
  return factor_.transpose() * x;
}

Vector SpectralMatrix::from_eigenbasis(const Vector& y) const {
  if (is_diagonal()) return y;
  return factor_ * y;
}

Vector SpectralMatrix::matvec(const Vector& x) const {
  if (x.size() != dim()) throw ArgumentError("matvec dimension mismatch");
  if (is_diagonal()) return eigenvalues_.cwiseProduct(x);
  Vector y = factor_.transpose() * x;
  y.array() *= eigenvalues_.array();
  return factor_ * y;
}

Vector SpectralMatrix::shifted_solve(double shift, const Vector& v) const {
  if (v.size() != dim()) throw ArgumentError("shifted solve dimension mismatch");
  Vector y = to_eigenbasis(v);
  for (Index i = 0; i < y.size(); ++i) {
    const double d = eigenvalues_(i) + shift;
    if (d == 0.0) {
      if (y(i) != 0.0) throw SingularSystemError("A + cI is singular on a component of the rhs");
      continue;
    }
    y(i) /= d;
  }
  return from_eigenbasis(y);
}

Matrix SpectralMatrix::to_dense() const {
  if (is_diagonal()) return eigenvalues_.asDiagonal();
  return factor_ * eigenvalues_.asDiagonal() * factor_.transpose();
}

double SpectralMatrix::orthogonality_error() const {
  if (is_diagonal()) return 0.0;
  const Matrix gram = factor_.transpose() * factor_ - Matrix::Identity(dim(), dim());
  return gram.cwiseAbs().maxCoeff();
}

RegQuadProblem::RegQuadProblem(SpectralMatrix matrix, Vector b, double p, double s,
                               std::optional<Vector> known_solution)
    : matrix_(std::move(matrix)),
      b_(std::move(b)),
      p_(p),
      s_(s),
      known_solution_(std::move(known_solution)) {
  if (!(p_ >= 2.0) || !std::isfinite(p_)) throw ArgumentError("p must be a finite real >= 2");
  if (!(s_ >= 0.0) || !std::isfinite(s_)) throw ArgumentError("s must be a finite real >= 0");
  if (b_.size() != matrix_.dim()) throw ArgumentError("b and matrix dimensions differ");
  if (b_.size() == 0) throw ArgumentError("dimension must be positive");
  if (!b_.allFinite()) throw ArgumentError("b has non-finite entries");
  if (matrix_.min_eigenvalue() < 0.0) throw ArgumentError("matrix is not positive semidefinite");
  if (known_solution_) {
    require_dim(*this, *known_solution_);
    const double res = stationarity_residual(*this, *known_solution_);
    const double tol = 1e-9 * std::max(1.0, b_.norm());
    if (!(res <= tol)) {
      throw ArgumentError("known_solution is not stationary (residual " + std::to_string(res) +
                          ")");
    }
  }
}

double norm_power(double norm, double p) {
  if (p == 2.0) return 1.0;
  if (norm == 0.0) return 0.0;
  return std::pow(norm, p - 2.0);
}

FirstOrderInfo eval(const RegQuadProblem& problem, const Vector& x, OracleCounter* counter) {
  require_dim(problem, x);
  const Vector ax = problem.matrix().matvec(x);
  const double nx = x.norm();
  FirstOrderInfo out;
  out.value = 0.5 * x.dot(ax) - problem.b().dot(x) +
              (problem.s() / problem.p()) * std::pow(nx, problem.p());
  out.gradient = ax + (problem.s() * norm_power(nx, problem.p())) * x - problem.b();
  if (counter) {
    ++counter->grad_evals;
    ++counter->func_evals;
    ++counter->matvecs;
  }
  return out;
}

double eval_value(const RegQuadProblem& problem, const Vector& x, OracleCounter* counter) {
  require_dim(problem, x);
  const Vector ax = problem.matrix().matvec(x);
  if (counter) {
    ++counter->func_evals;
    ++counter->matvecs;
  }
  return 0.5 * x.dot(ax) - problem.b().dot(x) +
         (problem.s() / problem.p()) * std::pow(x.norm(), problem.p());
}

double stationarity_residual(const RegQuadProblem& problem, const Vector& x) {
  require_dim(problem, x);
  const Vector g = problem.matrix().matvec(x) +
                   (problem.s() * norm_power(x.norm(), problem.p())) * x - problem.b();
  return g.norm();
}

Vector closed_form_p2(const RegQuadProblem& problem) {
  if (problem.p() != 2.0) throw UnsupportedError("closed_form_p2 requires p == 2");
  return problem.matrix().shifted_solve(problem.s(), problem.b());
}

double sigma_p(double p, double s) { return s * std::pow(2.0, 2.0 - p); }

double sigma_p(const RegQuadProblem& problem) { return sigma_p(problem.p(), problem.s()); }

double m_star(double lipschitz, double s, double p, double r) {
  if (r < 0.0) throw ArgumentError("m_star requires r >= 0");
  return lipschitz + s * (p - 1.0) * std::pow(2.0, p - 2.0) * norm_power(r, p);
}

double m_star(const RegQuadProblem& problem, double r) {
  return m_star(problem.lipschitz(), problem.s(), problem.p(), r);
}

double modified_condition_number(double mu, double lipschitz, double s, double p, double r,
                                 ConditionForm form) {
  const double weight = form == ConditionForm::kOneStep ? s * (p - 1.0) : s;
  const double shift = weight * norm_power(r, p);
  const double denom = mu + shift;
  if (!(denom > 0.0)) throw DegenerateError("modified condition number has a zero denominator");
  return (lipschitz + shift) / denom;
}

}  // namespace regquad
