#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "regquad/instances.hpp"
#include "regquad/solvers.hpp"

namespace regquad {

/// Adaptive adversary over the multi-step family.
///
/// The objective served after k rounds is f_k with matrix U_k diag(lambda) U_k^T
/// and a fixed b. Queries inside the Krylov subspace E_{2k}(f_k) are answered
/// without consuming a round. Any other query consumes one round: a Householder
/// reflection that fixes E_{2k+1}(f_k) (and therefore b and every earlier answer)
/// turns the next Krylov direction toward the query, after which the query lies
/// in E_{2k+2}(f_{k+1}).
class ResistingOracle final : public FirstOrderOracle {
 public:
  struct LogEntry {
    Vector x;
    double value = 0.0;
    Vector gradient;
    std::int64_t round = 0;
  };

  explicit ResistingOracle(MultistepData data);

  Index dim() const override { return data_.eigenvalues.size(); }
  FirstOrderInfo query(const Vector& x) override;

  // Places a method's final output inside the protected subspace, consuming a
  // round when needed. Nothing is served.
  void commit(const Vector& x);

  // Problem with the current factor U_k; its known solution is r U_k sqrt(pi).
  RegQuadProblem finalize() const;

  // Largest relative deviation when every logged query is re-evaluated on the
  // finalized problem.
  double replay_deviation() const;

  std::int64_t rounds_used() const { return rounds_; }
  std::int64_t round_budget() const { return krylov_dim_ / 2; }
  Index krylov_dim() const { return krylov_dim_; }
  std::int64_t reflections() const { return reflections_; }
  const Matrix& factor() const { return u_; }
  const std::vector<LogEntry>& log() const { return log_; }
  const MultistepData& data() const { return data_; }

  double orthogonality_error() const;
  // ||U b - b|| / ||b||
  double b_invariance_error() const;

 private:
  // Rotates if needed so that x lies in E_{2k}(f_k).
  void protect(const Vector& x);
  FirstOrderInfo serve(const Vector& x) const;

  MultistepData data_;
  Matrix u_;
  // Orthonormal Krylov basis of the diagonal instance; the basis of E_m(f_k)
  // is U_k times its first m columns, kept in v_.
  Matrix w_;
  Matrix v_;
  Index krylov_dim_ = 0;
  std::int64_t rounds_ = 0;
  std::int64_t reflections_ = 0;
  std::vector<LogEntry> log_;
};

// A method under test receives the oracle, the dimension and an iteration
// budget and returns its final point.
using MethodUnderTest = std::function<Vector(FirstOrderOracle&, Index, std::int64_t)>;

MethodUnderTest wrap_solver(Method method, const ProblemClass& cls, double r_star,
                            SolverConfig config = {});

struct ResistReport {
  Method method = Method::kGd;
  std::int64_t n = 0;
  std::int64_t rounds = 0;
  std::int64_t reflections = 0;
  double distance = 0.0;
  double distance_bound = 0.0;
  double q_star = 0.0;
  double replay_deviation = 0.0;
  double orthogonality_error = 0.0;
  double b_invariance_error = 0.0;
  double solution_norm = 0.0;
  double r = 0.0;
  bool replay_ok = false;
  bool bound_ok = false;
};

// Builds the multi-step instance for `spec`, lets `method` run for spec.n
// iterations against the adversary and checks the outcome on the finalized
// problem.
ResistReport run_resisted(const InstanceSpec& spec, Method method, const MethodUnderTest& run);
ResistReport run_resisted(const InstanceSpec& spec, Method method, SolverConfig config = {});

}  // namespace regquad
