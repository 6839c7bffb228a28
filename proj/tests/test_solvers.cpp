#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "regquad/bounds.hpp"
#include "regquad/errors.hpp"
#include "regquad/instances.hpp"
#include "regquad/solvers.hpp"

using namespace regquad;

namespace {

RegQuadProblem random_problem(std::uint64_t seed, Index dim = 50, double p = 3.0) {
  InstanceSpec spec;
  spec.kind = InstanceKind::kRandom;
  spec.dim = dim;
  spec.p = p;
  spec.s = 0.1;
  spec.lipschitz = 10.0;
  spec.r = 1.0;
  spec.seed = seed;
  return random_instance(spec);
}

RegQuadProblem multistep(std::int64_t n, Index dim, PiMode mode = PiMode::kHeuristic) {
  InstanceSpec spec;
  spec.kind = InstanceKind::kMultiStep;
  spec.dim = dim;
  spec.lipschitz = 100.0;
  spec.n = n;
  spec.pi_mode = mode;
  return build_multistep(spec);
}

SolverConfig budget(std::int64_t n) {
  SolverConfig cfg;
  cfg.max_iters = n;
  cfg.grad_tol = 1e-300;
  return cfg;
}

double f_star(const RegQuadProblem& prob) { return eval_value(prob, exact_solve(prob)); }

}  // namespace

TEST_CASE("eta_theoretical examples") {
  CHECK(eta_theoretical(3.0, 1.0, 1.5, 5.0) == doctest::Approx(0.2));
  CHECK(eta_theoretical(3.0, 1.0, 1.5e6, 1.0) == doctest::Approx(1e-3));
  double prev = INFINITY;
  for (double g = 1.0; g < 1e12; g *= 10.0) {
    const double eta = eta_theoretical(3.0, 1.0, g, 1e-3);
    CHECK(eta < prev);
    prev = eta;
  }
}

TEST_CASE("composite_secular_root examples") {
  CHECK(composite_secular_root(1.0, 1.0, 3.0, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(composite_secular_root(1.0, 1.0, 3.0, 0.0) == 0.0);
  CHECK(composite_secular_root(4.0, 0.0, 3.0, 2.0) == doctest::Approx(0.5));
  for (double rhs : {1e-8, 0.3, 7.0, 1e6}) {
    const double r = composite_secular_root(2.0, 0.5, 3.5, rhs);
    CHECK(r == doctest::Approx(oracles::secular_bisect(2.0, 0.5, 3.5, rhs)).epsilon(1e-11));
  }
}

TEST_CASE("gd_run stops immediately when b = 0") {
  const RegQuadProblem prob(SpectralMatrix::diagonal(Vector::LinSpaced(4, 1, 4)), Vector::Zero(4),
                            3.0, 1.0);
  const SolverTrace t = gd_run(prob, SolverConfig{}, 0.0);
  CHECK(t.records.size() == 1);
  CHECK(t.status == SolverStatus::kConverged);
}

TEST_CASE("gd_run rejects p = 2 without a fixed step") {
  const RegQuadProblem prob(SpectralMatrix::diagonal(Vector::LinSpaced(3, 1, 3)), Vector::Ones(3),
                            2.0, 1.0);
  CHECK_THROWS_AS(gd_run(prob, SolverConfig{}), UnsupportedError);
  CHECK_THROWS_AS(adaptive_gd_run(prob, SolverConfig{}), UnsupportedError);
}

TEST_CASE("gd_run stays below the upper bound on a random instance") {
  const auto prob = random_problem(0);
  const SolverTrace t = gd_run(prob, budget(200));
  const double fs = f_star(prob);
  const double r = prob.known_solution()->norm();
  const double ms = m_star(prob, r);
  CHECK(t.iterations == 200);
  CHECK(t.final_f - fs <= upper_bound_gd(-fs, ms, ms, prob.s(), prob.p(), 200.0).value);
}

TEST_CASE("descent methods decrease f; gd makes the guaranteed progress") {
  const auto prob = random_problem(3);
  const Vector xs = *prob.known_solution();
  for (Method m : {Method::kGd, Method::kAdaptive, Method::kComposite}) {
    const SolverTrace t = run_method(m, prob, budget(100));
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      CHECK(t.records[k].f <= t.records[k - 1].f + 1e-15 * std::abs(t.records[k - 1].f));
    }
    if (m != Method::kGd) continue;
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      const auto& a = t.records[k - 1];
      const auto& b = t.records[k];
      CHECK(a.f - b.f >= 0.5 * a.step_or_m * a.grad_norm * a.grad_norm * (1.0 - 1e-9) - 1e-15);
      CHECK((b.x - xs).norm() <= (a.x - xs).norm() * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("adaptive method") {
  SUBCASE("zero quadratic part converges at once") {
    const RegQuadProblem prob(SpectralMatrix::diagonal(Vector::Zero(3)), Vector::Zero(3), 3.0, 1.0);
    const SolverTrace t = adaptive_gd_run(prob, SolverConfig{});
    CHECK(t.status == SolverStatus::kConverged);
    CHECK(t.iterations == 0);
  }
  SUBCASE("evaluation count on a random instance") {
    const auto prob = random_problem(1);
    SolverConfig cfg = budget(150);
    cfg.m0 = 1.0;
    const SolverTrace t = adaptive_gd_run(prob, cfg);
    const double ms = m_star(prob, prob.known_solution()->norm());
    for (const TraceRecord& rec : t.records) {
      const double allowed = 2.0 * static_cast<double>(rec.iter) +
                             std::max(1.0 + std::log2(ms / cfg.m0), 0.0) + 1.0;
      CHECK(static_cast<double>(rec.counters.func_evals) <= allowed);
    }
  }
  SUBCASE("a huge initial estimate halves each iteration") {
    const auto prob = random_problem(2);
    const double ms = m_star(prob, prob.known_solution()->norm());
    SolverConfig cfg = budget(60);
    cfg.m0 = 1e6 * ms;
    const SolverTrace t = adaptive_gd_run(prob, cfg);
    std::size_t k = 1;
    for (; k < t.records.size() && t.records[k - 1].step_or_m > 2.0 * ms; ++k) {
      CHECK(t.records[k].step_or_m == doctest::Approx(0.5 * t.records[k - 1].step_or_m));
    }
    CHECK(k < t.records.size());
    for (; k < t.records.size(); ++k) CHECK(t.records[k].step_or_m <= 2.0 * ms);
  }
}

TEST_CASE("composite method follows the scalar recursion on the one-step instance") {
  const double r = choose_r_one_step(100.0, 1.0, 3.0, 20);
  const auto prob = build_one_step(0.0, 100.0, 1.0, 3.0, r, 6);
  const SolverTrace t = composite_gm_run(prob, budget(40));
  const oracles::OneStepScalar sim{0.0, 100.0, 1.0, 3.0, r};
  const auto rs = sim.composite(40);
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    CHECK(std::abs(t.records[k].x(0) - rs[k]) <= 1e-12 * r);
    CHECK(t.records[k].x.tail(5).norm() == 0.0);
  }
}

TEST_CASE("composite method with p = 2 converges to the closed form") {
  InstanceSpec spec;
  spec.kind = InstanceKind::kRandom;
  spec.dim = 20;
  spec.p = 2.0;
  spec.s = 1.0;
  spec.lipschitz = 5.0;
  spec.seed = 3;
  const auto prob = random_instance(spec);
  SolverConfig cfg;
  cfg.max_iters = 2000;
  const SolverTrace t = composite_gm_run(prob, cfg);
  CHECK(t.status == SolverStatus::kConverged);
  CHECK((t.final_x - closed_form_p2(prob)).norm() <= 1e-10);
}

TEST_CASE("exact_solve examples") {
  const RegQuadProblem one(SpectralMatrix::diagonal(Vector::Zero(1)), Vector::Constant(1, 2.0), 3.0,
                           1.0);
  CHECK(exact_solve(one)(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));

  const RegQuadProblem zero(SpectralMatrix::diagonal(Vector::LinSpaced(3, 0, 2)), Vector::Zero(3),
                            3.0, 1.0);
  CHECK(exact_solve(zero).norm() == 0.0);

  InstanceSpec spec;
  spec.dim = 31;
  spec.n = 10;
  spec.lipschitz = 100.0;
  spec.r = 0.37;
  const auto ms = build_multistep(spec);
  CHECK(exact_solve(ms).norm() == doctest::Approx(0.37).epsilon(1e-8));
  CHECK((exact_solve(ms) - *ms.known_solution()).norm() <= 1e-8);
}

TEST_CASE("exact_solve matches an independent Newton minimizer") {
  for (double p : {2.5, 3.0, 4.0}) {
    const auto prob = random_problem(7, 12, p);
    const oracles::DenseObjective obj{prob.matrix().to_dense(), prob.b(), p, prob.s()};
    const Vector ref = oracles::newton_minimize(obj.a, obj.b, p, prob.s());
    CHECK((exact_solve(prob) - ref).norm() <= 1e-8);
  }
}

TEST_CASE("krylov_solve stops on an invariant subspace") {
  Vector b = Vector::Zero(5);
  b(0) = 1.0;
  const RegQuadProblem prob(SpectralMatrix::diagonal(Vector::LinSpaced(5, 1, 5)), b, 3.0, 1.0);
  const SolverTrace t = krylov_solve(prob, SolverConfig{});
  CHECK(t.iterations == 1);
  CHECK(t.status == SolverStatus::kConverged);
  CHECK(stationarity_residual(prob, t.final_x) <= 1e-12);
}

TEST_CASE("krylov iterates minimize over the explicit Krylov subspace") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto prob = random_problem(seed, 16);
    const oracles::DenseObjective obj{prob.matrix().to_dense(), prob.b(), prob.p(), prob.s()};
    const SolverTrace t = krylov_solve(prob, budget(6));
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      const auto m = static_cast<Index>(2 * k - 1);
      const double ref = oracles::brute_force_krylov_min(obj, m);
      CHECK(t.records[k].f == doctest::Approx(ref).epsilon(1e-6));
      CHECK(t.records[k].f == doctest::Approx(obj.value(t.records[k].x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("krylov dominates subspace methods at matched matvec budget") {
  const auto prob = multistep(12, 40);
  const SolverTrace kr = krylov_solve(prob, budget(12));
  for (Method m : {Method::kGd, Method::kComposite}) {
    const SolverTrace other = run_method(m, prob, budget(23));
    for (std::size_t k = 1; k < kr.records.size(); ++k) {
      CHECK(kr.records[k].f <= other.records[2 * k - 1].f + 1e-12 * std::abs(other.records[2 * k - 1].f));
    }
  }
}

TEST_CASE("krylov stays above the multi-step lower bound") {
  for (std::int64_t n : {2, 5, 9}) {
    const auto prob = multistep(n, 2 * n + 5);
    const SolverTrace t = krylov_solve(prob, budget(n));
    const double r = prob.known_solution()->norm();
    const double lb = lb_multistep_residual(prob.mu(), prob.lipschitz(), prob.s(), prob.p(), r,
                                            static_cast<double>(n));
    CHECK(t.final_f - f_star(prob) >= lb);
  }
}

TEST_CASE("trace CSV layout") {
  const auto prob = random_problem(4, 10);
  const SolverTrace t = gd_run(prob, budget(3));
  std::ostringstream with, without;
  write_trace_csv(t, with, -1.0);
  write_trace_csv(t, without);
  CHECK(with.str().rfind("iter,f,f_gap,grad_norm,step_or_M,matvecs\n", 0) == 0);
  CHECK(without.str().rfind("iter,f,grad_norm,step_or_M,matvecs\n", 0) == 0);
  std::istringstream lines(with.str());
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 5);
}

TEST_CASE("method names and config validation") {
  for (Method m : {Method::kGd, Method::kAdaptive, Method::kComposite, Method::kKrylov,
                   Method::kExact}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("newton"), ArgumentError);
  SolverConfig cfg;
  cfg.m0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = SolverConfig{};
  cfg.max_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("matvec counts reconcile with gradient evaluations") {
  const auto prob = random_problem(6, 30);
  const SolverTrace gd = gd_run(prob, budget(25), 1.0);
  CHECK(gd.totals.matvecs == gd.totals.grad_evals);
  const SolverTrace cgm = composite_gm_run(prob, budget(25));
  CHECK(cgm.totals.matvecs == cgm.totals.grad_evals);
  const SolverTrace ad = adaptive_gd_run(prob, budget(25));
  CHECK(ad.totals.matvecs == ad.totals.grad_evals + ad.totals.func_evals - 1);
}
