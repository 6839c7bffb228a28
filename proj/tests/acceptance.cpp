// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "regquad/bounds.hpp"
#include "regquad/core_model.hpp"
#include "regquad/harness.hpp"
#include "regquad/instances.hpp"
#include "regquad/resisting_oracle.hpp"
#include "regquad/solvers.hpp"

using namespace regquad;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (pass) detail << "first failure: " << why << "; ";
    pass = false;
  }
};

// Runs fn(i) for i in [0, count) on a few threads and keeps the results in order.
template <class T>
std::vector<T> parallel_map(int count, const std::function<T(int)>& fn) {
  const unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<T> out(count);
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (int i = static_cast<int>(w); i < count; i += static_cast<int>(workers)) out[i] = fn(i);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

InstanceSpec random_spec(std::uint64_t seed, Index dim, double p) {
  InstanceSpec spec;
  spec.kind = InstanceKind::kRandom;
  spec.dim = dim;
  spec.p = p;
  spec.s = 0.1;
  spec.lipschitz = 10.0;
  spec.r = 1.0;
  spec.seed = seed;
  return spec;
}

SolverConfig budget(std::int64_t iters) {
  SolverConfig cfg;
  cfg.max_iters = iters;
  cfg.grad_tol = 1e-300;
  return cfg;
}

double f_star(const RegQuadProblem& prob) { return eval_value(prob, *prob.known_solution()); }

Outcome criterion1() {
  Outcome o;
  const double ps[] = {2.5, 3.0, 4.0};
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int seed = 0; seed < 100; ++seed) {
    const RegQuadProblem prob = random_instance(random_spec(seed, 50, ps[seed % 3]));
    const Vector x = exact_solve(prob);
    const double ratio = stationarity_residual(prob, x) / std::max(1.0, prob.b().norm());
    worst = std::max(worst, ratio);
    if (!(ratio <= 1e-9)) o.fail("seed " + std::to_string(seed));
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) o.fail("took " + std::to_string(elapsed) + " s");
  o.detail << "100 instances, worst scaled residual " << worst << ", " << elapsed << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto counts = parallel_map<int>(20, [](int seed) {
    const RegQuadProblem prob = random_instance(random_spec(seed, 200, 3.0));
    const double fs = f_star(prob);
    const double ms = m_star(prob, prob.known_solution()->norm());
    const SolverTrace t = gd_run(prob, budget(500));
    int bad = 0;
    for (const auto& rec : t.records) {
      const double ub = upper_bound_gd(-fs, ms, ms, prob.s(), prob.p(), rec.iter).value;
      if (rec.f - fs > ub) ++bad;
    }
    return bad;
  });
  int total = 0;
  for (int i = 0; i < 20; ++i) {
    total += counts[i];
    if (counts[i] > 0) o.fail("seed " + std::to_string(i));
  }
  o.detail << "20 instances x 501 iterates, " << total << " bound violations";
  return o;
}

constexpr double kL = 100.0, kS = 1.0, kP = 3.0;

Outcome criterion3() {
  Outcome o;
  double worst_track = 0.0, worst_ratio = INFINITY;
  int checks = 0;
  for (int n = 1; n <= 100; ++n) {
    const double r = choose_r_one_step(kL, kS, kP, n);
    const RegQuadProblem prob = build_one_step(0.0, kL, kS, kP, r, 10);
    const double fs = f_star(prob);
    const double lb = lb_one_step_residual(kL, kS, kP, n).value;
    const double qbar = modified_condition_number(0.0, kL, kS, kP, r, ConditionForm::kOneStep);
    const oracles::OneStepScalar scalar{0.0, kL, kS, kP, r};
    const std::vector<double> rs_gd = scalar.gd(n, 0.0, m_star(kL, kS, kP, r));
    const std::vector<double> rs_comp = scalar.composite(n);

    const SolverTrace gd = gd_run(prob, budget(n));
    const SolverTrace comp = composite_gm_run(prob, budget(n));
    for (const auto* pair : {&gd, &comp}) {
      const SolverTrace& t = *pair;
      const std::vector<double>& rs = (&t == &gd) ? rs_gd : rs_comp;
      const char* name = (&t == &gd) ? "gd" : "composite";
      if (t.records.size() != static_cast<std::size_t>(n + 1)) {
        o.fail(std::string(name) + " stopped early at N=" + std::to_string(n));
        continue;
      }
      if (!(t.records.back().f - fs >= lb)) {
        o.fail(std::string(name) + " gap below bound at N=" + std::to_string(n));
      }
      for (std::size_t k = 0; k < t.records.size(); ++k) {
        const Vector& x = t.records[k].x;
        const double dev = (std::abs(x(0) - rs[k]) + x.tail(x.size() - 1).norm()) / r;
        worst_track = std::max(worst_track, dev);
        if (!(dev <= 1e-12)) o.fail(std::string(name) + " leaves the scalar recursion at N=" + std::to_string(n));
        if (k > 0) {
          const double prev = r - t.records[k - 1].x(0);
          const double next = r - x(0);
          const double ratio = next / prev;
          worst_ratio = std::min(worst_ratio, ratio - (1.0 - 1.0 / qbar));
          ++checks;
          if (!(ratio >= 1.0 - 1.0 / qbar - 1e-12)) o.fail(std::string(name) + " contracts too fast");
        }
      }
    }
  }
  o.detail << "N=1..100, max tracking error " << worst_track << " (relative to r), "
           << checks << " contraction steps, min margin " << worst_ratio;
  return o;
}

std::vector<std::pair<double, double>> one_step_series(const std::vector<int>& ns) {
  const auto gaps = parallel_map<double>(static_cast<int>(ns.size()), [&](int i) {
    const int n = ns[i];
    const double r = choose_r_one_step(kL, kS, kP, n);
    const RegQuadProblem prob = build_one_step(0.0, kL, kS, kP, r, 10);
    const SolverTrace t = gd_run(prob, budget(n));
    return t.final_f - f_star(prob);
  });
  std::vector<std::pair<double, double>> series;
  for (std::size_t i = 0; i < ns.size(); ++i) series.emplace_back(ns[i], gaps[i]);
  return series;
}

Outcome criterion4() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<int> ns;
  for (int n = 5; n <= 100; n += 5) ns.push_back(n);
  const SlopeFit fit = fit_loglog_slope(one_step_series(ns));
  const double elapsed = seconds_since(t0);
  if (!(fit.slope >= -3.5 && fit.slope <= -2.5)) o.fail("slope out of range");
  if (elapsed >= 60.0) o.fail("too slow");
  o.detail << "gd slope " << fit.slope << " over " << fit.used << " points, " << elapsed << " s";
  return o;
}

struct SweepPoint {
  double gap = 0.0;
  bool dist_ok = false;
  bool res_ok = false;
  double dist_margin = 0.0;
};

std::vector<SweepPoint> krylov_sweep(PiMode mode, const std::vector<int>& ns) {
  return parallel_map<SweepPoint>(static_cast<int>(ns.size()), [&](int i) {
    InstanceSpec spec;
    spec.kind = InstanceKind::kMultiStep;
    spec.dim = 401;
    spec.lipschitz = kL;
    spec.s = kS;
    spec.p = kP;
    spec.n = ns[i];
    spec.pi_mode = mode;
    const RegQuadProblem prob = build_multistep(spec);
    const Vector& xs = *prob.known_solution();
    const double r = xs.norm();
    const double n = ns[i];
    const SolverTrace t = krylov_solve(prob, budget(ns[i]));
    SweepPoint pt;
    pt.gap = t.final_f - f_star(prob);
    const double q = modified_condition_number(prob.mu(), prob.lipschitz(), kS, kP, r);
    const double dist_lb = r * std::exp(-8.0 * n / (std::sqrt(q) - 1.0));
    const double dist = (t.final_x - xs).norm();
    pt.dist_ok = dist >= dist_lb;
    pt.dist_margin = dist / dist_lb;
    pt.res_ok = pt.gap >= lb_multistep_residual(prob.mu(), prob.lipschitz(), kS, kP, r, n).value;
    return pt;
  });
}

Outcome criterion5(const std::vector<int>& ns, const std::vector<SweepPoint>& pts) {
  Outcome o;
  double margin = INFINITY;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    margin = std::min(margin, pts[i].dist_margin);
    if (!pts[i].dist_ok) o.fail("distance below bound at N=" + std::to_string(ns[i]));
    if (!pts[i].res_ok) o.fail("gap below bound at N=" + std::to_string(ns[i]));
  }
  o.detail << ns.size() << " instances N=5..100, d=401, smallest distance/bound ratio " << margin;
  return o;
}

Outcome criterion6(const std::vector<int>& ns, const std::vector<SweepPoint>& heuristic,
                   const std::vector<SweepPoint>& uniform, double elapsed) {
  Outcome o;
  std::vector<std::pair<double, double>> sh, su;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sh.emplace_back(ns[i], heuristic[i].gap);
    su.emplace_back(ns[i], uniform[i].gap);
  }
  const double a = fit_loglog_slope(sh).slope;
  const double b = fit_loglog_slope(su).slope;
  if (!(a >= -6.9 && a <= -5.1)) o.fail("heuristic slope out of range");
  if (!(b >= -7.5 && b <= -4.5)) o.fail("uniform slope out of range");
  if (elapsed >= 600.0) o.fail("too slow");
  o.detail << "heuristic slope " << a << ", uniform slope " << b << ", " << elapsed << " s";
  return o;
}

Outcome criterion7() {
  Outcome o;
  double worst = 0.0, worst_lsq = 0.0;
  for (int n = 1; n <= 6; ++n) {
    for (double q : {3.0 * n * n + 1.0, 10.0}) {
      const Vector grid = chebyshev_eigenvalues(1.0, q, n);
      const PiVector pi = pi_exact_small(grid);
      const double target = std::pow(theta_c(q, 2.0 * n).value, 2.0);
      const double g = pi.objective.value_or(NAN);
      const double lsq = oracles::weighted_lsq_residual(grid, pi.weights);
      worst = std::max(worst, std::abs(g - target) / target);
      worst_lsq = std::max(worst_lsq, std::abs(lsq - target) / target);
      if (!(std::abs(g - target) <= 1e-4 * target)) o.fail("objective off at N=" + std::to_string(n));
      if (!(std::abs(lsq - target) <= 1e-4 * target)) o.fail("least-squares check off at N=" + std::to_string(n));
    }
  }
  o.detail << "2N+1=3..13, max relative error " << worst << ", least-squares " << worst_lsq;
  return o;
}

Outcome criterion8() {
  Outcome o;
  int runs = 0;
  double worst_replay = 0.0;
  for (int n : {5, 10, 20}) {
    for (Method m : {Method::kGd, Method::kComposite, Method::kKrylov}) {
      InstanceSpec spec;
      spec.kind = InstanceKind::kMultiStep;
      spec.dim = 100;
      spec.lipschitz = kL;
      spec.n = n;
      const ResistReport rep = run_resisted(spec, m);
      ++runs;
      worst_replay = std::max(worst_replay, rep.replay_deviation);
      if (!(rep.replay_deviation <= 1e-8)) o.fail(std::string(to_string(m)) + " replay");
      if (!rep.bound_ok) o.fail(std::string(to_string(m)) + " distance bound");
    }
  }
  o.detail << runs << " resisted runs, max replay deviation " << worst_replay;
  return o;
}

Outcome criterion9() {
  Outcome o;
  struct Result {
    int eval_violations = 0;
    int compared = 0;
    double worst_ratio = 0.0;
  };
  const auto results = parallel_map<Result>(20, [](int seed) {
    const RegQuadProblem prob = random_instance(random_spec(seed, 200, 3.0));
    const double fs = f_star(prob);
    SolverConfig cfg = budget(500);
    const SolverTrace ad = adaptive_gd_run(prob, cfg);
    const SolverTrace gd = gd_run(prob, cfg);
    const double ms = m_star(prob, prob.known_solution()->norm());
    const double extra = std::max(1.0 + std::log2(ms / cfg.m0), 0.0);
    Result res;
    for (const auto& rec : ad.records) {
      if (rec.counters.func_evals > 2.0 * rec.iter + extra + 1.0) ++res.eval_violations;
    }
    const double floor = 1e-10 * std::max(1.0, std::abs(fs));
    const std::size_t common = std::min(ad.records.size(), gd.records.size());
    for (std::size_t k = 1; k < common; ++k) {
      const double g = gd.records[k].f - fs;
      if (g <= floor) break;
      const double a = ad.records[k].f - fs;
      res.worst_ratio = std::max(res.worst_ratio, a / g);
      ++res.compared;
    }
    return res;
  });
  int evals = 0, compared = 0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    evals += results[i].eval_violations;
    compared += results[i].compared;
    worst = std::max(worst, results[i].worst_ratio);
  }
  if (evals > 0) o.fail(std::to_string(evals) + " records over the evaluation budget");
  if (!(worst <= 10.0)) o.fail("adaptive gap exceeds 10x gd");
  o.detail << "20 instances, " << evals << " evaluation-count violations, " << compared
           << " matched iterates, max adaptive/gd gap ratio " << worst;
  return o;
}

Outcome criterion10() {
  Outcome o;
  int krylov_checked = 0;
  for (int seed = 0; seed < 5; ++seed) {
    InstanceSpec spec = random_spec(seed, 200, 2.0);
    spec.mu = 0.05;
    spec.s = 0.5;
    const RegQuadProblem prob = random_instance(spec);
    const double fs = f_star(prob);
    const double q = (prob.lipschitz() + prob.s()) / (prob.mu() + prob.s());
    const SolverTrace t = krylov_solve(prob, budget(40));
    for (const auto& rec : t.records) {
      if (rec.iter == 0) continue;
      const double gap = rec.f - fs;
      const double ub = cg_upper_bound(q, 2.0 * rec.iter - 1.0, -fs).value;
      ++krylov_checked;
      if (gap > ub + 1e-13 * std::max(1.0, std::abs(fs))) {
        o.fail("krylov above the CG bound at k=" + std::to_string(rec.iter));
      }
    }
  }

  double worst = 0.0;
  int steps = 0;
  for (double mu : {0.0, 0.5}) {
    const double l = 20.0, s = 1.0, r = 0.8;
    const RegQuadProblem prob = build_one_step(mu, l, s, 2.0, r, 6);
    const double qbar = (l + s) / (mu + s);
    SolverConfig cfg = budget(200);
    cfg.fixed_step = 1.0 / (l + s);
    for (const SolverTrace& t : {gd_run(prob, cfg), composite_gm_run(prob, cfg)}) {
      for (std::size_t k = 1; k < t.records.size(); ++k) {
        const double prev = r - t.records[k - 1].x(0);
        const double next = r - t.records[k].x(0);
        if (prev < 1e-4 * r) break;
        const double err = std::abs(next / prev - (1.0 - 1.0 / qbar));
        worst = std::max(worst, err);
        ++steps;
        if (!(err <= 1e-10)) o.fail("contraction differs at step " + std::to_string(k));
      }
    }
  }
  o.detail << krylov_checked << " Krylov iterates under the CG bound; " << steps
           << " one-step steps, max contraction error " << worst;
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.str().c_str());
    std::fflush(stdout);
  };

  report(1, criterion1);
  report(2, criterion2);
  report(3, criterion3);
  report(4, criterion4);

  std::vector<int> ns;
  for (int n = 5; n <= 100; n += 5) ns.push_back(n);
  std::vector<SweepPoint> heuristic, uniform;
  double sweep_time = 0.0;
  std::string sweep_error;
  try {
    const auto t0 = Clock::now();
    heuristic = krylov_sweep(PiMode::kHeuristic, ns);
    uniform = krylov_sweep(PiMode::kUniform, ns);
    sweep_time = seconds_since(t0);
  } catch (const std::exception& e) {
    sweep_error = e.what();
  }
  auto guarded = [&](auto fn) {
    return [&, fn] {
      if (!sweep_error.empty()) throw std::runtime_error(sweep_error);
      return fn();
    };
  };
  report(5, guarded([&] { return criterion5(ns, heuristic); }));
  report(6, guarded([&] { return criterion6(ns, heuristic, uniform, sweep_time); }));
  report(7, criterion7);
  report(8, criterion8);
  report(9, criterion9);
  report(10, criterion10);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
