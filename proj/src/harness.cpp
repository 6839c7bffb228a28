#include "regquad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <openssl/evp.h>

#include "regquad/bounds.hpp"
#include "regquad/errors.hpp"
#include "regquad/resisting_oracle.hpp"
#include "regquad/serialization.hpp"

namespace regquad {

namespace {

constexpr double kExactTol = 1e-12;
// Sweeps run every solver for exactly N iterations unless a tolerance is given.
constexpr double kSweepGradTol = 1e-300;

std::vector<std::int64_t> int_list(const nlohmann::json& j, const char* name) {
  std::vector<std::int64_t> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<std::int64_t>());
  } else if (j.is_object()) {
    const auto start = j.at("start").get<std::int64_t>();
    const auto stop = j.at("stop").get<std::int64_t>();
    const auto step = j.value("step", std::int64_t{1});
    if (step <= 0) throw ParseError(std::string(name) + ": step must be positive");
    for (std::int64_t v = start; v <= stop; v += step) out.push_back(v);
  } else if (j.is_number_integer()) {
    out.push_back(j.get<std::int64_t>());
  } else {
    throw ParseError(std::string(name) + " must be a list or a {start, stop, step} range");
  }
  return out;
}

std::vector<double> real_list(const nlohmann::json& j, const char* name) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else if (j.is_number()) {
    out.push_back(j.get<double>());
  } else {
    throw ParseError(std::string(name) + " must be a list of numbers");
  }
  return out;
}

struct Solved {
  Vector x_star;
  double f_star = 0.0;
};

Solved solve_reference(const RegQuadProblem& problem) {
  Solved out;
  out.x_star = exact_solve(problem, kExactTol);
  out.f_star = eval(problem, out.x_star).value;
  return out;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, std::int64_t threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::int64_t>(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

class OutputDir {
 public:
  explicit OutputDir(const std::string& path) : root_(path) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory '" + path + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& contents) {
    write_text_file((root_ / name).string(), contents);
    hashes_[name] = git_blob_hash(contents);
  }

  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, std::string> hashes_;
};

SolverConfig sweep_config(const SolverConfig& base, std::int64_t n) {
  SolverConfig cfg = base;
  cfg.max_iters = n;
  cfg.record_trace = false;
  if (!cfg.grad_tol) cfg.grad_tol = kSweepGradTol;
  return cfg;
}

double upper_m0(const SolverEntry& entry, double m_star_value) {
  return entry.method == Method::kAdaptive ? entry.config.m0 : m_star_value;
}

std::string trace_csv(const SolverTrace& trace, double f_star) {
  std::ostringstream os;
  write_trace_csv(trace, os, f_star);
  return os.str();
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

// ---- single -------------------------------------------------------------

nlohmann::json run_single(const ExperimentConfig& cfg, OutputDir& out) {
  const RegQuadProblem problem = generate(cfg.instance);
  const Solved ref = solve_reference(problem);
  const double r_star = ref.x_star.norm();
  const double f0 = -ref.f_star;
  const bool uniformly_convex = problem.p() > 2.0 && problem.s() > 0.0 && f0 > 0.0;
  const double ms = m_star(problem, r_star);

  nlohmann::json report;
  report["f_star"] = ref.f_star;
  report["r_star"] = r_star;
  nlohmann::json runs = nlohmann::json::array();
  std::ostringstream env_csv;
  bool env_header = true;

  for (const SolverEntry& entry : cfg.solvers) {
    SolverConfig sc = entry.config;
    sc.record_trace = true;
    const SolverTrace trace = run_method(entry.method, problem, sc);
    const std::string name = std::string("trace_") + to_string(entry.method) + ".csv";
    out.write(name, trace_csv(trace, ref.f_star));

    nlohmann::json run;
    run["method"] = to_string(entry.method);
    run["status"] = to_string(trace.status);
    run["iterations"] = trace.iterations;
    run["final_gap"] = trace.final_f - ref.f_star;
    run["matvecs"] = trace.totals.matvecs;
    run["grad_evals"] = trace.totals.grad_evals;
    run["func_evals"] = trace.totals.func_evals;
    run["exact_solves"] = trace.totals.exact_solves;

    std::int64_t upper_violations = 0;
    if (uniformly_convex && (entry.method == Method::kGd || entry.method == Method::kAdaptive)) {
      std::vector<std::int64_t> iters;
      for (const TraceRecord& rec : trace.records) iters.push_back(rec.iter);
      BoundParams bp;
      bp.p = problem.p();
      bp.s = problem.s();
      bp.m_star = ms;
      bp.m0 = upper_m0(entry, ms);
      bp.f0 = f0;
      const BoundEnvelope env = make_envelope(BoundKind::kUpperGd, bp, iters);
      write_envelope_csv(env, env_csv, env_header);
      env_header = false;
      for (std::size_t i = 0; i < trace.records.size(); ++i) {
        if (trace.records[i].f - ref.f_star > env.values[i].second.value) ++upper_violations;
      }
      run["upper_violations"] = upper_violations;
    }

    std::int64_t lower_violations = 0;
    const std::int64_t n = cfg.instance.n;
    if (cfg.instance.kind == InstanceKind::kMultiStep && trace.iterations >= n) {
      const double lb_res = lb_multistep_residual(problem.mu(), problem.lipschitz(), problem.s(),
                                                  problem.p(), r_star, static_cast<double>(n));
      const double lb_dist = lb_multistep_distance(problem.mu(), problem.lipschitz(), problem.s(),
                                                   problem.p(), r_star, static_cast<double>(n));
      const TraceRecord& rec = trace.records[static_cast<std::size_t>(n)];
      if (rec.f - ref.f_star < lb_res) ++lower_violations;
      if ((rec.x - ref.x_star).norm() < lb_dist) ++lower_violations;
      run["lower_violations"] = lower_violations;
    } else if (cfg.instance.kind == InstanceKind::kOneStep &&
               (entry.method == Method::kGd || entry.method == Method::kComposite)) {
      for (const TraceRecord& rec : trace.records) {
        const double lb = lb_one_step_distance(problem.lipschitz(), problem.s(), problem.p(),
                                               r_star, static_cast<double>(rec.iter),
                                               problem.mu());
        if ((rec.x - ref.x_star).norm() < lb * (1.0 - 1e-12)) ++lower_violations;
      }
      run["lower_violations"] = lower_violations;
    }
    runs.push_back(std::move(run));
  }
  if (!env_header) out.write("envelopes.csv", env_csv.str());
  report["runs"] = std::move(runs);
  return report;
}

// ---- sweep --------------------------------------------------------------

struct SweepRow {
  std::int64_t n = 0;
  Method method = Method::kGd;
  double r = 0.0;
  double f_gap = 0.0;
  double distance = 0.0;
  double grad_norm = 0.0;
  double lb_res = NAN;
  double lb_dist = NAN;
  double lb_grad = NAN;
  double ub = NAN;
  std::int64_t iterations = 0;
  std::int64_t matvecs = 0;
  std::string status;
};

std::vector<SweepRow> sweep_cell(const ExperimentConfig& cfg, std::int64_t n) {
  InstanceSpec spec = cfg.instance;
  spec.n = n;
  const RegQuadProblem problem = generate(spec);
  const Solved ref = solve_reference(problem);
  const double r = ref.x_star.norm();
  const double p = problem.p();
  const double s = problem.s();
  const double l = problem.lipschitz();
  const double mu = problem.mu();
  const double nd = static_cast<double>(n);

  std::vector<SweepRow> rows;
  for (const SolverEntry& entry : cfg.solvers) {
    const SolverTrace trace = run_method(entry.method, problem, sweep_config(entry.config, n));
    SweepRow row;
    row.n = n;
    row.method = entry.method;
    row.r = r;
    row.f_gap = trace.final_f - ref.f_star;
    row.distance = (trace.final_x - ref.x_star).norm();
    row.grad_norm = trace.final_grad_norm;
    row.iterations = trace.iterations;
    row.matvecs = trace.totals.matvecs;
    row.status = to_string(trace.status);
    switch (spec.kind) {
      case InstanceKind::kMultiStep:
        row.lb_res = lb_multistep_residual(mu, l, s, p, r, nd);
        row.lb_dist = lb_multistep_distance(mu, l, s, p, r, nd);
        row.lb_grad = lb_multistep_grad(mu, l, s, p, r, nd);
        break;
      case InstanceKind::kOneStep:
        row.lb_dist = lb_one_step_distance(l, s, p, r, nd, mu);
        if (!spec.r && p > 2.0) {
          row.lb_res = lb_one_step_residual(l, s, p, nd);
          row.lb_grad = lb_one_step_grad(l, s, p, nd);
        }
        break;
      case InstanceKind::kRandom:
      case InstanceKind::kBeta:
        if ((entry.method == Method::kGd || entry.method == Method::kAdaptive) && p > 2.0 &&
            s > 0.0) {
          const double ms = m_star(problem, r);
          row.ub = upper_bound_gd(-ref.f_star, ms, upper_m0(entry, ms), s, p, nd);
        }
        break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json run_sweep(const ExperimentConfig& cfg, OutputDir& out) {
  std::vector<std::vector<SweepRow>> cells(cfg.sweep_n.size());
  parallel_for(cfg.sweep_n.size(), cfg.threads,
               [&](std::size_t i) { cells[i] = sweep_cell(cfg, cfg.sweep_n[i]); });

  std::ostringstream csv_out;
  csv_out << "N,method,r,f_gap,distance,grad_norm,lb_res,lb_dist,lb_grad,ub,iterations,matvecs,"
             "status\n";
  CsvWriter csv(csv_out);
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::map<std::string, std::int64_t> violations;
  for (const auto& cell : cells) {
    for (const SweepRow& row : cell) {
      const std::string m = to_string(row.method);
      csv.field(static_cast<long long>(row.n)).field(m).field(row.r).field(row.f_gap)
          .field(row.distance).field(row.grad_norm);
      for (double v : {row.lb_res, row.lb_dist, row.lb_grad, row.ub}) {
        if (std::isnan(v)) csv.empty(); else csv.field(v);
      }
      csv.field(static_cast<long long>(row.iterations)).field(static_cast<long long>(row.matvecs))
          .field(row.status);
      csv.end_row();
      series[m].emplace_back(static_cast<double>(row.n), row.f_gap);
      std::int64_t& v = violations[m];
      if (!std::isnan(row.lb_res) && row.f_gap < row.lb_res) ++v;
      if (!std::isnan(row.lb_dist) && row.distance < row.lb_dist) ++v;
      if (!std::isnan(row.lb_grad) && row.grad_norm < row.lb_grad) ++v;
      if (!std::isnan(row.ub) && row.f_gap > row.ub) ++v;
    }
  }
  out.write("results.csv", csv_out.str());

  // Lower-bound envelopes over the sweep, using each cell's radius.
  std::ostringstream env_out;
  env_out << "iter,value,kind\n";
  CsvWriter env(env_out);
  for (const auto& cell : cells) {
    if (cell.empty()) continue;
    const SweepRow& row = cell.front();
    const std::pair<double, const char*> entries[] = {
        {row.lb_res, "res"}, {row.lb_dist, "dist"}, {row.lb_grad, "grad"}};
    for (const auto& [value, tag] : entries) {
      if (std::isnan(value)) continue;
      const std::string kind = std::string(cfg.instance.kind == InstanceKind::kOneStep
                                               ? "lb-one-step-"
                                               : "lb-multi-") + tag;
      env.field(static_cast<long long>(row.n)).field(value).field(kind);
      env.end_row();
    }
  }
  out.write("envelopes.csv", env_out.str());

  nlohmann::json report;
  nlohmann::json slopes = nlohmann::json::object();
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& [m, pts] : series) {
    try {
      const SlopeFit fit = fit_loglog_slope(pts, cfg.slope_range);
      slopes[m] = fit.slope;
      if (!fit.warning.empty()) warnings.push_back(m + ": " + fit.warning);
    } catch (const Error& e) {
      slopes[m] = nullptr;
      warnings.push_back(m + ": " + e.what());
    }
  }
  report["slopes"] = std::move(slopes);
  report["violations"] = violations;
  report["warnings"] = std::move(warnings);
  report["points"] = cfg.sweep_n.size();
  return report;
}

// ---- beta ---------------------------------------------------------------

nlohmann::json run_beta(const ExperimentConfig& cfg, OutputDir& out) {
  struct Cell {
    std::uint64_t seed = 0;
    std::vector<std::pair<Method, SolverTrace>> traces;
    double f_star = 0.0;
  };
  std::vector<Cell> cells(static_cast<std::size_t>(cfg.repeats));
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    InstanceSpec spec = cfg.instance;
    spec.kind = InstanceKind::kBeta;
    spec.seed = cfg.seed + i;
    const RegQuadProblem problem = generate(spec);
    const Solved ref = solve_reference(problem);
    cells[i].seed = spec.seed;
    cells[i].f_star = ref.f_star;
    for (const SolverEntry& entry : cfg.solvers) {
      SolverConfig sc = entry.config;
      sc.record_trace = false;
      cells[i].traces.emplace_back(entry.method, run_method(entry.method, problem, sc));
    }
  });

  std::ostringstream summary;
  summary << "seed,method,iterations,final_gap,matvecs,status\n";
  CsvWriter csv(summary);
  for (const Cell& cell : cells) {
    for (const auto& [method, trace] : cell.traces) {
      out.write("trace_seed" + std::to_string(cell.seed) + "_" + to_string(method) + ".csv",
                trace_csv(trace, cell.f_star));
      csv.field(static_cast<long long>(cell.seed)).field(to_string(method))
          .field(static_cast<long long>(trace.iterations)).field(trace.final_f - cell.f_star)
          .field(static_cast<long long>(trace.totals.matvecs)).field(to_string(trace.status));
      csv.end_row();
    }
  }
  out.write("results.csv", summary.str());
  nlohmann::json report;
  report["instances"] = cells.size();
  return report;
}

// ---- grid ---------------------------------------------------------------

nlohmann::json run_grid(const ExperimentConfig& cfg, OutputDir& out) {
  std::vector<std::pair<double, double>> points;
  for (double l : cfg.sweep_l) {
    for (double s : cfg.sweep_s) points.emplace_back(l, s);
  }
  std::vector<std::vector<std::pair<Method, double>>> gaps(points.size());
  parallel_for(points.size(), cfg.threads, [&](std::size_t i) {
    InstanceSpec spec = cfg.instance;
    spec.lipschitz = points[i].first;
    spec.s = points[i].second;
    const RegQuadProblem problem = generate(spec);
    const Solved ref = solve_reference(problem);
    for (const SolverEntry& entry : cfg.solvers) {
      SolverConfig sc = entry.config;
      sc.record_trace = false;
      const SolverTrace trace = run_method(entry.method, problem, sc);
      gaps[i].emplace_back(entry.method, trace.final_f - ref.f_star);
    }
  });
  std::ostringstream os;
  os << "L,s,method,f_gap\n";
  CsvWriter csv(os);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (const auto& [method, gap] : gaps[i]) {
      csv.field(points[i].first).field(points[i].second).field(to_string(method)).field(gap);
      csv.end_row();
    }
  }
  out.write("results.csv", os.str());
  nlohmann::json report;
  report["cells"] = points.size();
  return report;
}

// ---- one-step -----------------------------------------------------------

nlohmann::json run_one_step(const ExperimentConfig& cfg, OutputDir& out) {
  InstanceSpec spec = cfg.instance;
  spec.kind = InstanceKind::kOneStep;
  const RegQuadProblem problem = generate(spec);
  const Solved ref = solve_reference(problem);
  const double r = ref.x_star.norm();
  const double step = 1.0 / (problem.lipschitz() + problem.s() * norm_power(r, problem.p()));

  nlohmann::json report;
  report["r"] = r;
  report["gd_step"] = step;
  std::map<Method, SolverTrace> traces;
  for (const SolverEntry& entry : cfg.solvers) {
    SolverConfig sc = entry.config;
    sc.record_trace = true;
    if (entry.method == Method::kGd && !sc.fixed_step) sc.fixed_step = step;
    SolverTrace trace = run_method(entry.method, problem, sc);
    out.write(std::string("trace_") + to_string(entry.method) + ".csv",
              trace_csv(trace, ref.f_star));
    traces.emplace(entry.method, std::move(trace));
  }

  std::vector<std::int64_t> iters;
  for (std::int64_t k = 1; k <= spec.n; ++k) iters.push_back(k);
  BoundParams bp;
  bp.p = problem.p();
  bp.s = problem.s();
  bp.mu = problem.mu();
  bp.lipschitz = problem.lipschitz();
  bp.r = r;
  std::ostringstream env;
  write_envelope_csv(make_envelope(BoundKind::kLbOneStepDist, bp, iters), env, true);
  if (problem.p() > 2.0 && !spec.r) {
    const double lb = lb_one_step_residual(problem.lipschitz(), problem.s(), problem.p(),
                                           static_cast<double>(spec.n));
    report["lb_residual_at_N"] = lb;
  }
  out.write("envelopes.csv", env.str());

  const auto gd = traces.find(Method::kGd);
  const auto cgm = traces.find(Method::kComposite);
  if (gd != traces.end() && cgm != traces.end()) {
    double worst = 0.0;
    const std::size_t m = std::min(gd->second.records.size(), cgm->second.records.size());
    for (std::size_t k = 0; k < m; ++k) {
      const double a = gd->second.records[k].f - ref.f_star;
      const double b = cgm->second.records[k].f - ref.f_star;
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
    report["max_relative_gap_difference"] = json_number(worst);
  }
  return report;
}

// ---- resist -------------------------------------------------------------

nlohmann::json run_resist(const ExperimentConfig& cfg, OutputDir& out) {
  std::vector<std::int64_t> ns = cfg.sweep_n.empty() ? std::vector<std::int64_t>{cfg.instance.n}
                                                     : cfg.sweep_n;
  std::vector<std::pair<std::int64_t, const SolverEntry*>> jobs;
  for (std::int64_t n : ns) {
    for (const SolverEntry& e : cfg.solvers) jobs.emplace_back(n, &e);
  }
  std::vector<ResistReport> reports(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    InstanceSpec spec = cfg.instance;
    spec.kind = InstanceKind::kMultiStep;
    spec.n = jobs[i].first;
    reports[i] = run_resisted(spec, jobs[i].second->method, jobs[i].second->config);
  });

  std::ostringstream os;
  os << "N,method,rounds,reflections,distance,distance_bound,replay_deviation,"
        "orthogonality_error,b_invariance_error,replay_ok,bound_ok\n";
  CsvWriter csv(os);
  std::int64_t failures = 0;
  for (const ResistReport& r : reports) {
    csv.field(static_cast<long long>(r.n)).field(to_string(r.method))
        .field(static_cast<long long>(r.rounds)).field(static_cast<long long>(r.reflections))
        .field(r.distance).field(r.distance_bound).field(r.replay_deviation)
        .field(r.orthogonality_error).field(r.b_invariance_error)
        .field(r.replay_ok ? "true" : "false").field(r.bound_ok ? "true" : "false");
    csv.end_row();
    if (!r.replay_ok || !r.bound_ok) ++failures;
  }
  out.write("results.csv", os.str());
  nlohmann::json report;
  report["runs"] = reports.size();
  report["failures"] = failures;
  return report;
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSingle: return "single";
    case ExperimentKind::kSweep: return "sweep";
    case ExperimentKind::kBeta: return "beta";
    case ExperimentKind::kGrid: return "grid";
    case ExperimentKind::kOneStep: return "one-step";
    case ExperimentKind::kResist: return "resist";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ExperimentKind::kResist); ++i) {
    const auto kind = static_cast<ExperimentKind>(i);
    if (name == to_string(kind)) return kind;
  }
  throw ArgumentError("unknown experiment '" + std::string(name) + "'");
}

SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base) {
  if (!j.is_object()) throw ParseError("solver config must be an object");
  try {
    if (j.contains("max_iters")) base.max_iters = j.at("max_iters").get<std::int64_t>();
    if (j.contains("grad_tol")) {
      if (j.at("grad_tol").is_null()) base.grad_tol.reset();
      else base.grad_tol = j.at("grad_tol").get<double>();
    }
    if (j.contains("m0")) base.m0 = j.at("m0").get<double>();
    if (j.contains("record_trace")) base.record_trace = j.at("record_trace").get<bool>();
    if (j.contains("inner_tol")) base.inner_tol = j.at("inner_tol").get<double>();
    if (j.contains("fixed_step")) {
      if (j.at("fixed_step").is_null()) base.fixed_step.reset();
      else base.fixed_step = j.at("fixed_step").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("solver config: ") + e.what());
  }
  base.validate();
  return base;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  cfg.source = j;
  try {
    if (!j.contains("experiment")) throw ParseError("missing field 'experiment'");
    cfg.kind = parse_experiment_kind(j.at("experiment").get<std::string>());
    if (j.contains("instance")) cfg.instance = spec_from_json(j.at("instance"));
    if (j.contains("seed")) {
      cfg.seed = j.at("seed").get<std::uint64_t>();
      cfg.instance.seed = cfg.seed;
    } else {
      cfg.seed = cfg.instance.seed;
    }
    if (j.contains("sweep")) {
      const auto& sw = j.at("sweep");
      if (sw.contains("N")) cfg.sweep_n = int_list(sw.at("N"), "sweep.N");
      if (sw.contains("L")) cfg.sweep_l = real_list(sw.at("L"), "sweep.L");
      if (sw.contains("s")) cfg.sweep_s = real_list(sw.at("s"), "sweep.s");
    }
    SolverConfig base;
    if (j.contains("solver_config")) base = solver_config_from_json(j.at("solver_config"));
    if (j.contains("solvers")) {
      for (const auto& s : j.at("solvers")) {
        SolverEntry entry;
        if (s.is_string()) {
          entry.method = parse_method(s.get<std::string>());
          entry.config = base;
        } else {
          entry.method = parse_method(s.at("method").get<std::string>());
          nlohmann::json overrides = s;
          overrides.erase("method");
          entry.config = solver_config_from_json(overrides, base);
        }
        cfg.solvers.push_back(std::move(entry));
      }
    } else {
      const std::vector<Method> defaults =
          cfg.kind == ExperimentKind::kSweep || cfg.kind == ExperimentKind::kBeta
              ? std::vector<Method>{Method::kKrylov}
          : cfg.kind == ExperimentKind::kOneStep
              ? std::vector<Method>{Method::kGd, Method::kComposite}
              : std::vector<Method>{Method::kGd, Method::kComposite, Method::kKrylov};
      for (Method m : defaults) cfg.solvers.push_back({m, base});
    }
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("repeats")) cfg.repeats = j.at("repeats").get<std::int64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<std::int64_t>();
    if (j.contains("slope_range")) {
      const auto& sr = j.at("slope_range");
      if (!sr.is_array() || sr.size() != 2) throw ParseError("slope_range must be [lo, hi]");
      cfg.slope_range = std::make_pair(sr[0].get<double>(), sr[1].get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ArgumentError("repeats must be >= 1");
  if (threads < 1) throw ArgumentError("threads must be >= 1");
  if (solvers.empty()) throw ArgumentError("no solvers listed");
  for (const SolverEntry& e : solvers) e.config.validate();
  auto check_n = [&](std::int64_t n) {
    InstanceSpec spec = instance;
    spec.n = n;
    spec.validate();
  };
  switch (kind) {
    case ExperimentKind::kSweep:
      if (sweep_n.empty()) throw ArgumentError("sweep needs a nonempty N range");
      for (std::int64_t n : sweep_n) check_n(n);
      break;
    case ExperimentKind::kGrid:
      if (sweep_l.empty() || sweep_s.empty()) throw ArgumentError("grid needs nonempty L and s lists");
      instance.validate();
      break;
    case ExperimentKind::kResist: {
      if (instance.kind != InstanceKind::kMultiStep) {
        throw ArgumentError("resist experiments use multi-step instances");
      }
      for (const SolverEntry& e : solvers) {
        if (e.method == Method::kExact) throw ArgumentError("the exact solver cannot be resisted");
      }
      if (sweep_n.empty()) check_n(instance.n);
      for (std::int64_t n : sweep_n) check_n(n);
      break;
    }
    case ExperimentKind::kBeta: {
      InstanceSpec spec = instance;
      spec.kind = InstanceKind::kBeta;
      spec.validate();
      break;
    }
    case ExperimentKind::kOneStep: {
      InstanceSpec spec = instance;
      spec.kind = InstanceKind::kOneStep;
      spec.validate();
      break;
    }
    case ExperimentKind::kSingle:
      instance.validate();
      break;
  }
}

nlohmann::json run_experiment(const ExperimentConfig& config) {
  config.validate();
  OutputDir out(config.out_dir);
  nlohmann::json report;
  switch (config.kind) {
    case ExperimentKind::kSingle: report = run_single(config, out); break;
    case ExperimentKind::kSweep: report = run_sweep(config, out); break;
    case ExperimentKind::kBeta: report = run_beta(config, out); break;
    case ExperimentKind::kGrid: report = run_grid(config, out); break;
    case ExperimentKind::kOneStep: report = run_one_step(config, out); break;
    case ExperimentKind::kResist: report = run_resist(config, out); break;
  }
  report["experiment"] = to_string(config.kind);
  out.write("report.json", report.dump(2) + "\n");

  nlohmann::json manifest;
  const std::string canonical = config.source.dump();
  manifest["config"] = config.source;
  manifest["config_hash"] = git_blob_hash(canonical);
  manifest["outputs"] = out.hashes();
  write_text_file((std::filesystem::path(config.out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
  return report;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& series,
                          std::optional<std::pair<double, double>> range) {
  SlopeFit fit;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [n, v] : series) {
    if (range && (n < range->first || n > range->second)) continue;
    if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(v)) {
      ++fit.excluded;
      continue;
    }
    pts.emplace_back(std::log(n), std::log(v));
  }
  if (fit.excluded > 0) {
    fit.warning = std::to_string(fit.excluded) + " nonpositive point(s) excluded from the fit";
  }
  if (pts.size() < 5) {
    throw ArgumentError("slope fit needs at least 5 positive points, got " +
                        std::to_string(pts.size()));
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("slope fit needs at least two distinct N values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.used = pts.size();
  return fit;
}

std::string git_blob_hash(std::string_view contents) {
  const std::string header = "blob " + std::to_string(contents.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw NumericalError("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, contents.data(), contents.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw NumericalError("SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

}  // namespace regquad
