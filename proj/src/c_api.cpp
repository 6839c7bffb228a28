#include "regquad/regquad.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "regquad/bounds.hpp"
#include "regquad/errors.hpp"
#include "regquad/harness.hpp"
#include "regquad/instances.hpp"
#include "regquad/serialization.hpp"
#include "regquad/solvers.hpp"

struct rq_problem {
  regquad::RegQuadProblem problem;
};

struct rq_trace {
  regquad::SolverTrace trace;
};

namespace {

thread_local std::string g_last_error;

rq_status fail(rq_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
rq_status guarded(Fn fn) {
  g_last_error.clear();
  try {
    fn();
    return RQ_OK;
  } catch (const regquad::Error& e) {
    return fail(static_cast<rq_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(RQ_E_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(RQ_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RQ_E_INTERNAL, e.what());
  } catch (...) {
    return fail(RQ_E_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) throw regquad::ArgumentError(std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw regquad::ParseError(e.what());
  }
}

regquad::BoundParams bound_params(const char* params_json) {
  regquad::BoundParams bp;
  if (params_json == nullptr) return bp;
  const nlohmann::json j = parse_json(params_json);
  if (!j.is_object()) throw regquad::ParseError("bound parameters must be a JSON object");
  bp.p = j.value("p", bp.p);
  bp.s = j.value("s", bp.s);
  bp.mu = j.value("mu", bp.mu);
  bp.lipschitz = j.value("L", bp.lipschitz);
  bp.r = j.value("r", bp.r);
  bp.m_star = j.value("m_star", bp.m_star);
  bp.m0 = j.value("m0", bp.m0);
  bp.f0 = j.value("f0", bp.f0);
  bp.simplified = j.value("simplified", bp.simplified);
  return bp;
}

}  // namespace

extern "C" {

const char* rq_last_error(void) { return g_last_error.c_str(); }

const char* rq_status_name(rq_status status) {
  switch (status) {
    case RQ_OK: return "ok";
    case RQ_E_INTERNAL: return "internal";
    default: break;
  }
  if (status >= RQ_E_ARGUMENT && status <= RQ_E_PARSE) {
    return regquad::to_string(static_cast<regquad::ErrorCode>(status));
  }
  return "unknown";
}

const char* rq_version(void) { return "1.0.0"; }

void rq_string_free(char* s) { delete[] s; }

rq_status rq_problem_from_json(const char* json, rq_problem** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new rq_problem{regquad::problem_from_json(parse_json(json))};
  });
}

rq_status rq_problem_load(const char* path, rq_problem** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new rq_problem{regquad::load_problem(path)};
  });
}

rq_status rq_problem_save(const rq_problem* problem, const char* path) {
  return guarded([&] {
    require(problem, "problem");
    require(path, "path");
    regquad::save_problem(problem->problem, path);
  });
}

rq_status rq_problem_to_json(const rq_problem* problem, char** out) {
  return guarded([&] {
    require(problem, "problem");
    require(out, "out");
    *out = dup_string(regquad::problem_to_json(problem->problem).dump());
  });
}

void rq_problem_free(rq_problem* problem) { delete problem; }

int64_t rq_problem_dim(const rq_problem* problem) {
  return problem == nullptr ? 0 : static_cast<int64_t>(problem->problem.dim());
}

rq_status rq_problem_eval(const rq_problem* problem, const double* x, double* f, double* grad) {
  return guarded([&] {
    require(problem, "problem");
    require(x, "x");
    require(f, "f");
    const auto d = problem->problem.dim();
    const regquad::Vector xv = Eigen::Map<const regquad::Vector>(x, d);
    const regquad::FirstOrderInfo info = regquad::eval(problem->problem, xv);
    *f = info.value;
    if (grad != nullptr) Eigen::Map<regquad::Vector>(grad, d) = info.gradient;
  });
}

rq_status rq_problem_known_value(const rq_problem* problem, int* known, double* f_star) {
  return guarded([&] {
    require(problem, "problem");
    require(known, "known");
    const auto& xs = problem->problem.known_solution();
    *known = xs ? 1 : 0;
    if (xs && f_star != nullptr) *f_star = regquad::eval(problem->problem, *xs).value;
  });
}

rq_status rq_instance_generate(const char* spec_json, rq_problem** out) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out, "out");
    const regquad::InstanceSpec spec = regquad::spec_from_json(parse_json(spec_json));
    *out = new rq_problem{regquad::generate(spec)};
  });
}

rq_status rq_solve(const rq_problem* problem, const char* method, const char* config_json,
                   rq_trace** out) {
  return guarded([&] {
    require(problem, "problem");
    require(method, "method");
    require(out, "out");
    regquad::SolverConfig config;
    if (config_json != nullptr) {
      config = regquad::solver_config_from_json(parse_json(config_json));
    }
    const regquad::Method m = regquad::parse_method(method);
    *out = new rq_trace{regquad::run_method(m, problem->problem, config)};
  });
}

void rq_trace_free(rq_trace* trace) { delete trace; }

int64_t rq_trace_iterations(const rq_trace* trace) {
  return trace == nullptr ? 0 : trace->trace.iterations;
}

int64_t rq_trace_records(const rq_trace* trace) {
  return trace == nullptr ? 0 : static_cast<int64_t>(trace->trace.records.size());
}

const char* rq_trace_status(const rq_trace* trace) {
  return trace == nullptr ? "" : regquad::to_string(trace->trace.status);
}

const char* rq_trace_method(const rq_trace* trace) {
  return trace == nullptr ? "" : regquad::to_string(trace->trace.method);
}

double rq_trace_final_value(const rq_trace* trace) {
  return trace == nullptr ? 0.0 : trace->trace.final_f;
}

double rq_trace_final_grad_norm(const rq_trace* trace) {
  return trace == nullptr ? 0.0 : trace->trace.final_grad_norm;
}

rq_status rq_trace_final_x(const rq_trace* trace, double* x, int64_t len) {
  return guarded([&] {
    require(trace, "trace");
    require(x, "x");
    const auto& fx = trace->trace.final_x;
    if (len != fx.size()) throw regquad::ArgumentError("length does not match the dimension");
    Eigen::Map<regquad::Vector>(x, len) = fx;
  });
}

rq_status rq_trace_counters(const rq_trace* trace, rq_counters* out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    const auto& t = trace->trace.totals;
    *out = rq_counters{t.grad_evals, t.func_evals, t.matvecs, t.exact_solves};
  });
}

rq_status rq_trace_record(const rq_trace* trace, int64_t i, int64_t* iter, double* f,
                          double* grad_norm, double* step_or_m) {
  return guarded([&] {
    require(trace, "trace");
    const auto& recs = trace->trace.records;
    if (i < 0 || i >= static_cast<int64_t>(recs.size())) {
      throw regquad::ArgumentError("record index out of range");
    }
    const auto& rec = recs[static_cast<std::size_t>(i)];
    if (iter) *iter = rec.iter;
    if (f) *f = rec.f;
    if (grad_norm) *grad_norm = rec.grad_norm;
    if (step_or_m) *step_or_m = rec.step_or_m;
  });
}

rq_status rq_trace_csv(const rq_trace* trace, const double* f_star, char** out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    std::ostringstream os;
    std::optional<double> fs;
    if (f_star != nullptr) fs = *f_star;
    regquad::write_trace_csv(trace->trace, os, fs);
    *out = dup_string(os.str());
  });
}

rq_status rq_exact_solve(const rq_problem* problem, double tol, double* x, int64_t len) {
  return guarded([&] {
    require(problem, "problem");
    require(x, "x");
    if (len != problem->problem.dim()) {
      throw regquad::ArgumentError("length does not match the dimension");
    }
    Eigen::Map<regquad::Vector>(x, len) = regquad::exact_solve(problem->problem, tol);
  });
}

rq_status rq_bound_eval(const char* kind, const char* params_json, double k, double* value,
                        int* degenerate) {
  return guarded([&] {
    require(kind, "kind");
    require(value, "value");
    const regquad::BoundValue v =
        regquad::evaluate_bound(regquad::parse_bound_kind(kind), bound_params(params_json), k);
    *value = v.value;
    if (degenerate) *degenerate = v.degenerate ? 1 : 0;
  });
}

rq_status rq_envelope_csv(const char* kind, const char* params_json, const int64_t* iters,
                          size_t count, char** out) {
  return guarded([&] {
    require(kind, "kind");
    require(out, "out");
    if (count > 0) require(iters, "iters");
    const std::vector<std::int64_t> ks(iters, iters + count);
    const regquad::BoundEnvelope env =
        regquad::make_envelope(regquad::parse_bound_kind(kind), bound_params(params_json), ks);
    std::ostringstream os;
    regquad::write_envelope_csv(env, os);
    *out = dup_string(os.str());
  });
}

rq_status rq_experiment_run(const char* config_json, char** report_json) {
  return guarded([&] {
    require(config_json, "config_json");
    const regquad::ExperimentConfig cfg = regquad::experiment_from_json(parse_json(config_json));
    const nlohmann::json report = regquad::run_experiment(cfg);
    if (report_json != nullptr) *report_json = dup_string(report.dump(2));
  });
}

}  // extern "C"
