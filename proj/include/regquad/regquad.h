/*
 * C interface to the regquad library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every call that can fail returns an rq_status; on failure the message is
 * available from rq_last_error() on the same thread until the next call.
 * Strings returned through char** arguments are owned by the caller and must
 * be released with rq_string_free.
 */
#ifndef REGQUAD_REGQUAD_H
#define REGQUAD_REGQUAD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RQ_API __declspec(dllexport)
#else
#define RQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rq_status {
  RQ_OK = 0,
  RQ_E_ARGUMENT = 1,
  RQ_E_UNSUPPORTED = 2,
  RQ_E_SINGULAR = 3,
  RQ_E_NUMERICAL = 4,
  RQ_E_DEGENERATE = 5,
  RQ_E_EXHAUSTED = 6,
  RQ_E_IO = 7,
  RQ_E_PARSE = 8,
  RQ_E_INTERNAL = 99
} rq_status;

typedef struct rq_problem rq_problem;
typedef struct rq_trace rq_trace;

typedef struct rq_counters {
  int64_t grad_evals;
  int64_t func_evals;
  int64_t matvecs;
  int64_t exact_solves;
} rq_counters;

RQ_API const char* rq_last_error(void);
RQ_API const char* rq_status_name(rq_status status);
RQ_API const char* rq_version(void);
RQ_API void rq_string_free(char* s);

/* Problems */
RQ_API rq_status rq_problem_from_json(const char* json, rq_problem** out);
RQ_API rq_status rq_problem_load(const char* path, rq_problem** out);
RQ_API rq_status rq_problem_save(const rq_problem* problem, const char* path);
RQ_API rq_status rq_problem_to_json(const rq_problem* problem, char** out);
RQ_API void rq_problem_free(rq_problem* problem);
RQ_API int64_t rq_problem_dim(const rq_problem* problem);
/* grad may be NULL. x and grad hold rq_problem_dim entries. */
RQ_API rq_status rq_problem_eval(const rq_problem* problem, const double* x, double* f,
                                 double* grad);
/* Sets *known to 1 and *f_star to f(x*) when the problem carries its solution. */
RQ_API rq_status rq_problem_known_value(const rq_problem* problem, int* known, double* f_star);

/* Instances from a JSON spec such as {"kind": "multi-step", "dim": 41, "N": 10}. */
RQ_API rq_status rq_instance_generate(const char* spec_json, rq_problem** out);

/* Solvers. method is one of gd, adaptive, composite, krylov, exact; config_json
 * may be NULL or an object with max_iters, grad_tol, m0, record_trace,
 * inner_tol and fixed_step. */
RQ_API rq_status rq_solve(const rq_problem* problem, const char* method, const char* config_json,
                          rq_trace** out);
RQ_API void rq_trace_free(rq_trace* trace);
RQ_API int64_t rq_trace_iterations(const rq_trace* trace);
RQ_API int64_t rq_trace_records(const rq_trace* trace);
RQ_API const char* rq_trace_status(const rq_trace* trace);
RQ_API const char* rq_trace_method(const rq_trace* trace);
RQ_API double rq_trace_final_value(const rq_trace* trace);
RQ_API double rq_trace_final_grad_norm(const rq_trace* trace);
RQ_API rq_status rq_trace_final_x(const rq_trace* trace, double* x, int64_t len);
RQ_API rq_status rq_trace_counters(const rq_trace* trace, rq_counters* out);
/* Value f at recorded iterate i (0 <= i < rq_trace_records). */
RQ_API rq_status rq_trace_record(const rq_trace* trace, int64_t i, int64_t* iter, double* f,
                                 double* grad_norm, double* step_or_m);
/* f_star may be NULL, in which case the f_gap column is omitted. */
RQ_API rq_status rq_trace_csv(const rq_trace* trace, const double* f_star, char** out);

RQ_API rq_status rq_exact_solve(const rq_problem* problem, double tol, double* x, int64_t len);

/* Bounds. params_json holds p, s, mu, L, r, m_star, m0, f0 and simplified. */
RQ_API rq_status rq_bound_eval(const char* kind, const char* params_json, double k, double* value,
                               int* degenerate);
RQ_API rq_status rq_envelope_csv(const char* kind, const char* params_json, const int64_t* iters,
                                 size_t count, char** out);

/* Runs an experiment config and returns its report as JSON. */
RQ_API rq_status rq_experiment_run(const char* config_json, char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* REGQUAD_REGQUAD_H */
