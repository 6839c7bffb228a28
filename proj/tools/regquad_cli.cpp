// Command-line front end. Talks to the library only through the C interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "regquad/regquad.h"

namespace {

struct CliFailure {
  rq_status status;
  std::string message;
};

void check(rq_status status, const std::string& context) {
  if (status != RQ_OK) {
    throw CliFailure{status, context + ": " + rq_status_name(status) + ": " + rq_last_error()};
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{RQ_E_IO, "cannot open '" + path + "'"};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw CliFailure{RQ_E_IO, "cannot write '" + path + "'"};
}

nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw CliFailure{RQ_E_PARSE, origin + ": " + e.what()};
  }
}

// Inline JSON when the argument looks like an object, a file path otherwise.
nlohmann::json json_argument(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return parse_json_text(arg, "--params");
  return parse_json_text(read_file(arg), arg);
}

std::string take(char* s) {
  std::string out = s ? s : "";
  rq_string_free(s);
  return out;
}

class Problem {
 public:
  Problem() = default;
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;
  ~Problem() { rq_problem_free(p_); }
  rq_problem** out() { return &p_; }
  rq_problem* get() const { return p_; }

 private:
  rq_problem* p_ = nullptr;
};

class Trace {
 public:
  Trace() = default;
  Trace(const Trace&) = delete;
  Trace& operator=(const Trace&) = delete;
  ~Trace() { rq_trace_free(t_); }
  rq_trace** out() { return &t_; }
  rq_trace* get() const { return t_; }

 private:
  rq_trace* t_ = nullptr;
};

// "a:b" or "a:b:step" or a comma separated list.
std::vector<std::int64_t> parse_iters(const std::string& text) {
  std::vector<std::int64_t> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<std::int64_t> parts;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ':')) parts.push_back(std::stoll(item));
      if (parts.size() < 2 || parts.size() > 3) throw std::invalid_argument(text);
      const std::int64_t step = parts.size() == 3 ? parts[2] : 1;
      if (step <= 0) throw std::invalid_argument(text);
      for (std::int64_t k = parts[0]; k <= parts[1]; k += step) out.push_back(k);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoll(item));
    }
  } catch (const std::exception&) {
    throw CliFailure{RQ_E_ARGUMENT, "cannot parse iteration list '" + text + "'"};
  }
  return out;
}

void apply_max_iters(nlohmann::json& cfg, std::int64_t max_iters) {
  cfg["solver_config"]["max_iters"] = max_iters;
  if (cfg.contains("solvers")) {
    for (auto& s : cfg["solvers"]) {
      if (s.is_object()) s["max_iters"] = max_iters;
    }
  }
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir, std::optional<std::int64_t> max_iters,
            std::optional<std::int64_t> threads, bool dump_instance) {
  nlohmann::json cfg = parse_json_text(read_file(path), path);
  if (!cfg.is_object()) throw CliFailure{RQ_E_PARSE, path + ": config must be an object"};
  if (seed) cfg["seed"] = *seed;
  if (out_dir) cfg["out_dir"] = *out_dir;
  if (max_iters) apply_max_iters(cfg, *max_iters);
  if (threads) cfg["threads"] = *threads;

  char* report = nullptr;
  check(rq_experiment_run(cfg.dump().c_str(), &report), "run");
  std::cout << take(report) << "\n";

  if (dump_instance) {
    nlohmann::json spec = cfg.value("instance", nlohmann::json::object());
    if (cfg.contains("seed")) spec["seed"] = cfg["seed"];
    Problem problem;
    check(rq_instance_generate(spec.dump().c_str(), problem.out()), "dump-instance");
    const std::string dir = cfg.value("out_dir", std::string("out"));
    const std::string target = (std::filesystem::path(dir) / "instance.json").string();
    check(rq_problem_save(problem.get(), target.c_str()), "dump-instance");
  }
  return 0;
}

int cmd_solve(const std::string& instance, const std::string& spec_path, const std::string& method,
              const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::int64_t> max_iters, std::optional<std::string> out_dir,
              const std::string& dump_path) {
  Problem problem;
  if (!instance.empty()) {
    check(rq_problem_load(instance.c_str(), problem.out()), "load");
  } else {
    nlohmann::json spec = parse_json_text(read_file(spec_path), spec_path);
    if (seed) spec["seed"] = *seed;
    check(rq_instance_generate(spec.dump().c_str(), problem.out()), "generate");
  }
  if (!dump_path.empty()) check(rq_problem_save(problem.get(), dump_path.c_str()), "dump-instance");

  nlohmann::json cfg = nlohmann::json::object();
  if (!config_path.empty()) cfg = parse_json_text(read_file(config_path), config_path);
  if (max_iters) cfg["max_iters"] = *max_iters;

  Trace trace;
  check(rq_solve(problem.get(), method.c_str(), cfg.dump().c_str(), trace.out()), "solve");

  int known = 0;
  double f_star = 0.0;
  check(rq_problem_known_value(problem.get(), &known, &f_star), "solve");
  rq_counters counters{};
  check(rq_trace_counters(trace.get(), &counters), "solve");

  std::cout << "method " << rq_trace_method(trace.get()) << "\n"
            << "status " << rq_trace_status(trace.get()) << "\n"
            << "iterations " << rq_trace_iterations(trace.get()) << "\n"
            << "f " << rq_trace_final_value(trace.get()) << "\n";
  if (known) std::cout << "f_gap " << rq_trace_final_value(trace.get()) - f_star << "\n";
  std::cout << "grad_norm " << rq_trace_final_grad_norm(trace.get()) << "\n"
            << "grad_evals " << counters.grad_evals << "\n"
            << "func_evals " << counters.func_evals << "\n"
            << "matvecs " << counters.matvecs << "\n"
            << "exact_solves " << counters.exact_solves << "\n";

  if (out_dir) {
    char* csv = nullptr;
    check(rq_trace_csv(trace.get(), known ? &f_star : nullptr, &csv), "trace");
    const auto path = std::filesystem::path(*out_dir) / ("trace_" + method + ".csv");
    write_file(path.string(), take(csv));
    std::cout << "trace " << path.string() << "\n";
  }
  return 0;
}

int cmd_gen(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  nlohmann::json spec = parse_json_text(read_file(spec_path), spec_path);
  if (seed) spec["seed"] = *seed;
  Problem problem;
  check(rq_instance_generate(spec.dump().c_str(), problem.out()), "gen");
  const auto parent = std::filesystem::path(out).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  check(rq_problem_save(problem.get(), out.c_str()), "gen");
  return 0;
}

int cmd_bounds(const std::string& kind, const std::string& params, const std::string& iters,
               const std::string& out) {
  const std::string params_json = json_argument(params).dump();
  const std::vector<std::int64_t> ks = parse_iters(iters);
  char* csv = nullptr;
  check(rq_envelope_csv(kind.c_str(), params_json.c_str(), ks.data(), ks.size(), &csv), "bounds");
  const std::string text = take(csv);
  if (out.empty()) std::cout << text;
  else write_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized quadratic solvers, instances and bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rq_version()));

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> max_iters;
  std::optional<std::int64_t> threads;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  std::string config_path;
  bool dump_instance = false;
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out-dir", out_dir, "Override the output directory");
  run->add_option("--max-iters", max_iters, "Override every solver's iteration budget");
  run->add_option("--threads", threads, "Worker threads");
  run->add_flag("--dump-instance", dump_instance, "Also write the base instance to <out-dir>/instance.json");

  auto* solve = app.add_subcommand("solve", "Solve one instance with one method");
  std::string instance_path;
  std::string spec_path;
  std::string method;
  std::string solver_config;
  std::string dump_path;
  auto* inst_opt = solve->add_option("--instance", instance_path, "Instance file")->check(CLI::ExistingFile);
  auto* spec_opt = solve->add_option("--spec", spec_path, "Generate the instance from a spec instead")
                       ->check(CLI::ExistingFile);
  inst_opt->excludes(spec_opt);
  solve->add_option("--method", method, "Solver")
      ->required()
      ->check(CLI::IsMember({"gd", "adaptive", "composite", "krylov", "exact"}));
  solve->add_option("--config", solver_config, "Solver config (JSON)")->check(CLI::ExistingFile);
  solve->add_option("--seed", seed, "Override the spec seed");
  solve->add_option("--max-iters", max_iters, "Iteration budget");
  solve->add_option("--out-dir", out_dir, "Write trace_<method>.csv here");
  solve->add_option("--dump-instance", dump_path, "Write the instance to this file");

  auto* gen = app.add_subcommand("gen", "Generate an instance from a spec");
  std::string gen_spec;
  std::string gen_out;
  gen->add_option("--spec", gen_spec, "Instance spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output instance file")->required();
  gen->add_option("--seed", seed, "Override the spec seed");

  auto* bounds = app.add_subcommand("bounds", "Evaluate a bound envelope as CSV");
  std::string kind;
  std::string params;
  std::string iters = "1:100";
  std::string bounds_out;
  bounds->add_option("--kind", kind, "Bound kind")->required();
  bounds->add_option("--params", params, "Parameters as inline JSON or a JSON file")->required();
  bounds->add_option("--iters", iters, "Iterations: a:b, a:b:step or a comma list")->capture_default_str();
  bounds->add_option("--out", bounds_out, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, out_dir, max_iters, threads, dump_instance);
    if (solve->parsed()) {
      if (instance_path.empty() && spec_path.empty()) {
        std::cerr << "solve: one of --instance or --spec is required\n";
        return 2;
      }
      return cmd_solve(instance_path, spec_path, method, solver_config, seed, max_iters, out_dir,
                       dump_path);
    }
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out, seed);
    if (bounds->parsed()) return cmd_bounds(kind, params, iters, bounds_out);
  } catch (const CliFailure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.status == RQ_E_ARGUMENT || f.status == RQ_E_PARSE ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
