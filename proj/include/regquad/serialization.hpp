#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "regquad/core_model.hpp"

namespace regquad {

// {dim, p, s, eigenvalues[], factor?[][], b[], known_solution?[]}; factor is
// row-major. Doubles are written in shortest round-trip form.
nlohmann::json problem_to_json(const RegQuadProblem& problem);
RegQuadProblem problem_from_json(const nlohmann::json& j);

void save_problem(const RegQuadProblem& problem, const std::string& path);
RegQuadProblem load_problem(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

// Minimal CSV builder: fields are appended per row and joined with commas.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(std::string_view v);
  CsvWriter& empty();
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace regquad
