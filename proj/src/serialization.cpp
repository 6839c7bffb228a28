#include "regquad/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "regquad/errors.hpp"

namespace regquad {

namespace {

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector vector_from_json(const nlohmann::json& j, const char* name) {
  if (!j.is_array()) throw ParseError(std::string(name) + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string(name) + " must contain numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

nlohmann::json problem_to_json(const RegQuadProblem& problem) {
  nlohmann::json j;
  j["dim"] = problem.dim();
  j["p"] = problem.p();
  j["s"] = problem.s();
  j["eigenvalues"] = vector_to_json(problem.matrix().eigenvalues());
  if (!problem.matrix().is_diagonal()) {
    const Matrix& u = problem.matrix().factor();
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < u.rows(); ++r) rows.push_back(vector_to_json(u.row(r).transpose()));
    j["factor"] = std::move(rows);
  }
  j["b"] = vector_to_json(problem.b());
  if (problem.known_solution()) j["known_solution"] = vector_to_json(*problem.known_solution());
  return j;
}

RegQuadProblem problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("instance must be a JSON object");
  const auto dim = require(j, "dim").get<long long>();
  const double p = require(j, "p").get<double>();
  const double s = require(j, "s").get<double>();
  Vector eig = vector_from_json(require(j, "eigenvalues"), "eigenvalues");
  Vector b = vector_from_json(require(j, "b"), "b");
  if (eig.size() != dim || b.size() != dim) throw ParseError("dim disagrees with array lengths");
  std::optional<Vector> known;
  if (auto it = j.find("known_solution"); it != j.end() && !it->is_null()) {
    known = vector_from_json(*it, "known_solution");
  }
  if (auto it = j.find("factor"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || static_cast<long long>(it->size()) != dim) {
      throw ParseError("factor must be a dim x dim array");
    }
    Matrix u(dim, dim);
    for (long long r = 0; r < dim; ++r) {
      Vector row = vector_from_json((*it)[r], "factor row");
      if (row.size() != dim) throw ParseError("factor must be a dim x dim array");
      u.row(r) = row.transpose();
    }
    return RegQuadProblem(SpectralMatrix::dense(std::move(eig), std::move(u)), std::move(b), p, s,
                          std::move(known));
  }
  return RegQuadProblem(SpectralMatrix::diagonal(std::move(eig)), std::move(b), p, s,
                        std::move(known));
}

void save_problem(const RegQuadProblem& problem, const std::string& path) {
  write_text_file(path, problem_to_json(problem).dump() + "\n");
}

RegQuadProblem load_problem(const std::string& path) { return problem_from_json(read_json_file(path)); }

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << contents;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void CsvWriter::sep() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::field(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::field(long long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::empty() {
  sep();
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace regquad
