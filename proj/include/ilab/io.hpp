#pragma once

#include "ilab/dirichlet.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ilab {

inline constexpr const char* kToolVersion = "0.1.0";

// Coordinates and values of a field in emission order.
struct FieldTable {
  int dim = 1;
  std::vector<Point> coords;
  std::vector<double> values;
};

inline FieldTable to_table(const ScalarField& u) {
  FieldTable t;
  const auto& m = *u.mask;
  t.dim = m.grid.dim;
  for (auto i : m.active()) {
    const double v = u.values[i];
    if (!std::isfinite(v))
      throw Error(Errc::non_finite, "field value is not finite at " + format_point(m.grid.coord(i), t.dim));
    t.coords.push_back(m.grid.coord(i));
    t.values.push_back(v);
  }
  return t;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string field_csv(const FieldTable& t) {
  static const char* names[3] = {"x", "y", "z"};
  std::string s;
  for (int c = 0; c < t.dim; ++c) (s += names[c]) += ',';
  s += "value\n";
  for (std::size_t r = 0; r < t.values.size(); ++r) {
    for (int c = 0; c < t.dim; ++c) (s += fmt17(t.coords[r][c])) += ',';
    (s += fmt17(t.values[r])) += '\n';
  }
  return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::io, "cannot open " + p.string() + " for writing");
  f << s;
  if (!f) throw Error(Errc::io, "write failed for " + p.string());
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(Errc::io, "cannot open " + p.string() + " for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void emit_field(const ScalarField& u, const std::filesystem::path& p) { write_text(p, field_csv(to_table(u))); }

inline FieldTable parse_field_csv(const std::string& text, const std::string& origin = "<memory>") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::io, origin + ": empty field file");
  FieldTable t;
  if (line == "x,value") t.dim = 1;
  else if (line == "x,y,value") t.dim = 2;
  else if (line == "x,y,z,value") t.dim = 3;
  else throw Error(Errc::io, origin + ": unexpected header '" + line + "'");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') throw Error(Errc::io, origin + ": bad number on row " + std::to_string(row));
      cells.push_back(v);
    }
    if (cells.size() != static_cast<std::size_t>(t.dim) + 1)
      throw Error(Errc::io, origin + ": wrong column count on row " + std::to_string(row));
    Point x{0, 0, 0};
    for (int c = 0; c < t.dim; ++c) x[c] = cells[c];
    t.coords.push_back(x);
    t.values.push_back(cells.back());
  }
  return t;
}

inline FieldTable read_field(const std::filesystem::path& p) { return parse_field_csv(read_text(p), p.string()); }

// Residual trace: iter,residual_sup followed by named extra columns.
struct Trace {
  std::vector<std::string> extra_names;
  std::vector<double> residual;
  std::vector<std::vector<double>> extras;

  void add(double res, std::vector<double> ex = {}) {
    if (ex.size() != extra_names.size()) throw Error(Errc::invalid_argument, "trace row has the wrong width");
    residual.push_back(res);
    extras.push_back(std::move(ex));
  }
};

inline Trace trace_of(const SolveReport& r) {
  Trace t;
  for (double v : r.residual_history) t.add(v);
  return t;
}

inline std::string trace_csv(const Trace& t) {
  std::string s = "iter,residual_sup";
  for (const auto& n : t.extra_names) (s += ',') += n;
  s += '\n';
  for (std::size_t i = 0; i < t.residual.size(); ++i) {
    s += std::to_string(i);
    (s += ',') += fmt17(t.residual[i]);
    for (double v : t.extras[i]) (s += ',') += fmt17(v);
    s += '\n';
  }
  return s;
}

inline void emit_trace(const Trace& t, const std::filesystem::path& p) { write_text(p, trace_csv(t)); }
inline void emit_trace(const SolveReport& r, const std::filesystem::path& p) { emit_trace(trace_of(r), p); }

}  // namespace ilab
