#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "prunemip/error.hpp"
#include "prunemip/milp.hpp"

namespace prunemip {

namespace {

std::string num(double v) {
  if (v == std::numeric_limits<double>::infinity()) return "1e+30";
  if (v == -std::numeric_limits<double>::infinity()) return "-1e+30";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void writeFile(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

char senseLetter(RowSense s) {
  switch (s) {
    case RowSense::LessEqual: return 'L';
    case RowSense::GreaterEqual: return 'G';
    case RowSense::Equal: return 'E';
  }
  return 'E';
}

}  // namespace

std::string toMps(const MilpModel& model) {
  std::ostringstream os;
  os << "NAME " << model.name << "\n";
  if (model.objective.sense == ObjectiveSense::Maximize) os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n N obj\n";
  for (const auto& c : model.cons) os << " " << senseLetter(c.sense) << " " << c.name << "\n";

  std::vector<std::vector<std::pair<std::string, double>>> columns(model.vars.size());
  for (const auto& t : model.objective.terms) columns[t.var].push_back({"obj", t.coef});
  for (const auto& c : model.cons) {
    for (const auto& t : c.terms) columns[t.var].push_back({c.name, t.coef});
  }

  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    const bool is_int = model.vars[j].kind == VarKind::Binary;
    if (is_int != in_int) {
      os << "    MARKER" << marker++ << " 'MARKER' " << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_int;
    }
    if (columns[j].empty()) {
      os << "    " << model.vars[j].name << " obj 0\n";
      continue;
    }
    for (const auto& [row, coef] : columns[j]) {
      os << "    " << model.vars[j].name << " " << row << " " << num(coef) << "\n";
    }
  }
  if (in_int) os << "    MARKER" << marker++ << " 'MARKER' 'INTEND'\n";

  os << "RHS\n";
  if (model.objective.constant != 0.0) os << "    RHS obj " << num(-model.objective.constant) << "\n";
  for (const auto& c : model.cons) {
    if (c.rhs != 0.0) os << "    RHS " << c.name << " " << num(c.rhs) << "\n";
  }

  os << "BOUNDS\n";
  for (const auto& v : model.vars) {
    const bool lo_inf = std::isinf(v.lower), hi_inf = std::isinf(v.upper);
    if (v.kind == VarKind::Binary && v.lower == 0.0 && v.upper == 1.0) {
      os << " BV BND " << v.name << "\n";
    } else if (!lo_inf && !hi_inf && v.lower == v.upper) {
      os << " FX BND " << v.name << " " << num(v.lower) << "\n";
    } else {
      if (lo_inf) {
        os << " MI BND " << v.name << "\n";
      } else {
        os << " LO BND " << v.name << " " << num(v.lower) << "\n";
      }
      if (hi_inf) {
        os << " PL BND " << v.name << "\n";
      } else {
        os << " UP BND " << v.name << " " << num(v.upper) << "\n";
      }
    }
  }
  os << "ENDATA\n";
  return os.str();
}

namespace {

void writeExpr(std::ostream& os, const MilpModel& model, const std::vector<Term>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    if (first) {
      if (t.coef < 0) os << "- ";
    } else {
      os << (t.coef < 0 ? " - " : " + ");
    }
    os << num(std::fabs(t.coef)) << " " << model.vars[t.var].name;
    first = false;
  }
  if (first) os << "0 " << (model.vars.empty() ? "x0" : model.vars.front().name);
}

}  // namespace

std::string toLp(const MilpModel& model) {
  std::ostringstream os;
  os << "\\ " << model.name << "\n";
  os << (model.objective.sense == ObjectiveSense::Maximize ? "Maximize\n" : "Minimize\n");
  os << " obj: ";
  writeExpr(os, model, model.objective.terms);
  if (model.objective.constant != 0.0) {
    os << (model.objective.constant < 0 ? " - " : " + ") << num(std::fabs(model.objective.constant));
  }
  os << "\nSubject To\n";
  for (const auto& c : model.cons) {
    os << " " << c.name << ": ";
    writeExpr(os, model, c.terms);
    os << (c.sense == RowSense::LessEqual ? " <= " : c.sense == RowSense::GreaterEqual ? " >= " : " = ")
       << num(c.rhs) << "\n";
  }
  os << "Bounds\n";
  for (const auto& v : model.vars) {
    if (v.kind == VarKind::Binary) continue;
    const std::string lo = std::isinf(v.lower) ? "-inf" : num(v.lower);
    const std::string hi = std::isinf(v.upper) ? "+inf" : num(v.upper);
    if (v.lower == v.upper) {
      os << " " << v.name << " = " << lo << "\n";
    } else {
      os << " " << lo << " <= " << v.name << " <= " << hi << "\n";
    }
  }
  os << "Binaries\n";
  for (const auto& v : model.vars) {
    if (v.kind == VarKind::Binary) os << " " << v.name << "\n";
  }
  os << "End\n";
  return os.str();
}

void exportMps(const MilpModel& model, const std::filesystem::path& path) { writeFile(toMps(model), path); }
void exportLp(const MilpModel& model, const std::filesystem::path& path) { writeFile(toLp(model), path); }

}  // namespace prunemip
