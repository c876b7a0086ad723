#include "prunemip/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "prunemip/error.hpp"

namespace prunemip {

bool Box::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

Box Box::uniform(std::size_t dim, double lo, double hi) {
  return Box{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

void Dataset::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidInput, m); };
  if (inputs.rows == 0) fail("dataset is empty");
  if (inputs.cols == 0 || targets.cols == 0) fail("dataset needs at least one input and one target");
  if (targets.rows != inputs.rows) fail("inputs and targets have different row counts");
  if (box.lo.size() != inputs.cols || box.hi.size() != inputs.cols) fail("box dimension mismatch");
  for (double v : inputs.values) {
    if (!std::isfinite(v)) fail("non-finite input value");
  }
  for (double v : targets.values) {
    if (!std::isfinite(v)) fail("non-finite target value");
  }
  for (std::size_t r = 0; r < inputs.rows; ++r) {
    if (!box.contains(inputs.row(r))) fail("row " + std::to_string(r) + " lies outside the box");
  }
}

double peaks(double x1, double x2) {
  return 3.0 * (1.0 - x1) * (1.0 - x1) * std::exp(-x1 * x1 - (x2 + 1.0) * (x2 + 1.0)) -
         10.0 * (x1 / 5.0 - x1 * x1 * x1 - std::pow(x2, 5)) * std::exp(-x1 * x1 - x2 * x2) -
         std::exp(-(x1 + 1.0) * (x1 + 1.0) - x2 * x2) / 3.0;
}

Matrix latinHypercube(std::size_t n, const Box& box, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "latinHypercube: n must be at least 1");
  if (box.lo.size() != box.hi.size() || box.lo.empty()) {
    throw Error(ErrorKind::InvalidDomain, "latinHypercube: malformed box");
  }
  for (std::size_t d = 0; d < box.dim(); ++d) {
    if (!(box.lo[d] < box.hi[d])) {
      throw Error(ErrorKind::InvalidDomain, "latinHypercube: empty box in dimension " +
                                                std::to_string(d));
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(n, box.dim());
  std::vector<std::size_t> perm(n);
  for (std::size_t d = 0; d < box.dim(); ++d) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const double width = box.hi[d] - box.lo[d];
    for (std::size_t i = 0; i < n; ++i) {
      const double k = static_cast<double>(perm[i]);
      const double stratum_lo = box.lo[d] + k * width / static_cast<double>(n);
      const double stratum_hi = box.lo[d] + (k + 1.0) * width / static_cast<double>(n);
      double v = stratum_lo + unit(rng) * (stratum_hi - stratum_lo);
      // Rounding can land exactly on the upper edge of the stratum.
      if (v >= stratum_hi) v = std::nextafter(stratum_hi, stratum_lo);
      out(i, d) = std::max(v, stratum_lo);
    }
  }
  return out;
}

double mape(const Matrix& targets, const Matrix& predictions, double epsilon) {
  if (targets.rows != predictions.rows || targets.cols != predictions.cols) {
    throw Error(ErrorKind::InvalidInput, "mape: shape mismatch");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidInput, "mape: epsilon must be positive");
  if (targets.values.empty()) throw Error(ErrorKind::InvalidInput, "mape: empty input");
  double acc = 0.0;
  for (std::size_t k = 0; k < targets.values.size(); ++k) {
    const double y = targets.values[k];
    acc += std::fabs(y - predictions.values[k]) / std::max(std::fabs(y), epsilon);
  }
  return 100.0 * acc / static_cast<double>(targets.values.size());
}

namespace {

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.inputs = Matrix(rows.size(), ds.inputs.cols);
  out.targets = Matrix(rows.size(), ds.targets.cols);
  out.box = ds.box;
  out.input_names = ds.input_names;
  out.target_names = ds.target_names;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(ds.inputs.row(rows[i]).begin(), ds.inputs.cols, out.inputs.row(i).begin());
    std::copy_n(ds.targets.row(rows[i]).begin(), ds.targets.cols, out.targets.row(i).begin());
  }
  return out;
}

}  // namespace

std::pair<Dataset, Dataset> splitDataset(const Dataset& ds, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "splitDataset: train fraction must lie in (0,1)");
  }
  const std::size_t n = ds.size();
  if (n < 2) throw Error(ErrorKind::InvalidInput, "splitDataset: need at least two rows");
  std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_frac));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::span<const std::size_t> all(order);
  return {subset(ds, all.first(n_train)), subset(ds, all.subspan(n_train))};
}

Dataset makePeaksDataset(std::size_t n, const Box& box, std::uint64_t seed) {
  if (box.dim() != 2) throw Error(ErrorKind::InvalidDomain, "peaks is defined on a 2-D box");
  Dataset ds;
  ds.inputs = latinHypercube(n, box, seed);
  ds.targets = Matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) ds.targets(i, 0) = peaks(ds.inputs(i, 0), ds.inputs(i, 1));
  ds.box = box;
  ds.input_names = {"x0", "x1"};
  ds.target_names = {"y0"};
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> splitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parseDouble(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

void appendNumber(std::string& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

}  // namespace

Dataset loadCsv(const std::filesystem::path& path, const std::vector<std::string>& input_cols,
                const std::vector<std::string>& target_cols, const std::optional<Box>& box_override) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, path.string() + ": missing header row");
  std::vector<std::string> header = splitLine(line);
  for (auto& h : header) h = trim(h);

  auto column_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorKind::Schema, path.string() + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  if (input_cols.empty() || target_cols.empty()) {
    throw Error(ErrorKind::InvalidInput, "loadCsv: need at least one input and one target column");
  }
  std::vector<std::size_t> in_idx, tg_idx;
  for (const auto& c : input_cols) in_idx.push_back(column_index(c));
  for (const auto& c : target_cols) tg_idx.push_back(column_index(c));

  std::vector<double> in_vals, tg_vals;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = splitLine(line);
    auto read = [&](std::size_t col, std::vector<double>& dst) {
      if (col >= cells.size()) {
        throw Error(ErrorKind::Parse, path.string() + ": row " + std::to_string(line_no) +
                                          " has too few cells");
      }
      double v = 0.0;
      if (!parseDouble(trim(cells[col]), v) || !std::isfinite(v)) {
        throw Error(ErrorKind::Parse, path.string() + ": row " + std::to_string(line_no) +
                                          ", column '" + header[col] + "': not a number: '" +
                                          cells[col] + "'");
      }
      dst.push_back(v);
    };
    for (auto c : in_idx) read(c, in_vals);
    for (auto c : tg_idx) read(c, tg_vals);
    ++rows;
  }
  if (rows == 0) throw Error(ErrorKind::InvalidInput, path.string() + ": no data rows");

  Dataset ds;
  ds.inputs = Matrix(rows, in_idx.size());
  ds.inputs.values = std::move(in_vals);
  ds.targets = Matrix(rows, tg_idx.size());
  ds.targets.values = std::move(tg_vals);
  ds.input_names = input_cols;
  ds.target_names = target_cols;
  if (box_override) {
    ds.box = *box_override;
  } else {
    ds.box.lo.assign(ds.inputs.cols, 0.0);
    ds.box.hi.assign(ds.inputs.cols, 0.0);
    for (std::size_t d = 0; d < ds.inputs.cols; ++d) {
      double lo = ds.inputs(0, d), hi = lo;
      for (std::size_t r = 1; r < rows; ++r) {
        lo = std::min(lo, ds.inputs(r, d));
        hi = std::max(hi, ds.inputs(r, d));
      }
      ds.box.lo[d] = lo;
      ds.box.hi[d] = hi;
    }
  }
  ds.validate();
  return ds;
}

void saveCsv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  auto name = [](const std::vector<std::string>& names, std::size_t i, const char* prefix) {
    return i < names.size() ? names[i] : prefix + std::to_string(i);
  };
  std::string text;
  for (std::size_t d = 0; d < ds.inputs.cols; ++d) {
    text += (d ? "," : "") + name(ds.input_names, d, "x");
  }
  for (std::size_t d = 0; d < ds.targets.cols; ++d) text += "," + name(ds.target_names, d, "y");
  text += '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t d = 0; d < ds.inputs.cols; ++d) {
      if (d) text += ',';
      appendNumber(text, ds.inputs(r, d));
    }
    for (std::size_t d = 0; d < ds.targets.cols; ++d) {
      text += ',';
      appendNumber(text, ds.targets(r, d));
    }
    text += '\n';
  }
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace prunemip
