#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace prunemip {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

/// Axis-aligned box [lo_i, hi_i].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  static Box uniform(std::size_t dim, double lo, double hi);
};

struct Dataset {
  Matrix inputs;
  Matrix targets;
  Box box;
  std::vector<std::string> input_names;
  std::vector<std::string> target_names;

  std::size_t size() const { return inputs.rows; }
  /// Throws Error(InvalidInput) if shapes, finiteness or box containment fail.
  void validate() const;
};

double peaks(double x1, double x2);

/// One sample per stratum [lo + k(hi-lo)/n, lo + (k+1)(hi-lo)/n) in every
/// dimension, strata paired by independent random permutations.
Matrix latinHypercube(std::size_t n, const Box& box, std::uint64_t seed);

/// Mean absolute percentage error, denominators clamped at epsilon.
double mape(const Matrix& targets, const Matrix& predictions, double epsilon = 1e-8);

std::pair<Dataset, Dataset> splitDataset(const Dataset& ds, double train_frac, std::uint64_t seed);

/// Peaks samples drawn by Latin hypercube over box.
Dataset makePeaksDataset(std::size_t n, const Box& box, std::uint64_t seed);

Dataset loadCsv(const std::filesystem::path& path, const std::vector<std::string>& input_cols,
                const std::vector<std::string>& target_cols,
                const std::optional<Box>& box_override = std::nullopt);
void saveCsv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace prunemip
