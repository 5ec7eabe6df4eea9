#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace crowdabuse {

/// Dense row-major sample matrix with named columns.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<double> data;

  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> column_names) : names(std::move(column_names)) {}

  std::size_t cols() const noexcept { return names.size(); }
  std::size_t rows() const noexcept { return names.empty() ? 0 : data.size() / names.size(); }

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols(), cols()}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols(), cols()}; }

  void append(std::span<const double> values) { data.insert(data.end(), values.begin(), values.end()); }
};

}  // namespace crowdabuse
