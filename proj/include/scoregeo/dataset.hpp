#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "scoregeo/vecspace.hpp"

namespace scoregeo {

/// M finite points in R^N, one per row.
struct Dataset {
  Eigen::MatrixXd points;
  std::string name;
  std::int64_t seed = 0;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dimension() const { return points.cols(); }
  Vec point(Eigen::Index i) const { return points.row(i).transpose(); }

  /// Throws ArgumentError when empty or non-finite.
  void validate() const;
};

// JSON: {"dimension": N, "points": [[...], ...], "name": string, "seed": integer}
Dataset parse_dataset_json(const std::string& text);
Dataset load_dataset_json(const std::filesystem::path& path);
std::string dataset_to_json(const Dataset& ds);

/// Headerless CSV, one point per row. Ragged or malformed rows raise ParseError naming the line.
Dataset parse_dataset_csv(const std::string& text, const std::string& name = "csv");
Dataset load_dataset_csv(const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& ds);

/// Dispatches on the file extension (.json or .csv).
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace scoregeo
