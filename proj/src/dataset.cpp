#include "scoregeo/dataset.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "scoregeo/error.hpp"
#include "scoregeo/json_io.hpp"

namespace scoregeo {

void Dataset::validate() const {
  if (points.rows() < 1) throw ArgumentError("dataset '" + name + "' is empty");
  if (points.cols() < 1) throw ArgumentError("dataset '" + name + "' has dimension 0");
  if (!points.allFinite()) throw ArgumentError("dataset '" + name + "' contains non-finite values");
}

namespace {

Dataset parse_dataset_json_impl(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("points") || !j.contains("dimension")) {
    throw ParseError("dataset JSON: expected object with 'dimension' and 'points'");
  }
  const auto n = j.at("dimension").get<Eigen::Index>();
  const auto& pts = j.at("points");
  if (!pts.is_array()) throw ParseError("dataset JSON: 'points' must be an array");
  Dataset ds;
  ds.name = j.value("name", std::string("dataset"));
  ds.seed = j.value("seed", std::int64_t{0});
  ds.points.resize(static_cast<Eigen::Index>(pts.size()), n);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec row = vec_from_json(pts[i], "dataset JSON point");
    if (row.size() != n) {
      throw ParseError("dataset JSON: point " + std::to_string(i) + " has " + std::to_string(row.size()) +
                       " values, expected " + std::to_string(n));
    }
    ds.points.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  ds.validate();
  return ds;
}

}  // namespace

Dataset parse_dataset_json(const std::string& text) {
  try {
    return parse_dataset_json_impl(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset JSON: ") + e.what());
  }
}

Dataset load_dataset_json(const std::filesystem::path& path) {
  return parse_dataset_json(read_text_file(path));
}

std::string dataset_to_json(const Dataset& ds) {
  json j;
  j["dimension"] = ds.dimension();
  json pts = json::array();
  for (Eigen::Index i = 0; i < ds.size(); ++i) pts.push_back(vec_to_json(ds.point(i)));
  j["points"] = std::move(pts);
  j["name"] = ds.name;
  j["seed"] = ds.seed;
  return dump_json(j, 1);
}

namespace {

std::vector<double> parse_csv_row(const std::string& line, std::size_t lineno) {
  std::vector<double> vals;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
      throw ParseError("dataset CSV line " + std::to_string(lineno) + ": cannot parse '" + field + "'");
    }
    vals.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return vals;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = parse_csv_row(line, lineno);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("dataset CSV line " + std::to_string(lineno) + ": ragged row (" +
                       std::to_string(row.size()) + " values, expected " +
                       std::to_string(rows.front().size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("dataset CSV: no rows");
  Dataset ds;
  ds.name = name;
  ds.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      ds.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
  }
  ds.validate();
  return ds;
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
  return parse_dataset_csv(read_text_file(path), path.stem().string());
}

std::string dataset_to_csv(const Dataset& ds) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index k = 0; k < ds.dimension(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.points(i, k));
      if (k) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return load_dataset_json(path);
  if (ext == ".csv") return load_dataset_csv(path);
  throw IoError("unrecognized dataset extension '" + ext + "' for " + path.string());
}

}  // namespace scoregeo
