#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "robcov/estimators.hpp"
#include "robcov/linalg.hpp"
#include "robcov/rmt.hpp"
#include "robcov/spectra.hpp"

namespace robcov {

using json = nlohmann::json;

// 17 significant digits round-trip IEEE doubles losslessly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// One sample per row, comma separated.
inline void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace detail

// Reads a numeric CSV; a first line whose first cell does not parse as a
// number is treated as a header and skipped.
inline Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t j = 0; j < cells.size(); ++j)
      if (!detail::parse_double(cells[j], row[j])) {
        numeric = false;
        break;
      }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw std::runtime_error("non-numeric cell in " + path.string());
    }
    first = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty csv: " + path.string());
  const std::size_t p = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p)
      throw std::runtime_error("ragged csv: " + path.string());
    for (std::size_t j = 0; j < p; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return m;
}

// One eigenvalue per line.
inline void write_spectrum(const std::filesystem::path& path, const Spectrum& s) {
  std::ostringstream out;
  for (double v : s.eigenvalues) out << format_double(v) << '\n';
  write_text(path, out.str());
}

inline void write_density_curve(const std::filesystem::path& path,
                                const std::vector<double>& x,
                                const std::vector<double>& rho) {
  if (x.size() != rho.size())
    throw std::invalid_argument("write_density_curve: length mismatch");
  std::ostringstream out;
  out << "x,rho\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    out << format_double(x[i]) << ',' << format_double(rho[i]) << '\n';
  write_text(path, out.str());
}

inline void write_histogram(const std::filesystem::path& path, const Histogram& h) {
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    out << format_double(h.edges[k]) << ',' << format_double(h.edges[k + 1]) << ','
        << h.counts[k] << '\n';
  write_text(path, out.str());
}

inline json to_json(const CovarianceEstimate& est) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(est.matrix.size()));
  for (Index i = 0; i < est.matrix.rows(); ++i)
    for (Index j = 0; j < est.matrix.cols(); ++j) flat.push_back(est.matrix(i, j));
  json j{{"p", est.matrix.rows()},
         {"matrix", flat},  // row-major
         {"trace", est.trace()},
         {"iterations", est.iterations},
         {"residual", est.residual},
         {"converged", est.converged}};
  j["weight_vector"] =
      std::vector<double>(est.weights.data(), est.weights.data() + est.weights.size());
  return j;
}

inline json to_json(const SpectralMeasure& h) {
  json atoms = json::array();
  for (const auto& a : h.atoms) atoms.push_back(json{{"t", a.t}, {"pi", a.pi}});
  return json{{"atoms", atoms}};
}

inline SpectralMeasure spectral_measure_from_json(const json& j) {
  SpectralMeasure h;
  if (!j.contains("atoms") || !j["atoms"].is_array())
    throw std::runtime_error("spectral measure json: missing atoms array");
  for (const auto& a : j["atoms"])
    h.atoms.push_back({a.at("t").get<double>(), a.at("pi").get<double>()});
  h.check();
  return h;
}

}  // namespace robcov
