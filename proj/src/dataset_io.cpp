#include "calib/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "calib/rng.hpp"

namespace calib {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  for (auto& cell : cells) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    cell = (b == std::string::npos) ? std::string() : cell.substr(b, e - b + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& origin,
                    std::size_t line_no) {
  if (cell.empty()) {
    throw InputError(origin + ": line " + std::to_string(line_no) +
                     ": empty cell");
  }
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw InputError(origin + ": line " + std::to_string(line_no) +
                     ": non-numeric cell '" + cell + "'");
  }
  return v;
}

}  // namespace

void normalize_probability_vector(std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  for (int pass = 0; pass < 8; ++pass) {
    double s2 = 0.0;
    for (double v : p) s2 += v;
    if (s2 == 1.0) break;
    auto it = std::max_element(p.begin(), p.end());
    *it -= (s2 - 1.0);
  }
}

Dataset load_csv_stream(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InputError(origin + ": empty file");
  }
  const auto header = split_line(line);
  if (header.size() < 3) {
    throw InputError(origin + ": malformed header, need p1,...,pK,y");
  }
  bool has_w = header.back() == "w";
  const std::size_t kcols = header.size() - (has_w ? 2 : 1);
  if (kcols < 2) {
    throw InputError(origin + ": malformed header, need K >= 2 probability columns");
  }
  for (std::size_t j = 0; j < kcols; ++j) {
    if (header[j] != "p" + std::to_string(j + 1)) {
      throw InputError(origin + ": malformed header, column " +
                       std::to_string(j + 1) + " should be p" +
                       std::to_string(j + 1) + ", got '" + header[j] + "'");
    }
  }
  if (header[kcols] != "y") {
    throw InputError(origin + ": malformed header, expected 'y' after probability columns");
  }

  Dataset ds;
  ds.k = static_cast<int>(kcols);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw InputError(origin + ": line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    }
    LabeledForecast s;
    s.p.resize(kcols);
    double sum = 0.0;
    for (std::size_t j = 0; j < kcols; ++j) {
      s.p[j] = parse_number(cells[j], origin, line_no);
      if (s.p[j] < 0.0) {
        throw InputError(origin + ": line " + std::to_string(line_no) +
                         ": negative probability " + cells[j]);
      }
      sum += s.p[j];
    }
    if (std::abs(sum - 1.0) > kIngestTol) {
      throw InputError(origin + ": line " + std::to_string(line_no) +
                       ": probability sum deviates from 1 by " +
                       std::to_string(std::abs(sum - 1.0)) + " > 1e-06");
    }
    normalize_probability_vector(s.p);
    const double yv = parse_number(cells[kcols], origin, line_no);
    if (yv != std::floor(yv) || yv < 1.0 || yv > static_cast<double>(kcols)) {
      throw InputError(origin + ": line " + std::to_string(line_no) +
                       ": label must be an integer in 1.." + std::to_string(kcols) +
                       ", got '" + cells[kcols] + "'");
    }
    s.label = static_cast<int>(yv) - 1;
    if (has_w) {
      s.weight = parse_number(cells[kcols + 1], origin, line_no);
      if (s.weight < 0.0) {
        throw InputError(origin + ": line " + std::to_string(line_no) +
                         ": negative weight " + cells[kcols + 1]);
      }
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) {
    throw InputError(origin + ": no data rows");
  }
  return ds;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  return load_csv_stream(in, path);
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  bool has_w = std::any_of(ds.samples.begin(), ds.samples.end(),
                           [](const LabeledForecast& s) { return s.weight != 1.0; });
  for (int j = 1; j <= ds.k; ++j) out << "p" << j << ",";
  out << "y";
  if (has_w) out << ",w";
  out << "\n";
  for (const auto& s : ds.samples) {
    for (double v : s.p) out << format_double(v) << ",";
    out << (s.label + 1);
    if (has_w) out << "," << format_double(s.weight);
    out << "\n";
  }
  return out.str();
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  out << dataset_to_csv(ds);
}

std::vector<std::vector<double>> load_forecasts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  const auto header = split_line(line);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] != "r" + std::to_string(j + 1)) {
      throw InputError(path + ": malformed header, expected r1,...,rK");
    }
  }
  if (header.size() < 2) throw InputError(path + ": need K >= 2 columns");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw InputError(path + ": line " + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) + " cells");
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      row[j] = parse_number(cells[j], path, line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  return rows;
}

void save_forecasts_csv(const std::vector<std::vector<double>>& rows,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  if (rows.empty()) throw ContractError("no forecasts to write");
  for (std::size_t j = 1; j <= rows[0].size(); ++j) {
    out << "r" << j << (j == rows[0].size() ? '\n' : ',');
  }
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << format_double(row[j]) << (j + 1 == row.size() ? '\n' : ',');
    }
  }
}

Dataset synth_simplex(std::size_t n, int k, double noise, std::uint64_t seed) {
  if (n < 1) throw InputError("synth: need n >= 1");
  if (k < 2) throw InputError("synth: need K >= 2");
  if (noise < 0.0 || noise > 1.0) {
    throw InputError("synth: noise must lie in [0,1], got " + std::to_string(noise));
  }
  Rng rng(splitmix64(seed));
  Dataset ds;
  ds.k = k;
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledForecast s;
    s.p.resize(k);
    // unit-rate exponentials normalized: uniform (Dirichlet(1,..,1)) on the simplex
    for (int j = 0; j < k; ++j) {
      double u;
      do {
        u = rng.uniform();
      } while (u <= 0.0);
      s.p[j] = -std::log(u);
    }
    normalize_probability_vector(s.p);
    const int best = static_cast<int>(std::max_element(s.p.begin(), s.p.end()) -
                                      s.p.begin());
    if (noise > 0.0 && rng.uniform() < noise) {
      const int offset = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
      s.label = (best + offset) % k;
    } else {
      s.label = best;
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace calib
