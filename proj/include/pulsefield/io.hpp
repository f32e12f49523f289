#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "continuum.hpp"
#include "density.hpp"
#include "quantile.hpp"

namespace pulsefield::io {

using json = nlohmann::json;

/// Shortest text that parses back to the same double. Keeps CSV output byte-stable.
[[nodiscard]] inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

[[nodiscard]] inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(const std::string& s) { return raw(s); }
  CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }
  void row(const std::vector<double>& values) {
    for (double v : values) cell(v);
    end_row();
  }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

[[nodiscard]] inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

/// JSON has no NaN or infinity; they become null.
[[nodiscard]] inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void write_density_csv(const std::filesystem::path& path, const DensityField& d,
                              const std::string& column = "rho") {
  CsvWriter w(path, {"theta", column});
  for (std::size_t i = 0; i <= d.cells(); ++i) w.row({d.theta(i), d.rho[i]});
}

inline void write_quantiles_csv(const std::filesystem::path& path, const QuantileProfile& p, std::size_t n) {
  CsvWriter w(path, {"phi", "Q", "q"});
  for (const auto& s : p.sample(n)) w.row({s.phi, s.Q, s.q});
}

inline void write_trajectory_csv(const std::filesystem::path& path, const std::vector<LogRow>& rows) {
  CsvWriter w(path, {"t", "J0", "mass", "rho_min", "rho_max", "V", "q_min", "event"});
  for (const auto& r : rows) {
    w.cell(r.t).cell(r.J0).cell(r.mass).cell(r.rho_min).cell(r.rho_max).cell(r.V).cell(r.q_min).cell(r.event);
    w.end_row();
  }
}

[[nodiscard]] inline std::vector<LogRow> read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty trajectory file");
  const auto header = split(line);
  const std::vector<std::string> expected{"t", "J0", "mass", "rho_min", "rho_max", "V", "q_min", "event"};
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
  };
  if (header.size() != expected.size()) throw std::runtime_error(path.string() + ": unexpected trajectory header");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (strip(header[i]) != expected[i]) throw std::runtime_error(path.string() + ": unexpected column " + header[i]);
  std::vector<LogRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != expected.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    LogRow r;
    r.t = parse_double(f[0]);
    r.J0 = parse_double(f[1]);
    r.mass = parse_double(f[2]);
    r.rho_min = parse_double(f[3]);
    r.rho_max = parse_double(f[4]);
    r.V = parse_double(f[5]);
    r.q_min = parse_double(f[6]);
    r.event = strip(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Reads a two-column `theta,<value>` file written by write_density_csv.
[[nodiscard]] inline DensityField read_density_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || split(line).size() != 2 || split(line)[0] != "theta")
    throw std::runtime_error(path.string() + ": expected a theta,<value> header");
  std::vector<double> theta, rho;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 2) throw std::runtime_error(path.string() + ": expected 2 fields per row");
    theta.push_back(parse_double(f[0]));
    rho.push_back(parse_double(f[1]));
  }
  if (rho.size() < 3) throw std::runtime_error(path.string() + ": too few rows");
  const double h = numerics::two_pi / static_cast<double>(rho.size() - 1);
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (std::abs(theta[i] - h * static_cast<double>(i)) > 1e-9)
      throw std::runtime_error(path.string() + ": phases are not a uniform grid on [0, 2pi]");
  return DensityField(std::move(rho), 0.0, 0.0);
}

/// File-name-safe rendering of a snapshot time, e.g. "density_t2.5.csv".
[[nodiscard]] inline std::string time_tag(double t) { return format_double(t); }

}  // namespace pulsefield::io
