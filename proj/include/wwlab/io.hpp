#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wwlab/fit.hpp"
#include "wwlab/spectral.hpp"

namespace wwlab::io {

namespace fs = std::filesystem;
using nlohmann::json;
using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest round-trip representation, independent of the locale.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- CSV tables ----

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match the header");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw FormatError("missing column " + name);
  }
};

inline void write_csv(const fs::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

inline Table read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing table " + path.string());
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty table " + path.string());
  std::stringstream header(line);
  for (std::string cell; std::getline(header, cell, ',');) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      // from_chars is locale independent and accepts subnormals, nan and inf.
      double v = 0.0;
      const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || end != cell.data() + cell.size())
        throw FormatError("bad number '" + cell + "' in " + path.string());
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) throw FormatError("ragged row in " + path.string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Field on the 2 pi grid as (x, re, im).
inline Table field_table(const ComplexVec& u) {
  Table t{{"x", "re", "im"}, {}};
  const int n = static_cast<int>(u.size());
  for (int j = 0; j < n; ++j) t.add({spectral::kTwoPi * j / n, u[j].real(), u[j].imag()});
  return t;
}

inline Table field_table(const RealVec& u) { return field_table(spectral::to_complex(u)); }

inline ComplexVec field_from_table(const Table& t) {
  const std::size_t re = t.column("re"), im = t.column("im");
  ComplexVec u;
  for (const auto& row : t.rows) u.emplace_back(row[re], row[im]);
  return u;
}

// ---- binary column format ----
//
// "WWLB" | u32 version | u32 nx | u32 nz | f64 length | u32 name bytes | name
// | u32 columns | per column: u32 name bytes | name | nx * nz f64 values,
// row-major in z. Little-endian host order; line fields have nz = 1.

struct BinaryField {
  std::string name;
  std::uint32_t nx = 0, nz = 1;
  double length = spectral::kTwoPi;
  std::vector<std::string> column_names;
  std::vector<RealVec> columns;
};

namespace detail {

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("truncated binary field");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto len = get<std::uint32_t>(in);
  if (len > 4096) throw FormatError("implausible name length in binary field");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw FormatError("truncated binary field");
  return s;
}

}  // namespace detail

inline constexpr std::uint32_t kBinaryVersion = 1;

inline void write_binary(const fs::path& path, const BinaryField& f) {
  if (f.columns.size() != f.column_names.size()) throw std::invalid_argument("column names do not match columns");
  for (const auto& c : f.columns)
    if (c.size() != static_cast<std::size_t>(f.nx) * f.nz) throw std::invalid_argument("column size is not nx * nz");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write("WWLB", 4);
  detail::put(out, kBinaryVersion);
  detail::put(out, f.nx);
  detail::put(out, f.nz);
  detail::put(out, f.length);
  detail::put_string(out, f.name);
  detail::put(out, static_cast<std::uint32_t>(f.columns.size()));
  for (std::size_t c = 0; c < f.columns.size(); ++c) {
    detail::put_string(out, f.column_names[c]);
    out.write(reinterpret_cast<const char*>(f.columns[c].data()),
              static_cast<std::streamsize>(f.columns[c].size() * sizeof(double)));
  }
}

inline BinaryField read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing binary field " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "WWLB") throw FormatError("not a binary field: " + path.string());
  if (detail::get<std::uint32_t>(in) != kBinaryVersion) throw FormatError("unsupported binary field version");
  BinaryField f;
  f.nx = detail::get<std::uint32_t>(in);
  f.nz = detail::get<std::uint32_t>(in);
  f.length = detail::get<double>(in);
  f.name = detail::get_string(in);
  const auto count = detail::get<std::uint32_t>(in);
  const std::size_t size = static_cast<std::size_t>(f.nx) * f.nz;
  for (std::uint32_t c = 0; c < count; ++c) {
    f.column_names.push_back(detail::get_string(in));
    RealVec col(size);
    in.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw FormatError("truncated binary field");
    f.columns.push_back(std::move(col));
  }
  return f;
}

inline BinaryField line_field(const std::string& name, const ComplexVec& u) {
  BinaryField f;
  f.name = name;
  f.nx = static_cast<std::uint32_t>(u.size());
  f.column_names = {"re", "im"};
  RealVec re(u.size()), im(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    re[j] = u[j].real();
    im[j] = u[j].imag();
  }
  f.columns = {re, im};
  return f;
}

// ---- scans and fits ----

inline json fit_json(const LinearFit& fit) { return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}}; }

// (scale, value, fit residual in log2) rows and the JSON fit summary.
inline Table scan_table(const std::string& scale_name, const std::string& value_name, const std::vector<double>& scales,
                        const std::vector<double>& values, const LinearFit& fit) {
  Table t{{scale_name, value_name, "fit_residual"}, {}};
  for (std::size_t i = 0; i < scales.size(); ++i)
    t.add({scales[i], values[i], std::log2(values[i]) - (fit.intercept + fit.slope * std::log2(scales[i]))});
  return t;
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

inline json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

// ---- artifact directories ----

// Files are written into a sibling temporary directory that replaces the
// target on commit(); an uncommitted writer removes its temporary directory.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path target) : target_(std::move(target)) {
    if (target_.filename().empty()) target_ = target_.parent_path();
    fs::create_directories(target_.parent_path().empty() ? fs::path(".") : target_.parent_path());
    std::random_device rd;
    for (int attempt = 0; attempt < 16; ++attempt) {
      fs::path candidate = target_;
      candidate += ".tmp-" + std::to_string(rd());
      if (fs::create_directory(candidate)) {
        temp_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create a temporary artifact directory next to " + target_.string());
  }
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;
  ~ArtifactWriter() {
    std::error_code ec;
    if (!committed_) fs::remove_all(temp_, ec);
  }

  fs::path path(const std::string& name) const { return temp_ / name; }
  const fs::path& target() const { return target_; }

  void commit() {
    std::error_code ec;
    if (fs::exists(target_)) {
      fs::path old = temp_;
      old += ".old";
      fs::rename(target_, old);
      fs::rename(temp_, target_);
      fs::remove_all(old, ec);
    } else {
      fs::rename(temp_, target_);
    }
    committed_ = true;
  }

 private:
  fs::path target_, temp_;
  bool committed_ = false;
};

}  // namespace wwlab::io
