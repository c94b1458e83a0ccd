#pragma once

#include "config.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace nmagg {

inline constexpr const char* kVersion = "0.1.0";

/// CSV with "# key = value" comment lines ahead of the column header.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& meta,
            const std::vector<std::string>& columns)
      : out_(path), columns_(columns.size()) {
    if (!out_) throw Error("cannot write " + path.string());
    for (const auto& [k, v] : meta) out_ << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  /// Cells are written verbatim; use format_double for numbers.
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error("csv: row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i]);
    out_ << "\n";
  }

private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  std::ofstream out_;
  std::size_t columns_;
};

/// Parameter record written at the top of every CSV.
inline std::vector<std::pair<std::string, std::string>> csv_metadata(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> meta{{"nmagg_version", kVersion}};
  std::istringstream in(emit_config(cfg));
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    meta.emplace_back(section + "." + line.substr(0, eq), line.substr(eq + 3));
  }
  meta.emplace_back("units", "nondimensional");
  return meta;
}

inline std::vector<std::string> energy_columns() {
  return {"t",      "e_kinetic", "e_rotation", "e_nonlocal", "e_potential", "e_total", "d_mu",
          "d_visc", "d_curl",    "d_ang",      "d_total",    "mass",        "phi_max"};
}

inline std::vector<std::string> energy_cells(const EnergyReport& r) {
  return {format_double(r.t),       format_double(r.e_kinetic), format_double(r.e_rotation),
          format_double(r.e_nonlocal), format_double(r.e_potential), format_double(r.e_total),
          format_double(r.d_mu),    format_double(r.d_visc),    format_double(r.d_curl),
          format_double(r.d_ang),   format_double(r.d_total),   format_double(r.mass),
          format_double(r.phi_max)};
}

inline constexpr std::size_t kDumpHeaderBytes = 64;

/// 64-byte header "NMAGG1 <field> <n> <L> <t>", space padded, byte 64 = '\n'.
inline std::string dump_header(const std::string& name, std::size_t n, double length, double t) {
  std::string h = "NMAGG1 " + name + " " + std::to_string(n) + " " + format_double(length) + " " + format_double(t);
  if (h.size() > kDumpHeaderBytes - 1) throw Error("field dump header longer than 63 bytes");
  h.resize(kDumpHeaderBytes - 1, ' ');
  h += '\n';
  return h;
}

namespace detail {

inline void write_le(std::ofstream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
}

} // namespace detail

inline void write_field_dump(const std::filesystem::path& path, const std::string& name, const ScalarField& f,
                             double t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << dump_header(name, f.grid().n(), f.grid().period_length(), t);
  detail::write_le(out, f.values());
}

/// Vector fields are stored component-major: all of u1, then all of u2.
inline void write_field_dump(const std::filesystem::path& path, const std::string& name, const VectorField2& v,
                             double t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << dump_header(name, v.grid().n(), v.grid().period_length(), t);
  detail::write_le(out, v.u1.values());
  detail::write_le(out, v.u2.values());
}

struct FieldDump {
  std::string name;
  std::size_t n = 0;
  double length = 0.0;
  double t = 0.0;
  std::vector<double> values;
};

inline FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::string header(kDumpHeaderBytes, '\0');
  in.read(header.data(), static_cast<std::streamsize>(kDumpHeaderBytes));
  if (!in || header.back() != '\n') throw Error("field dump: truncated header in " + path.string());
  std::istringstream hs(header);
  std::string magic;
  FieldDump d;
  hs >> magic >> d.name >> d.n >> d.length >> d.t;
  if (magic != "NMAGG1" || !hs) throw Error("field dump: bad header in " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) throw Error("field dump: payload is not a whole number of float64 values");
  d.values.resize(bytes.size() / 8);
  for (std::size_t k = 0; k < d.values.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[8 * k + i]) << (8 * i);
    d.values[k] = std::bit_cast<double>(bits);
  }
  return d;
}

/// Writes phi, mu, omega and u of a state as <prefix>_<field>.bin.
inline void dump_state(const std::filesystem::path& dir, const std::string& prefix, const SimState& s) {
  std::filesystem::create_directories(dir);
  write_field_dump(dir / (prefix + "_phi.bin"), "phi", s.phi, s.t);
  write_field_dump(dir / (prefix + "_mu.bin"), "mu", s.mu, s.t);
  write_field_dump(dir / (prefix + "_omega.bin"), "omega", s.omega, s.t);
  write_field_dump(dir / (prefix + "_u.bin"), "u", s.u, s.t);
}

/// The resolved config with version, seed and thread count in front.
inline void write_manifest(const std::filesystem::path& path, const RunConfig& cfg, const std::string& command) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# nmagg " << kVersion << "\n";
  out << "# command = " << command << "\n";
  out << "# seed = " << cfg.experiment.seed << "\n";
  out << "# threads = " << cfg.experiment.threads << "\n";
  out << emit_config(cfg);
}

} // namespace nmagg
