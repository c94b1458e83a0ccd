#pragma once

#include "experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nmagg {

enum class DumpMode { none, final_state, snapshots };

inline const char* to_string(DumpMode m) {
  switch (m) {
  case DumpMode::none: return "none";
  case DumpMode::final_state: return "final";
  case DumpMode::snapshots: return "snapshots";
  }
  return "?";
}

struct OutputSpec {
  std::string dir = "nmagg_out";
  DumpMode dump_fields = DumpMode::final_state;
};

struct RunConfig {
  ExperimentSpec experiment;
  OutputSpec output;
};

/// Text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

struct Cursor {
  std::size_t line;
  std::string section;
  std::string key;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(key + ": " + msg, line, section); }
};

inline double to_double(const std::string& v, const Cursor& c) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) c.fail("expected a number, got '" + v + "'");
  return out;
}

template <class Int>
inline Int to_int(const std::string& v, const Cursor& c) {
  Int out = 0;
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) c.fail("expected an integer, got '" + v + "'");
  return out;
}

inline std::vector<double> to_list(const std::string& v, const Cursor& c) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), c));
  return out;
}

inline std::string from_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out;
}

inline std::optional<double> to_auto(const std::string& v, const Cursor& c, const char* word) {
  if (v == word) return std::nullopt;
  return to_double(v, c);
}

inline std::string from_auto(const std::optional<double>& v, const char* word) {
  return v ? format_double(*v) : std::string(word);
}

/// One config key: how to read it into a RunConfig and how to write it back.
struct Field {
  const char* section;
  const char* key;
  void (*read)(RunConfig&, const std::string&, const Cursor&);
  std::string (*write)(const RunConfig&);
};

#define NMAGG_DOUBLE(sec, name, member)                                                                      \
  Field {                                                                                                    \
    sec, name, [](RunConfig& r, const std::string& v, const Cursor& c) { r.member = to_double(v, c); },      \
        [](const RunConfig& r) { return format_double(r.member); }                                           \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NMAGG_DOUBLE("physics", "rho1", experiment.phys.rho1),
      NMAGG_DOUBLE("physics", "rho2", experiment.phys.rho2),
      NMAGG_DOUBLE("physics", "eta1", experiment.phys.eta1),
      NMAGG_DOUBLE("physics", "eta2", experiment.phys.eta2),
      NMAGG_DOUBLE("physics", "eta_r", experiment.phys.eta_r),
      NMAGG_DOUBLE("physics", "cd", experiment.phys.cd),
      NMAGG_DOUBLE("physics", "ca", experiment.phys.ca),
      NMAGG_DOUBLE("physics", "c0", experiment.phys.c0),
      NMAGG_DOUBLE("physics", "mobility", experiment.phys.mobility),
      NMAGG_DOUBLE("physics", "sigma", experiment.phys.sigma),
      NMAGG_DOUBLE("physics", "eps_int", experiment.phys.eps_int),

      NMAGG_DOUBLE("potential", "theta", experiment.pot.theta),
      NMAGG_DOUBLE("potential", "theta_c", experiment.pot.theta_c),
      {"potential", "reg_epsilon",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.pot.reg_epsilon = to_auto(v, c, "none"); },
       [](const RunConfig& r) { return from_auto(r.experiment.pot.reg_epsilon, "none"); }},
      {"potential", "reg_order",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.pot.reg_order = to_int<int>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.pot.reg_order); }},

      {"kernel", "family",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         if (v == "disk")
           r.experiment.kernel.family = KernelFamily::disk_profile;
         else if (v == "custom")
           r.experiment.kernel.family = KernelFamily::custom_profile;
         else
           c.fail("expected disk or custom, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.experiment.kernel.family)); }},
      NMAGG_DOUBLE("kernel", "kappa", experiment.kernel.kappa),
      {"kernel", "operator",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         if (v == "nonlocal")
           r.experiment.kernel.op = InterfaceKind::nonlocal;
         else if (v == "local")
           r.experiment.kernel.op = InterfaceKind::local;
         else
           c.fail("expected nonlocal or local, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.experiment.kernel.op)); }},
      {"kernel", "profile",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.kernel.profile.samples = to_list(v, c); },
       [](const RunConfig& r) { return from_list(r.experiment.kernel.profile.samples); }},

      NMAGG_DOUBLE("scheme", "dt", experiment.scheme.dt),
      NMAGG_DOUBLE("scheme", "newton_tol", experiment.scheme.newton_tol),
      {"scheme", "newton_max_iter",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.scheme.newton_max_iter = to_int<int>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.scheme.newton_max_iter); }},
      {"scheme", "stab_s",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.scheme.stab_s = to_auto(v, c, "auto"); },
       [](const RunConfig& r) { return from_auto(r.experiment.scheme.stab_s, "auto"); }},
      {"scheme", "split_visc",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.scheme.split_visc = to_auto(v, c, "auto"); },
       [](const RunConfig& r) { return from_auto(r.experiment.scheme.split_visc, "auto"); }},
      {"scheme", "split_ang",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.scheme.split_ang = to_auto(v, c, "auto"); },
       [](const RunConfig& r) { return from_auto(r.experiment.scheme.split_ang, "auto"); }},
      NMAGG_DOUBLE("scheme", "cfl_max", experiment.scheme.cfl_max),
      {"scheme", "nonlocal_split",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         if (v == "implicit")
           r.experiment.scheme.nonlocal_split = NonlocalSplit::implicit;
         else if (v == "explicit_convolution")
           r.experiment.scheme.nonlocal_split = NonlocalSplit::explicit_convolution;
         else
           c.fail("expected implicit or explicit_convolution, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.experiment.scheme.nonlocal_split)); }},

      {"grid", "n",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.grid.n = to_int<std::size_t>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.grid.n); }},
      NMAGG_DOUBLE("grid", "L", experiment.grid.length),

      {"experiment", "kind",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         if (v == "single_run")
           r.experiment.kind = ExperimentKind::single_run;
         else if (v == "eta_r_sweep")
           r.experiment.kind = ExperimentKind::eta_r_sweep;
         else if (v == "kappa_sweep")
           r.experiment.kind = ExperimentKind::kappa_sweep;
         else
           c.fail("expected single_run, eta_r_sweep or kappa_sweep, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.experiment.kind)); }},
      NMAGG_DOUBLE("experiment", "t_final", experiment.t_final),
      {"experiment", "sweep",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.sweep = to_list(v, c); },
       [](const RunConfig& r) { return from_list(r.experiment.sweep); }},
      {"experiment", "mismatch",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.mismatch = to_list(v, c); },
       [](const RunConfig& r) { return from_list(r.experiment.mismatch); }},
      {"experiment", "mismatch_eta_r",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.mismatch_eta_r = to_list(v, c); },
       [](const RunConfig& r) { return from_list(r.experiment.mismatch_eta_r); }},
      {"experiment", "initial",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         auto& rec = r.experiment.init.recipe;
         if (v == "spinodal" || v == "random")
           rec = InitialRecipe::spinodal;
         else if (v == "smooth")
           rec = InitialRecipe::smooth;
         else if (v == "quiescent")
           rec = InitialRecipe::quiescent;
         else if (v == "taylor_green")
           rec = InitialRecipe::taylor_green;
         else
           c.fail("expected spinodal, smooth, quiescent or taylor_green, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.experiment.init.recipe)); }},
      NMAGG_DOUBLE("experiment", "m0", experiment.init.m0),
      NMAGG_DOUBLE("experiment", "amplitude", experiment.init.amplitude),
      NMAGG_DOUBLE("experiment", "delta0", experiment.init.delta0),
      NMAGG_DOUBLE("experiment", "u_norm", experiment.init.u_norm),
      NMAGG_DOUBLE("experiment", "omega0", experiment.init.omega0),
      {"experiment", "seed",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.seed = to_int<std::uint64_t>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.seed); }},

      {"output", "dir", [](RunConfig& r, const std::string& v, const Cursor&) { r.output.dir = v; },
       [](const RunConfig& r) { return r.output.dir; }},
      {"output", "snapshot_every",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.snapshot_every = to_int<int>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.snapshot_every); }},
      {"output", "dump_fields",
       [](RunConfig& r, const std::string& v, const Cursor& c) {
         if (v == "none" || v == "false")
           r.output.dump_fields = DumpMode::none;
         else if (v == "final" || v == "true")
           r.output.dump_fields = DumpMode::final_state;
         else if (v == "snapshots")
           r.output.dump_fields = DumpMode::snapshots;
         else
           c.fail("expected none, final or snapshots, got '" + v + "'");
       },
       [](const RunConfig& r) { return std::string(to_string(r.output.dump_fields)); }},
      {"output", "threads",
       [](RunConfig& r, const std::string& v, const Cursor& c) { r.experiment.threads = to_int<int>(v, c); },
       [](const RunConfig& r) { return std::to_string(r.experiment.threads); }},
  };
  return table;
}

#undef NMAGG_DOUBLE

} // namespace detail

/// Parses INI text without running the validation gates.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  const auto& table = detail::fields();
  std::set<std::string> sections;
  for (const auto& f : table) sections.insert(f.section);
  std::set<std::pair<std::string, std::string>> seen;

  std::istringstream in(text);
  std::string raw;
  detail::Cursor cur{0, "", ""};
  while (std::getline(in, raw)) {
    ++cur.line;
    cur.key.clear();
    std::string line = raw;
    if (const auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header '" + line + "'", cur.line, cur.section);
      cur.section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (!sections.count(cur.section)) throw ParseError("unknown section", cur.line, cur.section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", cur.line, cur.section);
    cur.key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (cur.section.empty()) cur.fail("key outside any section");
    const auto it = std::find_if(table.begin(), table.end(), [&](const detail::Field& f) {
      return cur.section == f.section && cur.key == f.key;
    });
    if (it == table.end()) cur.fail("unknown key");
    if (!seen.insert({cur.section, cur.key}).second) cur.fail("duplicate key");
    it->read(cfg, value, cur);
  }
  return cfg;
}

/// Parses and runs every gate before returning.
inline RunConfig parse_config_string(const std::string& text) {
  RunConfig cfg = parse_config_text(text);
  validate_spec(cfg.experiment);
  return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str());
}

/// Writes every key, so that parse_config_text(emit_config(c)) == c.
inline std::string emit_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : detail::fields()) {
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += std::string(f.key) + " = " + f.write(cfg) + "\n";
  }
  return out;
}

} // namespace nmagg
