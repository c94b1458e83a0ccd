#pragma once

#include "io.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>

namespace nmagg {

enum class Command { run, validate, sweep_eta_r, sweep_kappa, kernel_table };

inline const char* to_string(Command c) {
  switch (c) {
  case Command::run: return "run";
  case Command::validate: return "validate";
  case Command::sweep_eta_r: return "sweep-eta-r";
  case Command::sweep_kappa: return "sweep-kappa";
  case Command::kernel_table: return "kernel-table";
  }
  return "?";
}

struct RunnerOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

/// Exit codes of the command-line runner.
enum ExitCode : int { exit_ok = 0, exit_step_failure = 1, exit_config_error = 2, exit_internal_error = 3 };

/// --out, then NMAGG_OUT, then [output] dir.
inline std::filesystem::path resolve_output_dir(const RunConfig& cfg, const RunnerOverrides& ov) {
  if (ov.out) return *ov.out;
  if (const char* env = std::getenv("NMAGG_OUT"); env && *env) return env;
  return cfg.output.dir;
}

inline void write_failure_record(const std::filesystem::path& path, const FailureRecord& f, const char* what) {
  nlohmann::ordered_json j;
  j["status"] = "failed";
  j["during"] = what;
  j["kind"] = f.kind;
  j["substep"] = f.substep;
  j["step"] = f.step;
  j["t"] = f.t;
  j["message"] = f.message;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

namespace detail {

inline std::string fmt_opt(const std::optional<FailureRecord>& f) { return f ? f->kind + "@" + f->substep : ""; }

inline int run_single_command(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const auto meta = csv_metadata(cfg);
  CsvWriter ts(dir / "timeseries.csv", meta, energy_columns());
  RunOptions opt;
  opt.keep_trajectory = false;
  if (cfg.output.dump_fields == DumpMode::snapshots) {
    opt.on_snapshot = [&](const SimState& s, long step) {
      char prefix[32];
      std::snprintf(prefix, sizeof prefix, "step_%08ld", step);
      dump_state(dir / "fields", prefix, s);
    };
  }
  RunResult r = run_single(cfg.experiment, opt);
  for (const auto& e : r.energy) ts.row(energy_cells(e));
  if (cfg.output.dump_fields != DumpMode::none) dump_state(dir / "fields", "final", r.final_state);

  const EnergyLawResidual res = energy_law_residual(r.energy);
  log << "steps " << r.steps_taken << ", min gap " << r.min_gap << ", mass drift " << r.max_mass_drift
      << ", max |energy-law residual| " << res.max_abs << "\n";
  if (r.failure) {
    write_failure_record(dir / "failure.json", *r.failure, "run");
    log << "failure: " << r.failure->kind << " in substep " << r.failure->substep << " at step " << r.failure->step
        << ": " << r.failure->message << "\n";
    return exit_step_failure;
  }
  return exit_ok;
}

inline int run_eta_command(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const EtaSweepResult r = eta_r_sweep(cfg.experiment);
  const auto meta = csv_metadata(cfg);
  {
    CsvWriter rows(dir / "eta_r_rows.csv", meta,
                   {"eta_r", "metric_nagg", "metric_nmodelh", "min_gap", "mass_drift", "max_energy_residual",
                    "failure"});
    for (const auto& row : r.rows)
      rows.row({format_double(row.eta_r), format_double(row.metric_nagg), format_double(row.metric_nmodelh),
                format_double(row.min_gap), format_double(row.mass_drift), format_double(row.max_energy_residual),
                fmt_opt(row.failure)});
  }
  if (!r.mismatch_rows.empty()) {
    CsvWriter rows(dir / "mismatch_rows.csv", meta, {"eta_r", "mismatch", "metric", "failure"});
    for (const auto& row : r.mismatch_rows)
      rows.row({format_double(row.eta_r), format_double(row.mismatch), format_double(row.metric),
                fmt_opt(row.failure)});
  }
  CsvWriter summary(dir / "summary.csv", meta,
                    {"fitted_slope", "zero_row_metric", "zero_row_nmodelh", "split_visc", "mismatch_c1",
                     "mismatch_c2", "mismatch_r2"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  summary.row({format_double(r.fitted_slope), format_double(r.zero_row_metric), format_double(r.zero_row_nmodelh),
               format_double(r.split_visc), format_double(r.has_mismatch_fit ? r.mismatch_fit.c1 : nan),
               format_double(r.has_mismatch_fit ? r.mismatch_fit.c2 : nan),
               format_double(r.has_mismatch_fit ? r.mismatch_fit.r2 : nan)});
  log << "fitted slope " << r.fitted_slope << ", eta_r = 0 metric " << r.zero_row_metric << "\n";
  for (const auto& row : r.rows)
    if (row.failure) return exit_step_failure;
  return exit_ok;
}

inline int run_kappa_command(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log,
                             bool dynamic) {
  ExperimentSpec spec = cfg.experiment;
  if (spec.sweep.empty()) spec.sweep = {spec.kernel.kappa};
  const KappaSweepResult r = kappa_sweep(spec, dynamic);
  const auto meta = csv_metadata(cfg);
  const char* name = dynamic ? "kappa_rows.csv" : "kernel_table.csv";
  {
    CsvWriter rows(dir / name, meta,
                   {"kappa", "resolved", "e_kappa", "e_0", "rel_gap", "op_gap", "phi_distance", "note"});
    for (const auto& row : r.rows)
      rows.row({format_double(row.kappa), row.resolved ? "true" : "false", format_double(row.functional.e_kappa),
                format_double(row.functional.e_0), format_double(row.functional.rel_gap),
                format_double(row.functional.op_gap), format_double(row.distance),
                row.note.empty() ? fmt_opt(row.failure) : row.note});
  }
  if (dynamic) {
    CsvWriter summary(dir / "summary.csv", meta, {"static_monotone", "dynamic_monotone", "reference_failure"});
    summary.row({r.static_monotone ? "true" : "false", r.dynamic_monotone ? "true" : "false",
                 fmt_opt(r.reference_failure)});
  }
  log << "static gaps monotone: " << (r.static_monotone ? "yes" : "no");
  if (dynamic) log << ", dynamic distances monotone: " << (r.dynamic_monotone ? "yes" : "no");
  log << "\n";
  if (r.reference_failure) return exit_step_failure;
  return exit_ok;
}

} // namespace detail

/// Runs one CLI command against a config file. Diagnostics go to `log`.
inline int run_command(Command cmd, const std::filesystem::path& config_path, const RunnerOverrides& ov,
                       std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = parse_config_text([&] {
      std::ifstream in(config_path);
      if (!in) throw Error("cannot read config file " + config_path.string());
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }());
    if (ov.seed) cfg.experiment.seed = *ov.seed;
    if (ov.threads) cfg.experiment.threads = *ov.threads;
    if (cmd == Command::sweep_eta_r) cfg.experiment.kind = ExperimentKind::eta_r_sweep;
    if (cmd == Command::sweep_kappa || cmd == Command::kernel_table) cfg.experiment.kind = ExperimentKind::kappa_sweep;
    if (cmd == Command::kernel_table && cfg.experiment.sweep.empty()) cfg.experiment.sweep = {cfg.experiment.kernel.kappa};
    validate_spec(cfg.experiment);
  } catch (const ParseError& e) {
    log << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_config_error;
  }
  if (cmd == Command::validate) {
    log << "ok\n";
    return exit_ok;
  }

  const std::filesystem::path dir = resolve_output_dir(cfg, ov);
  try {
    std::filesystem::create_directories(dir);
    write_manifest(dir / "manifest.ini", cfg, to_string(cmd));
    switch (cmd) {
    case Command::run: return detail::run_single_command(cfg, dir, log);
    case Command::sweep_eta_r: return detail::run_eta_command(cfg, dir, log);
    case Command::sweep_kappa: return detail::run_kappa_command(cfg, dir, log, true);
    case Command::kernel_table: return detail::run_kappa_command(cfg, dir, log, false);
    case Command::validate: break;
    }
  } catch (const StepError& e) {
    write_failure_record(dir / "failure.json", FailureRecord{e.kind(), e.substep(), e.what(), e.step(), 0.0},
                         to_string(cmd));
    log << "failure: " << e.kind() << " in substep " << e.substep() << " at step " << e.step() << ": " << e.what()
        << "\n";
    return exit_step_failure;
  } catch (const ValidationError& e) {
    log << "validation error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_internal_error;
  }
  return exit_ok;
}

} // namespace nmagg
