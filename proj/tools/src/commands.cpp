#include "sisyphus_app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <sisyphus/thermometry.hpp>

namespace sisyphus::app {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Tag used in file names, e.g. D-10_U1500.
std::string point_tag(double detuning, double depth) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "D%g_U%g", detuning, depth);
  return buf;
}

void write_header(std::ostream& out, const OutputHeader& h) {
  out << "# sisyphus " << version_string() << "\n";
  out << "# config_hash=" << h.config_hash << "\n";
  out << "# seed=" << h.seed << "\n";
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + dir.string());
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw OutputError("cannot write " + path.string());
  writer(out);
  out.flush();
  if (!out) throw OutputError("error while writing " + path.string());
}

// Writes to the caller's stream and keeps a copy for run.log.
class Log {
 public:
  explicit Log(std::ostream& sink) : sink_(sink) {}
  void line(const std::string& text) {
    sink_ << text << "\n";
    sink_.flush();
    copy_ << text << "\n";
  }
  std::string text() const { return copy_.str(); }

 private:
  std::ostream& sink_;
  std::ostringstream copy_;
};

constexpr char kAxes[3] = {'x', 'y', 'z'};

struct PlaneAxes {
  int u = 0;
  int v = 2;
  int normal = 1;
};

PlaneAxes plane_axes(const std::string& plane) {
  if (plane == "xz") return {0, 2, 1};
  if (plane == "yz") return {1, 2, 0};
  if (plane == "xy") return {0, 1, 2};
  throw ConfigError("unknown scan plane " + plane);
}

// Local minima of a 1D profile, refined by a parabola through three samples.
// End points count when they lie below their only neighbour.
std::vector<std::pair<double, double>> profile_minima(const std::vector<double>& f, double step) {
  std::vector<std::pair<double, double>> out;
  if (f.size() >= 2 && f[0] < f[1]) out.emplace_back(0.0, f[0]);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    if (f[i] < f[i - 1] && f[i] <= f[i + 1]) {
      const double curv = f[i - 1] - 2.0 * f[i] + f[i + 1];
      const double shift = curv > 0 ? 0.5 * (f[i - 1] - f[i + 1]) / curv : 0.0;
      const double value = f[i] - 0.25 * (f[i - 1] - f[i + 1]) * shift;
      out.emplace_back((static_cast<double>(i) + shift) * step, value);
    }
  }
  const std::size_t n = f.size();
  if (n >= 2 && f[n - 1] < f[n - 2]) out.emplace_back(static_cast<double>(n - 1) * step, f[n - 1]);
  return out;
}

// Highest point of f on [a, b], parabola-refined.
double profile_maximum(const std::vector<double>& f, std::size_t a, std::size_t b) {
  std::size_t best = a;
  for (std::size_t i = a; i <= b; ++i) {
    if (f[i] > f[best]) best = i;
  }
  if (best == 0 || best + 1 >= f.size()) return f[best];
  const double curv = f[best - 1] - 2.0 * f[best] + f[best + 1];
  if (!(curv < 0)) return f[best];
  const double shift = 0.5 * (f[best - 1] - f[best + 1]) / curv;
  return f[best] - 0.25 * (f[best - 1] - f[best + 1]) * shift;
}

struct AxisGeometry {
  double spacing = 0;
  double barrier = 0;
};

AxisGeometry axis_geometry(const std::vector<double>& f, double step, std::size_t origin, const char* name) {
  const auto minima = profile_minima(f, step);
  if (minima.size() < 2) throw std::runtime_error(std::string("scan resolves fewer than two minima along ") + name);
  AxisGeometry g;
  g.spacing = (minima.back().first - minima.front().first) / static_cast<double>(minima.size() - 1);

  // Barrier between the global minimum and each neighbouring minimum.
  double barrier = std::numeric_limits<double>::infinity();
  const auto o = static_cast<double>(origin) * step;
  for (std::size_t k = 0; k < minima.size(); ++k) {
    if (std::abs(minima[k].first - o) > 0.5 * step) continue;
    const double base = minima[k].second;
    if (k > 0) {
      const auto a = static_cast<std::size_t>(std::floor(minima[k - 1].first / step));
      barrier = std::min(barrier, profile_maximum(f, a, origin) - base);
    }
    if (k + 1 < minima.size()) {
      const auto b = static_cast<std::size_t>(std::ceil(minima[k + 1].first / step));
      barrier = std::min(barrier, profile_maximum(f, origin, std::min(b, f.size() - 1)) - base);
    }
  }
  if (!std::isfinite(barrier)) throw std::runtime_error(std::string("global minimum is not interior along ") + name);
  g.barrier = barrier;
  return g;
}

}  // namespace

std::string version_string() { return SISYPHUS_VERSION; }

FieldScan field_scan(const BeamConfig& beams, const ScanSection& options) {
  const Lattice lattice(beams);
  const PlaneAxes ax = plane_axes(options.plane);
  const LatticeConstants a = lattice_constants(beams.theta, kTwoPi);
  const double constant[3] = {a.a_xy, a.a_xy, a.a_z};

  FieldScan scan;
  scan.plane = options.plane;
  scan.levels = options.all_levels ? lattice.dim() : 1;
  scan.lattice_u = constant[ax.u];
  scan.lattice_v = constant[ax.v];
  scan.step_u = scan.lattice_u / options.points_per_lattice_constant;
  scan.step_v = scan.lattice_v / options.points_per_lattice_constant;
  scan.nu = options.cells * options.points_per_lattice_constant + 1;
  scan.nv = options.cells * options.points_per_lattice_constant + 1;
  scan.points.reserve(static_cast<std::size_t>(scan.nu * scan.nv));
  scan.potentials.reserve(scan.points.capacity());
  for (int iv = 0; iv < scan.nv; ++iv) {
    for (int iu = 0; iu < scan.nu; ++iu) {
      Vec3 r = Vec3::Zero();
      r[ax.u] = iu * scan.step_u;
      r[ax.v] = iv * scan.step_v;
      r[ax.normal] = options.offset_over_lambda * kTwoPi;
      const AdiabaticFrame frame = diagonalize(lattice, r);
      std::vector<double> values(static_cast<std::size_t>(scan.levels));
      for (int m = 0; m < scan.levels; ++m) values[static_cast<std::size_t>(m)] = frame.potential(m);
      scan.points.push_back(r);
      scan.potentials.push_back(std::move(values));
    }
  }
  return scan;
}

ScanGeometry analyze_scan(const FieldScan& scan) {
  int bu = 0;
  int bv = 0;
  ScanGeometry g;
  g.highest = -std::numeric_limits<double>::infinity();
  bool first = true;
  for (int iv = 0; iv < scan.nv; ++iv) {
    for (int iu = 0; iu < scan.nu; ++iu) {
      g.highest = std::max(g.highest, scan.lowest(iu, iv));
      // Interior points only, so the reference well has neighbours on both sides.
      if (iu == 0 || iv == 0 || iu + 1 == scan.nu || iv + 1 == scan.nv) continue;
      if (first || scan.lowest(iu, iv) < scan.lowest(bu, bv)) {
        bu = iu;
        bv = iv;
        first = false;
      }
    }
  }
  if (first) throw std::runtime_error("scan too small to locate an interior minimum");
  std::vector<double> row(static_cast<std::size_t>(scan.nu));
  for (int iu = 0; iu < scan.nu; ++iu) row[static_cast<std::size_t>(iu)] = scan.lowest(iu, bv);
  std::vector<double> col(static_cast<std::size_t>(scan.nv));
  for (int iv = 0; iv < scan.nv; ++iv) col[static_cast<std::size_t>(iv)] = scan.lowest(bu, iv);

  const AxisGeometry u = axis_geometry(row, scan.step_u, static_cast<std::size_t>(bu), "the first scan axis");
  const AxisGeometry v = axis_geometry(col, scan.step_v, static_cast<std::size_t>(bv), "the second scan axis");
  g.spacing_u = u.spacing;
  g.spacing_v = v.spacing;
  g.barrier_u = u.barrier;
  g.barrier_v = v.barrier;
  g.barrier_ratio = u.barrier / v.barrier;
  return g;
}

void write_scan(std::ostream& out, const FieldScan& scan, const OutputHeader& header) {
  write_header(out, header);
  out << "# plane=" << scan.plane << "\n";
  out << "x_over_lambda,y_over_lambda,z_over_lambda";
  for (int m = 0; m < scan.levels; ++m) out << ",U_over_Er_" << m;
  out << "\n";
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const Vec3& r = scan.points[i];
    out << num(r[0] / kTwoPi) << ',' << num(r[1] / kTwoPi) << ',' << num(r[2] / kTwoPi);
    for (const double u : scan.potentials[i]) out << ',' << num(u);
    out << "\n";
  }
}

void write_records(std::ostream& out, const std::vector<RecordRow>& rows, const OutputHeader& header) {
  write_header(out, header);
  out << "detuning_Gamma,U0_Er,axis,T_uK,T_err_uK,method\n";
  for (const auto& r : rows) {
    out << num(r.detuning) << ',' << num(r.depth) << ',' << r.axis << ',' << num(r.temperature_uK) << ','
        << num(r.error_uK) << ',' << r.method << "\n";
  }
}

int cmd_field_scan(const RunConfig& config, std::ostream& sink) {
  Log log(sink);
  const fs::path dir(config.output_directory);
  ensure_directory(dir);
  const OutputHeader header{config_hash(config), config.simulation.seed};
  const FieldScan scan = field_scan(config.scan_beams(), config.scan);
  write_file(dir / "scan.csv", [&](std::ostream& out) { write_scan(out, scan, header); });
  log.line("field-scan: " + std::to_string(scan.points.size()) + " points in the " + scan.plane + " plane");
  try {
    const ScanGeometry g = analyze_scan(scan);
    const double lambda = kTwoPi;
    log.line("minimum spacing: " + num(g.spacing_u / lambda) + " lambda, " + num(g.spacing_v / lambda) + " lambda");
    log.line("barriers (E_R): " + num(g.barrier_u) + ", " + num(g.barrier_v) + "; ratio " + num(g.barrier_ratio));
  } catch (const std::runtime_error& e) {
    log.line(std::string("scan geometry unavailable: ") + e.what());
  }
  return kSuccess;
}

namespace {

struct PointResult {
  EnsembleResult ensemble;
  std::array<TemperatureEstimate, 3> tof{};
  bool tof_ok = false;
};

void add_fits(std::ostream& out, const std::string& label, const std::string& method,
              const std::array<std::vector<ScalingPoint>, 3>& points, Log& log) {
  for (std::size_t a = 0; a < 3; ++a) {
    if (points[a].size() < 3) continue;
    const ScalingFit f = linear_scaling_fit(points[a]);
    out << label << ',' << kAxes[a] << ',' << method << ',' << num(f.intercept) << ',' << num(f.intercept_error) << ','
        << num(f.slope) << ',' << num(f.slope_error) << ',' << num(f.reduced_chi2) << ',' << f.points << "\n";
    log.line("fit " + method + " detuning " + label + " axis " + kAxes[a] + ": xi = " + num(f.slope) + " +- " +
             num(f.slope_error) + " nK/E_R, T0 = " + num(f.intercept) + " uK");
  }
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& sink) {
  Log log(sink);
  if (config.thermometry.tau_ms.size() < 2 || config.thermometry.tau_ms[0] == config.thermometry.tau_ms[1]) {
    log.line("error: thermometry.tau_ms needs two distinct expansion times");
    return kConfigError;
  }
  const fs::path dir(config.output_directory);
  ensure_directory(dir);
  if (config.thermometry.write_snapshots) ensure_directory(dir / "snapshots");
  const OutputHeader header{config_hash(config), config.simulation.seed};
  write_file(dir / "config.json", [&](std::ostream& out) { out << to_json(config); });

  const double tau1 = config.thermometry.tau_ms[0] * 1e-3;
  const double tau2 = config.thermometry.tau_ms[1] * 1e-3;
  const SimParams base = config.sim_params();
  const SweepPlan plan = config.sweep_plan();
  log.line("run " + version_string() + " config_hash=" + header.config_hash + " seed=" + std::to_string(base.seed));

  std::vector<PointResult> results;
  for (const double detuning : plan.detunings) {
    for (const double depth : plan.depths) {
      BeamConfig beams = BeamConfig::for_depth(depth, detuning, plan.transition);
      beams.theta = plan.theta;
      const Lattice lattice(beams);
      SimParams p = base;
      p.seed = record_seed(base.seed, detuning, depth);
      PointResult pr;
      pr.ensemble = run_ensemble(lattice, p);
      auto& rec = pr.ensemble.record;
      try {
        const TimeOfFlight tof = time_of_flight(pr.ensemble.snapshot, tau1, tau2, config.thermometry.gravity_m_per_s2);
        pr.tof = tof.temperature;
        pr.tof_ok = true;
        for (std::size_t a = 0; a < 3; ++a) {
          if (!tof.early[a].acceptable() || !tof.late[a].acceptable()) {
            rec.flags.push_back(std::string("tof_fit_") + kAxes[a]);
          }
        }
      } catch (const std::exception& e) {
        rec.flags.push_back("tof_invalid");
        log.line(std::string("  time-of-flight failed: ") + e.what());
      }
      if (config.thermometry.write_snapshots) {
        const fs::path file = dir / "snapshots" / ("snapshot_" + point_tag(detuning, depth) + ".csv");
        try {
          write_snapshot(file, pr.ensemble.snapshot);
        } catch (const std::runtime_error& e) {
          throw OutputError(e.what());
        }
      }
      const auto& d = rec.diagnostics;
      std::string flags;
      for (const auto& f : rec.flags) flags += " " + f;
      log.line("detuning " + num(detuning) + " U0 " + num(depth) + ": T = (" + num(rec.temperature[0] * 1e6) + ", " +
               num(rec.temperature[1] * 1e6) + ", " + num(rec.temperature[2] * 1e6) + ") uK, E_K/U0 per axis " +
               num(d.kinetic_per_axis_over_depth) + ", dt " + num(d.dt) + (flags.empty() ? "" : ", flags:" + flags));
      results.push_back(std::move(pr));
    }
  }

  std::vector<RecordRow> rows;
  for (const auto& pr : results) {
    const auto& rec = pr.ensemble.record;
    for (std::size_t a = 0; a < 3; ++a) {
      rows.push_back({rec.detuning, rec.depth, kAxes[a], rec.temperature[a] * 1e6, rec.temperature_error[a] * 1e6,
                      "direct"});
    }
    if (!pr.tof_ok) continue;
    for (std::size_t a = 0; a < 3; ++a) {
      rows.push_back({rec.detuning, rec.depth, kAxes[a], pr.tof[a].value * 1e6, pr.tof[a].error * 1e6, "two_time"});
    }
  }
  write_file(dir / "records.csv", [&](std::ostream& out) { write_records(out, rows, header); });

  write_file(dir / "diagnostics.csv", [&](std::ostream& out) {
    write_header(out, header);
    out << "detuning_Gamma,U0_Er,dt_hbar_over_Er,equilibration_steps,averaging_steps,refinements,guard_trips,"
           "max_jump_probability,jumps_per_atom,EK_axis_over_U0,EK_total_over_U0,kinetic_drift,kinetic_drift_err,"
           "clip_alarms,worst_clip,alignment_fallbacks,aborted_atoms,flags\n";
    for (const auto& pr : results) {
      const auto& rec = pr.ensemble.record;
      const auto& d = rec.diagnostics;
      std::string flags;
      for (const auto& f : rec.flags) flags += (flags.empty() ? "" : ";") + f;
      out << num(rec.detuning) << ',' << num(rec.depth) << ',' << num(d.dt) << ',' << d.equilibration_steps << ','
          << d.averaging_steps << ',' << d.refinements << ',' << d.guard_trips << ','
          << num(d.max_departure_probability) << ',' << num(d.jumps_per_atom) << ','
          << num(d.kinetic_per_axis_over_depth) << ',' << num(d.kinetic_total_over_depth) << ','
          << num(d.kinetic_drift) << ',' << num(d.kinetic_drift_error) << ',' << d.clip_alarms << ','
          << num(d.worst_clip) << ',' << d.alignment_fallbacks << ',' << d.aborted_atoms << ','
          << (flags.empty() ? "none" : flags) << "\n";
    }
  });

  write_file(dir / "scaling.csv", [&](std::ostream& out) {
    write_header(out, header);
    out << "detuning_Gamma,axis,method,T0_uK,T0_err_uK,xi_nK_per_Er,xi_err_nK_per_Er,reduced_chi2,points\n";
    std::map<std::string, std::array<std::vector<ScalingPoint>, 3>> pooled;
    for (const double detuning : plan.detunings) {
      std::map<std::string, std::array<std::vector<ScalingPoint>, 3>> per;
      for (const auto& pr : results) {
        const auto& rec = pr.ensemble.record;
        if (rec.detuning != detuning) continue;
        for (std::size_t a = 0; a < 3; ++a) {
          if (std::isfinite(rec.temperature[a])) {
            const ScalingPoint sp{rec.depth, rec.temperature[a], rec.temperature_error[a]};
            per["direct"][a].push_back(sp);
            pooled["direct"][a].push_back(sp);
          }
          if (pr.tof_ok) {
            const ScalingPoint sp{rec.depth, pr.tof[a].value, pr.tof[a].error};
            per["two_time"][a].push_back(sp);
            pooled["two_time"][a].push_back(sp);
          }
        }
      }
      for (const auto& [method, pts] : per) add_fits(out, num(detuning), method, pts, log);
    }
    if (plan.detunings.size() > 1) {
      for (const auto& [method, pts] : pooled) add_fits(out, "pooled", method, pts, log);
    }
  });

  bool flagged = false;
  for (const auto& pr : results) flagged = flagged || pr.ensemble.record.flagged();
  log.line(flagged ? "finished with flagged records" : "finished");
  write_file(dir / "run.log", [&](std::ostream& out) { out << log.text(); });
  return flagged ? kFlagged : kSuccess;
}

int cmd_analyze(const RunConfig& config, const fs::path& snapshot_dir, const std::vector<double>& tau_ms,
                std::ostream& sink) {
  Log log(sink);
  if (tau_ms.size() < 2) {
    log.line("error: degenerate input: two expansion times are required, got " + std::to_string(tau_ms.size()));
    return kConfigError;
  }
  if (!fs::is_directory(snapshot_dir)) {
    log.line("error: snapshot directory " + snapshot_dir.string() + " does not exist");
    return kConfigError;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(snapshot_dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("snapshot_", 0) == 0 && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    log.line("error: no snapshot_*.csv files in " + snapshot_dir.string());
    return kConfigError;
  }

  const double tau1 = tau_ms[0] * 1e-3;
  const double tau2 = tau_ms[1] * 1e-3;
  std::vector<Snapshot> snapshots;
  for (const auto& f : files) {
    try {
      snapshots.push_back(read_snapshot(f));
    } catch (const std::runtime_error& e) {
      log.line(std::string("error: ") + e.what() + " (" + f.filename().string() + ")");
      return kConfigError;
    }
  }

  std::vector<RecordRow> rows;
  bool flagged = false;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const Snapshot& s = snapshots[k];
    TimeOfFlight tof;
    try {
      tof = time_of_flight(s, tau1, tau2, config.thermometry.gravity_m_per_s2);
    } catch (const DegenerateInput& e) {
      log.line(std::string("error: degenerate input: ") + e.what());
      return kConfigError;
    } catch (const InvalidMeasurement& e) {
      log.line(std::string("error: invalid measurement in ") + files[k].filename().string() + ": " + e.what());
      return kConfigError;
    }
    for (std::size_t a = 0; a < 3; ++a) {
      const TemperatureEstimate direct = direct_temperature(s, static_cast<int>(a));
      rows.push_back({s.detuning_gamma, s.depth_recoil, kAxes[a], direct.value * 1e6, direct.error * 1e6, "direct"});
    }
    for (std::size_t a = 0; a < 3; ++a) {
      rows.push_back({s.detuning_gamma, s.depth_recoil, kAxes[a], tof.temperature[a].value * 1e6,
                      tof.temperature[a].error * 1e6, "two_time"});
      if (!tof.early[a].acceptable() || !tof.late[a].acceptable()) {
        flagged = true;
        log.line(files[k].filename().string() + ": Gaussian fit rejected on axis " + kAxes[a]);
      }
    }
  }

  const fs::path dir(config.output_directory);
  ensure_directory(dir);
  const OutputHeader header{config_hash(config), config.simulation.seed};
  write_file(dir / "analysis.csv", [&](std::ostream& out) {
    write_header(out, header);
    out << "# tau_ms=" << num(tau_ms[0]) << "," << num(tau_ms[1]) << "\n";
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
      out << "# snapshot=" << files[k].filename().string() << " params_hash=" << snapshots[k].params_hash
          << " seed=" << snapshots[k].seed << "\n";
    }
    out << "detuning_Gamma,U0_Er,axis,T_uK,T_err_uK,method\n";
    for (const auto& r : rows) {
      out << num(r.detuning) << ',' << num(r.depth) << ',' << r.axis << ',' << num(r.temperature_uK) << ','
          << num(r.error_uK) << ',' << r.method << "\n";
    }
  });
  log.line("analyzed " + std::to_string(snapshots.size()) + " snapshot(s)");
  return flagged ? kFlagged : kSuccess;
}

}  // namespace sisyphus::app
