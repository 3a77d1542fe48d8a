#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sisyphus_app/config.hpp"

namespace sisyphus::app {

enum ExitCode : int { kSuccess = 0, kIoError = 1, kFlagged = 2, kConfigError = 3 };

/// Raised when an output file cannot be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowest (or every) adiabatic potential sampled on a plane.
struct FieldScan {
  std::string plane;
  int nu = 0;  // points along the first in-plane axis
  int nv = 0;  // points along the second
  int levels = 1;
  double step_u = 0;  // 1/k
  double step_v = 0;
  double lattice_u = 0;  // lattice constant along each axis, 1/k
  double lattice_v = 0;
  std::vector<Vec3> points;              // index iv * nu + iu, 1/k
  std::vector<std::vector<double>> potentials;  // per point, ascending, E_R

  double lowest(int iu, int iv) const { return potentials[static_cast<std::size_t>(iv * nu + iu)][0]; }
};

FieldScan field_scan(const BeamConfig& beams, const ScanSection& options);

/// Geometry recovered from a scan of the lowest potential.
struct ScanGeometry {
  double spacing_u = 0;  // spacing of minima along each in-plane axis, 1/k
  double spacing_v = 0;
  double barrier_u = 0;  // E_R
  double barrier_v = 0;
  double barrier_ratio = 0;  // barrier_u / barrier_v
  double highest = 0;        // largest scanned value of the lowest potential
};

/// Throws std::runtime_error when the scan does not contain two minima per axis.
ScanGeometry analyze_scan(const FieldScan& scan);

struct OutputHeader {
  std::string config_hash;
  std::uint64_t seed = 0;
};

void write_scan(std::ostream& out, const FieldScan& scan, const OutputHeader& header);

/// One row of records.csv.
struct RecordRow {
  double detuning = 0;
  double depth = 0;
  char axis = 'x';
  double temperature_uK = 0;
  double error_uK = 0;
  std::string method;
};

void write_records(std::ostream& out, const std::vector<RecordRow>& rows, const OutputHeader& header);

int cmd_field_scan(const RunConfig& config, std::ostream& log);
int cmd_run(const RunConfig& config, std::ostream& log);
/// Two-time analysis of every snapshot in `snapshot_dir` with the first two
/// delays of `tau_ms`; writes analysis.csv to the configured output directory.
int cmd_analyze(const RunConfig& config, const std::filesystem::path& snapshot_dir, const std::vector<double>& tau_ms,
                std::ostream& log);

std::string version_string();

}  // namespace sisyphus::app
