#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <sisyphus/langevin.hpp>

namespace sisyphus::app {

/// Raised for schema violations: unknown keys, wrong types, invalid values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fields are kept in the units of the file so that a parse/serialize cycle
// is exact; conversion to SI happens in the accessors of RunConfig.

struct TransitionSection {
  double jg = 4;
  double je = 5;
  double wavelength_nm = 852.347;
  double linewidth_over_2pi_MHz = 5.2;
  double saturation_irradiance_W_per_m2 = 11.0;
  double mass_amu = 132.905451931;
};

struct SimulationSection {
  int atoms = 300;
  double dt_hbar_over_Er = 0;  // 0: automatic
  double equilibration_over_Gamma_prime = 4000;
  double averaging_over_Gamma_prime = 2000;
  double initial_temperature_uK = 3;
  std::uint64_t seed = 1;
  int snapshot_samples_per_atom = 10;
  int max_dt_refinements = 3;
};

struct ThermometrySection {
  std::vector<double> tau_ms{12.0, 35.0};
  double gravity_m_per_s2 = 0;
  bool write_snapshots = true;
};

struct ScanSection {
  std::string plane = "xz";
  int points_per_lattice_constant = 64;
  /// Lattice constants covered along each in-plane axis.
  int cells = 2;
  /// Position of the plane along its normal.
  double offset_over_lambda = 0;
  bool all_levels = false;
  double detuning_Gamma = -10;
  double depth_Er = 1000;
};

struct RunConfig {
  TransitionSection transition;
  double theta_deg = 45;
  std::vector<double> detunings_Gamma{-10.0};
  std::vector<double> depths_Er{500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0};
  SimulationSection simulation;
  ThermometrySection thermometry;
  ScanSection scan;
  std::string output_directory = "sisyphus_out";
  int workers = 1;

  Transition physical_transition() const;
  double theta() const;
  SimParams sim_params() const;
  SweepPlan sweep_plan() const;
  BeamConfig scan_beams() const;

  /// Throws ConfigError when any value is out of range.
  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical JSON with sorted keys; parse_config(to_json(c)) reproduces c.
std::string to_json(const RunConfig& config);
/// Hash of the canonical JSON with the worker count and output location
/// removed, so it identifies the physics and the seed only.
std::string config_hash(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace sisyphus::app
