#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sisyphus/lattice_field.hpp"

namespace sisyphus {

struct SnapshotRow {
  std::uint64_t atom = 0;
  Vec3 position = Vec3::Zero();  // 1/k
  Vec3 momentum = Vec3::Zero();  // hbar k
  int level = 0;
};

/// Phase-space sample of an ensemble in internal units.
///
/// Text format: '#'-prefixed `key=value` header lines carrying the unit
/// conversions, seed and parameter hash, then a CSV table with columns
/// atom,x,y,z,px,py,pz,m. An atom may appear once per sample time.
struct Snapshot {
  std::uint64_t seed = 0;
  std::string params_hash;
  double length_unit_m = 0;         // 1/k
  double momentum_unit_kg_m_s = 0;  // hbar k
  double mass_kg = 0;
  double wavelength_m = 0;
  double detuning_gamma = 0;
  double depth_recoil = 0;
  double time_internal = 0;
  int samples_per_atom = 1;
  std::vector<SnapshotRow> rows;

  /// Velocity along `axis` in m/s for row `i`.
  double velocity(std::size_t i, int axis) const;
  double position_m(std::size_t i, int axis) const;
};

void write_snapshot(std::ostream& out, const Snapshot& snapshot);
void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);
/// Throws std::runtime_error on a missing or malformed file.
Snapshot read_snapshot(std::istream& in);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace sisyphus
