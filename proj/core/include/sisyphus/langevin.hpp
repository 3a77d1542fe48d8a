#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sisyphus/adiabatic.hpp"
#include "sisyphus/philox.hpp"
#include "sisyphus/snapshot.hpp"
#include "sisyphus/thermometry.hpp"

namespace sisyphus {

/// One atom: external degrees of freedom, adiabatic index and private RNG.
struct AtomState {
  std::uint64_t index = 0;
  Vec3 position = Vec3::Zero();  // 1/k
  Vec3 momentum = Vec3::Zero();  // hbar k
  int level = 0;
  Philox4x32 rng;
  std::normal_distribution<double> normal;
  bool aborted = false;

  double uniform() { return rng.uniform(); }
  double gaussian() { return normal(rng); }
};

struct SimParams {
  int atoms = 300;
  /// Internal time step; 0 selects it from the jump and vibration bounds.
  double dt = 0;
  /// Durations in units of 1/Gamma'.
  double equilibration = 4000;
  double averaging = 2000;
  double initial_temperature = 3e-6;  // K
  std::uint64_t seed = 1;
  /// Phase-space samples per atom, spread evenly over the averaging window.
  int snapshot_samples = 10;
  int workers = 1;
  /// Halvings of dt allowed when the one-jump guard trips.
  int max_refinements = 3;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Jump probability per step beyond which two jumps in one step exceed 0.5%.
inline constexpr double kJumpGuard = 0.1;

/// Force and clipped diffusion of one channel, frozen for a single kick.
struct KickChannel {
  Vec3 force = Vec3::Zero();
  ClippedDiffusion diffusion;
};

struct KickOutcome {
  int target = -1;  // -1: no jump
  double departure_probability = 0;
  double clip = 0;
};

/// Draws at most one jump from `rates` (indexed by destination; the entry for
/// the current level is ignored) and applies the matching momentum kick.
/// `channel(n)` supplies the coefficients for destination n, with n equal to
/// the current level meaning the no-jump channel.
template <class ChannelFn>
KickOutcome stochastic_kick(AtomState& atom, const std::array<double, kMaxGroundDim>& rates, int dim, double dt,
                            ChannelFn&& channel) {
  KickOutcome out;
  double total = 0;
  for (int n = 0; n < dim; ++n) {
    if (n != atom.level) total += rates[static_cast<std::size_t>(n)];
  }
  out.departure_probability = total * dt;

  const double r = atom.uniform();
  double acc = 0;
  for (int n = 0; n < dim && out.target < 0; ++n) {
    if (n == atom.level) continue;
    acc += rates[static_cast<std::size_t>(n)] * dt;
    if (r < acc) out.target = n;
  }

  const int key = out.target >= 0 ? out.target : atom.level;
  const KickChannel ch = channel(key);
  // Jump kicks have variance 2D/gamma; continuous noise 2D dt.
  const double scale = out.target >= 0 ? 2.0 / rates[static_cast<std::size_t>(key)] : 2.0 * dt;
  Vec3 z;
  for (int i = 0; i < 3; ++i) z[i] = std::sqrt(scale * ch.diffusion.variances[i]) * atom.gaussian();
  atom.momentum += ch.force * dt + ch.diffusion.axes * z;
  out.clip = ch.diffusion.clip;
  if (out.target >= 0) atom.level = out.target;
  return out;
}

struct StepInfo {
  bool jumped = false;
  int from = 0;
  int to = 0;
  double departure_probability = 0;
  double clip = 0;
  bool fallback = false;
};

/// Velocity-Verlet for the conservative motion on the current adiabatic
/// surface, followed by the jump or continuous kick evaluated at the new
/// position. One diagonalization per step.
class Integrator {
 public:
  Integrator(const Lattice& lattice, double dt, bool stochastic = true);

  /// Diagonalizes at the atom's position; call before the first step.
  void attach(const AtomState& atom);
  StepInfo step(AtomState& atom);

  const AdiabaticFrame& frame() const { return frame_; }
  double dt() const { return dt_; }
  /// |P|^2 + U_m at the attached position (E_R).
  double energy(const AtomState& atom) const;

 private:
  const Lattice* lattice_;
  double dt_;
  bool stochastic_;
  AdiabaticFrame frame_;
};

/// Departure rates of level `from` toward every level (entry `from` is the
/// rate of return to itself).
std::array<double, kMaxGroundDim> departure_rates(const Lattice& lattice, const AdiabaticFrame& frame, int from);

/// Positions uniform over one conventional cell, Maxwellian momenta at the
/// initial temperature, internal state the lowest adiabatic level.
std::vector<AtomState> initialize_ensemble(const Lattice& lattice, const SimParams& params);

/// Largest total departure rate over 100 random positions and all levels.
double estimate_max_departure(const Lattice& lattice, std::uint64_t seed);

/// Fixed step min(0.05/gamma_max, T_vib/40).
struct StepChoice {
  double dt = 0;
  double gamma_max = 0;
  double vibration_period = 0;
};
StepChoice choose_step(const Lattice& lattice, std::uint64_t seed);

struct EnsembleDiagnostics {
  double dt = 0;
  double gamma_max = 0;
  double vibration_period = 0;
  long long equilibration_steps = 0;
  long long averaging_steps = 0;
  int refinements = 0;
  long long guard_trips = 0;
  double max_departure_probability = 0;
  double jumps_per_atom = 0;
  /// Mean of <P_i^2> over axes, and the total |P|^2, relative to U0.
  double kinetic_per_axis_over_depth = 0;
  double kinetic_total_over_depth = 0;
  /// Mean |P|^2 difference between the second and first half of the window.
  double kinetic_drift = 0;
  double kinetic_drift_error = 0;
  long long clip_alarms = 0;
  double worst_clip = 0;
  long long alignment_fallbacks = 0;
  int aborted_atoms = 0;
};

struct TemperatureRecord {
  double depth = 0;     // E_R
  double detuning = 0;  // Gamma
  std::array<double, 3> temperature{};        // K
  std::array<double, 3> temperature_error{};  // K, from the inter-atom spread
  EnsembleDiagnostics diagnostics;
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
};

struct EnsembleResult {
  TemperatureRecord record;
  Snapshot snapshot;
};

/// Canonical text of the parameters that determine a run; hashed into outputs.
std::string describe(const Lattice& lattice, const SimParams& params);

EnsembleResult run_ensemble(const Lattice& lattice, const SimParams& params);

struct SweepPlan {
  std::vector<double> detunings;  // Gamma
  std::vector<double> depths;     // E_R
  double theta = kPi / 4;
  Transition transition = Transition::cesium_d2();
};

struct DetuningFits {
  double detuning = 0;
  std::array<ScalingFit, 3> axes;
};

struct SweepResult {
  std::vector<EnsembleResult> ensembles;
  std::vector<DetuningFits> per_detuning;
  std::array<ScalingFit, 3> pooled;
};

/// Seed of the record at (detuning, depth), derived from the master seed so
/// that records do not depend on which other points are in the plan.
std::uint64_t record_seed(std::uint64_t master, double detuning, double depth);

using SweepProgress = std::function<void(const TemperatureRecord&)>;

/// Runs every (detuning, depth) point and fits T = T0 + xi U0 per axis.
/// Needs three or more depths.
SweepResult sweep(const SweepPlan& plan, const SimParams& params, const SweepProgress& progress = {});

}  // namespace sisyphus
