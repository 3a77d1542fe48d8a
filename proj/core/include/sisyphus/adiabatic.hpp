#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "sisyphus/angular_momentum.hpp"
#include "sisyphus/lattice_field.hpp"

namespace sisyphus {

using Mat3 = Eigen::Matrix3d;

/// Beam configuration bundled with its dipole tables and derived scalars.
/// Immutable after construction and safe to share between threads.
class Lattice {
 public:
  explicit Lattice(BeamConfig config);

  const BeamConfig& config() const { return config_; }
  const DipoleComponents& dipoles() const { return dipoles_; }
  int dim() const { return dipoles_.ground_dim(); }

  /// Delta s0 / 2 (E_R); multiplies A to give the light-shift Hamiltonian.
  double light_shift_scale() const { return scale_; }
  /// Gamma'_0, the total scattering rate (E_R / hbar).
  double scattering_rate() const { return gamma_prime_; }
  /// Diabatic modulation depth (E_R).
  double depth() const { return depth_; }

  /// Coefficients of e_x, e_y, e_z in the spherical basis.
  const std::array<std::array<cd, 3>, 3>& cartesian_channels() const { return cartesian_; }
  /// band(q)[row] is the nonzero entry of d+_q in excited row `row`.
  const std::array<double, kMaxExcitedDim>& band(int q) const { return band_[static_cast<std::size_t>(q + 1)]; }

  /// M = d+ . eps for the given spherical amplitudes.
  CMat coupling(const std::array<cd, 3>& eps) const;

 private:
  BeamConfig config_;
  DipoleComponents dipoles_;
  double scale_ = 0;
  double gamma_prime_ = 0;
  double depth_ = 0;
  std::array<std::array<cd, 3>, 3> cartesian_{};
  std::array<std::array<double, kMaxExcitedDim>, 3> band_{};
};

/// Eigen-decomposition of the light-shift Hamiltonian at one position.
struct AdiabaticFrame {
  Vec3 position = Vec3::Zero();
  int dim = 0;
  RVec potentials;  // ascending, E_R
  CMat states;      // column m is |Phi_m>
  std::array<Vec3, kMaxGroundDim> gradients{};
  SphericalField field;
  /// Bit m set when levels m and m+1 are closer than 1e-8 of the spectral range.
  std::uint32_t near_degenerate = 0;

  double potential(int m) const { return potentials[m]; }
  const Vec3& gradient(int m) const { return gradients[static_cast<std::size_t>(m)]; }
};

AdiabaticFrame diagonalize(const Lattice& lattice, const Vec3& position);

/// Amplitudes of one adiabatic state under the coupling operators:
/// v = M Phi, vi = dM/di Phi, vij = d2M/didj Phi, w[q] = (d+ . e_q) Phi.
struct StateAmplitudes {
  CVec v;
  std::array<CVec, 3> vi;
  std::array<CVec, 6> vij;
  std::array<CVec, 3> w;
};

/// w[q] = (d+ . e_q) phi for an arbitrary ground-state vector.
std::array<CVec, 3> emission_amplitudes(const Lattice& lattice, const CVec& phi);

StateAmplitudes state_amplitudes(const Lattice& lattice, const AdiabaticFrame& frame, int m);

/// Coefficients of the n -> m channel (n == m is the no-jump channel).
double pumping_rate(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to);
Vec3 radiation_pressure(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to);
/// Raw (unclipped) diffusion matrix; `diagonal` selects the n == m term.
Mat3 diffusion_matrix(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to, bool diagonal);

/// Full coefficient tables, indexed [from][to].
struct CoefficientTable {
  int dim = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxGroundDim, kMaxGroundDim> gamma;
  /// Diffusion matrices before symmetrization and clipping.
  std::array<std::array<Mat3, kMaxGroundDim>, kMaxGroundDim> raw_diffusion{};
  std::array<std::array<Vec3, kMaxGroundDim>, kMaxGroundDim> force{};
  std::array<std::array<Mat3, kMaxGroundDim>, kMaxGroundDim> diffusion{};
  /// Most negative pre-clip eigenvalue relative to the matrix norm.
  double worst_clip = 0;
};

using RateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxGroundDim, kMaxGroundDim>;

/// gamma[n][m] for all pairs, diagonal included.
RateMatrix pumping_rates(const Lattice& lattice, const AdiabaticFrame& frame);
/// gamma, F and clipped D for all pairs.
CoefficientTable coefficient_table(const Lattice& lattice, const AdiabaticFrame& frame);

/// Symmetrizes D and clips negative eigenvalues to zero. Returns the most
/// negative eigenvalue relative to the norm (0 when already PSD).
struct ClippedDiffusion {
  Mat3 matrix = Mat3::Zero();
  Mat3 axes = Mat3::Identity();  // columns are eigenvectors
  Vec3 variances = Vec3::Zero(); // clipped eigenvalues
  double clip = 0;
};
ClippedDiffusion clip_diffusion(const Mat3& raw);

/// Threshold below which a pre-clip eigenvalue raises a consistency alarm.
inline constexpr double kDiffusionAlarm = 1e-9;

struct Alignment {
  std::array<int, kMaxGroundDim> permutation{};  // old index -> new index
  std::array<cd, kMaxGroundDim> phases{};        // multiply new states by these
  bool fallback = false;
  double min_overlap = 1.0;
};

/// Matches the states of `next` to those of `previous` by maximal overlap.
/// Falls back to eigenvalue order when any best overlap is below 0.5.
Alignment align_continuity(const AdiabaticFrame& previous, const AdiabaticFrame& next);

struct WellCharacter {
  Vec3 minimum = Vec3::Zero();      // 1/k
  double minimum_potential = 0;     // E_R
  double barrier_x = 0;             // E_R
  double barrier_z = 0;             // E_R
  double barrier_ratio = 0;         // barrier_x / barrier_z
  Mat3 hessian = Mat3::Zero();      // E_R k^2
  Vec3 frequencies = Vec3::Zero();  // harmonic, units of E_R/hbar
};

/// Locates a minimum of the lowest adiabatic potential and characterizes it.
/// `points_per_az` sets the scan resolution; below 20 throws std::invalid_argument.
WellCharacter well_characterization(const Lattice& lattice, int points_per_az = 40);

/// Lowest adiabatic potential at a point (E_R).
double lowest_potential(const Lattice& lattice, const Vec3& position);

}  // namespace sisyphus
