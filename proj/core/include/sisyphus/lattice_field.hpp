#pragma once

#include <array>
#include <complex>

#include <Eigen/Core>

#include "sisyphus/angular_momentum.hpp"

namespace sisyphus {

using cd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

/// Complex matrix with fixed capacity; never heap-allocates.
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxExcitedDim, kMaxExcitedDim>;
using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxExcitedDim, 1>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxExcitedDim, 1>;

// Internal units: length 1/k, momentum hbar*k, energy E_R = (hbar k)^2 / 2M,
// time hbar/E_R. In these units dR/dt = 2P and the kinetic energy is |P|^2.
struct RecoilUnits {
  double wavenumber = 0;       // k, 1/m
  double recoil_energy = 0;    // J
  double recoil_frequency = 0; // E_R / hbar, rad/s
  double mass = 0;             // kg

  static RecoilUnits of(const Transition& transition);

  double seconds(double t) const { return t / recoil_frequency; }
  double from_seconds(double seconds) const { return seconds * recoil_frequency; }
  double meters(double length) const { return length / wavenumber; }
  double from_meters(double meters) const { return meters * wavenumber; }
  /// hbar k / M, m/s per unit of internal momentum.
  double velocity_per_momentum() const;
  /// Kinetic temperature M<v^2>/k_B for a given <P^2> (internal units).
  double temperature(double mean_p_squared) const;
  /// Inverse of temperature().
  double mean_p_squared(double kelvin) const;
  /// E_R / k_B in kelvin.
  double recoil_temperature() const;
};

/// Four-beam 3D lin-perp-lin configuration.
///
/// Pair 1 lies in the xz-plane with wavevectors k(+-sin t, 0, cos t), polarized
/// along y; pair 2 lies in the yz-plane with k(0, +-sin t, -cos t), polarized
/// along x. Detuning is in units of the natural linewidth.
struct BeamConfig {
  double theta = kPi / 4;
  double detuning = -10.0;
  double beam_irradiance = 1.0;  // W/m^2, per beam
  Transition transition = Transition::cesium_d2();

  /// Throws std::invalid_argument on invalid geometry or irradiance.
  void validate() const;

  double total_irradiance() const { return 8.0 * beam_irradiance; }
  /// Omega^2 / Gamma^2 = (1/2) I / I0 with I the total well-center irradiance.
  double rabi_squared() const;
  /// s0 = (Omega^2/2) / (Delta^2 + Gamma^2/4).
  double saturation() const;
  /// Gamma' = Gamma s0 / 2 in units of E_R/hbar.
  double scattering_rate() const;
  /// Delta s0 / 2 in units of E_R; the light-shift operator is this times A.
  double light_shift_scale() const;
  /// Natural linewidth in units of E_R/hbar.
  double linewidth_internal() const;

  /// Configuration whose diabatic modulation depth equals `depth_recoil`.
  static BeamConfig for_depth(double depth_recoil, double detuning, Transition transition = Transition::cesium_d2());
};

/// Polarization profile and its analytic spatial derivatives at one point.
///
/// Each beam has amplitude 1/sqrt(8) so that |eps|^2 = 1 at a well center.
struct FieldSample {
  Vec3 position = Vec3::Zero();  // units of 1/k
  CVec3 epsilon = CVec3::Zero();
  std::array<CVec3, 3> d1{};
  std::array<std::array<CVec3, 3>, 3> d2{};
};

FieldSample field_polarization(const BeamConfig& config, const Vec3& position);

/// Spherical components eps_q = e_q^* . eps, q = -1, 0, +1 (index q + 1).
struct SphericalField {
  std::array<cd, 3> value{};
  std::array<std::array<cd, 3>, 3> d1{};  // [i][q]
  std::array<std::array<cd, 3>, 6> d2{};  // [pair(i,j)][q], pairs xx yy zz xy xz yz

  static SphericalField from(const FieldSample& sample);
  static SphericalField from(const CVec3& epsilon);
};

/// Packed index of the symmetric pair (i, j).
constexpr int pair_index(int i, int j) {
  if (i == j) return i;
  const int lo = i < j ? i : j;
  const int hi = i < j ? j : i;
  return lo == 0 ? (hi == 1 ? 3 : 4) : 5;
}

/// Spherical unit vectors e_{-1}, e_0, e_{+1}.
CVec3 spherical_unit(int q);

enum class Channel { Minus, Zero, Plus, X, Y, Z };

/// Coefficients c_q with e_channel = sum_q c_q e_q, i.e. c_q = e_q^* . e_channel.
std::array<cd, 3> channel_coefficients(Channel channel);

/// Dense operator algebra at one point: M = d+ . eps and its derivatives, from
/// which A = M^dagger M and B_c = M^dagger (d+ . e_c) follow.
class LocalOperators {
 public:
  LocalOperators(const FieldSample& sample, const DipoleComponents& dipoles);

  const CMat& coupling() const { return m_; }

  CMat light_shift() const;
  CMat light_shift_d1(int i) const;
  CMat light_shift_d2(int i, int j) const;

  CMat b(Channel c) const;
  CMat b_d1(Channel c, int i) const;
  CMat b_d2(Channel c, int i, int j) const;

 private:
  CMat emission(Channel c) const;

  const DipoleComponents* dipoles_;
  CMat m_;
  std::array<CMat, 3> dm_;
  std::array<CMat, 6> d2m_;
};

/// Light-shift operator A(r) = (d- . eps^*)(d+ . eps); Hermitian, PSD.
CMat light_shift_operator(const FieldSample& sample, const DipoleComponents& dipoles);

struct LatticeConstants {
  double a_z = 0;
  double a_xy = 0;
};

/// Lattice constants (same length unit as `wavelength`). Only theta = pi/4 is
/// supported; other angles throw std::invalid_argument.
LatticeConstants lattice_constants(double theta, double wavelength);

/// Diabatic modulation depth U0 in units of E_R.
double diabatic_depth(const BeamConfig& config);

/// (1 - weakest/strongest sigma+ line strength); 44/45 for Jg = 4.
double diabatic_contrast(const Transition& transition);

}  // namespace sisyphus
