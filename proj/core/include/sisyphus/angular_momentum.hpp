#pragma once

#include <array>

#include <Eigen/Core>

#include "sisyphus/units.hpp"

namespace sisyphus {

/// Closed Jg -> Je = Jg + 1 optical transition.
///
/// All quantities are SI. The linewidth is an angular frequency (rad/s).
struct Transition {
  double jg = 4.0;
  double je = 5.0;
  double wavelength = 852.347e-9;
  double linewidth = kTwoPi * 5.2e6;
  double saturation_irradiance = 11.0;  // 1.1 mW/cm^2
  double mass = 132.905451931 * si::atomic_mass_unit;

  /// Cesium D2 line, Fg = 4 -> Fe = 5.
  static Transition cesium_d2() { return Transition{}; }

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;

  int ground_dim() const;
  int excited_dim() const;
};

/// Largest ground manifold the fixed-capacity matrices support (Jg = 4).
inline constexpr int kMaxGroundDim = 9;
inline constexpr int kMaxExcitedDim = kMaxGroundDim + 2;

/// Condon-Shortley Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.
///
/// Arguments must be integers or half-integers with |m| <= j. Returns 0 when a
/// selection rule (projection sum, triangle, parity) fails. The value is
/// evaluated exactly with rational arithmetic and rounded once.
double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M);

/// Same as clebsch_gordan, with every argument given as twice its value.
double clebsch_gordan_twice(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

/// Spherical components of the dipole raising operator.
///
/// plus(q) has shape (2je+1) x (2jg+1); entry (me, mg) is <jg mg; 1 q | je me>
/// with rows/columns ordered by increasing projection. The reduced dipole
/// moment is set to one. minus(q) is the transpose (entries are real).
class DipoleComponents {
 public:
  DipoleComponents() = default;

  const Eigen::MatrixXd& plus(int q) const { return plus_[static_cast<std::size_t>(q + 1)]; }
  Eigen::MatrixXd minus(int q) const { return plus(q).transpose(); }

  int ground_dim() const { return ground_dim_; }
  int excited_dim() const { return excited_dim_; }

  /// Nonzero coefficient of plus(q) feeding excited row `row`, i.e. the entry
  /// at column row - 1 - q (zero when out of range). Used by sparse kernels.
  double band(int q, int row) const;

 private:
  friend DipoleComponents build_dipole_components(const Transition& transition);

  std::array<Eigen::MatrixXd, 3> plus_;
  int ground_dim_ = 0;
  int excited_dim_ = 0;
};

DipoleComponents build_dipole_components(const Transition& transition);

}  // namespace sisyphus
