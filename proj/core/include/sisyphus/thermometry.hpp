#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sisyphus/lattice_field.hpp"
#include "sisyphus/snapshot.hpp"

namespace sisyphus {

/// Raised when a measurement pair is physically inconsistent (cloud shrinks).
class InvalidMeasurement : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when the two delays coincide.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a linear fit has no unique solution.
class RankDeficient : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Positions after free flight, in meters.
struct ExpandedCloud {
  double tau = 0;  // s
  std::vector<Vec3> positions;
};

/// r(tau) = r(0) + v tau, with an optional uniform acceleration -g along z.
ExpandedCloud ballistic_expand(const Snapshot& snapshot, double tau_seconds, double gravity = 0.0);

struct Binning {
  double width = 0;       // m; 0 picks rms/8
  double half_range = 0;  // m, field of view around `center`; 0 picks 6 rms
  double center = 0;      // m; ignored when half_range is automatic
};

struct DensityProfile {
  int axis = 0;
  std::vector<double> centers;  // m
  std::vector<double> counts;
  double bin_width = 0;
  std::size_t total = 0;    // atoms offered
  std::size_t clipped = 0;  // atoms outside the field of view
};

/// Histogram along `axis`, integrating over the other two coordinates.
/// Throws std::invalid_argument when no atom falls inside the field of view.
DensityProfile project_profile(const ExpandedCloud& cloud, int axis, const Binning& binning = {});

struct GaussianFit {
  double amplitude = 0;
  double center = 0;
  double sigma = 0;
  double offset = 0;
  double amplitude_error = 0;
  double center_error = 0;
  double sigma_error = 0;
  double offset_error = 0;
  double residual_norm = 0;
  /// Chi-square per degree of freedom with Poisson variances.
  double reduced_chi2 = 0;
  int bins_used = 0;
  int iterations = 0;
  bool converged = false;

  /// Converged and statistically compatible with a Gaussian shape.
  bool acceptable() const;
};

/// Reduced chi-square above which a converged fit is still rejected.
inline constexpr double kFitChi2Limit = 3.0;

/// Least-squares fit of A exp(-(x-c)^2 / 2 s^2) + b, seeded from the sample
/// moments and restricted to +-4 s around the moment center.
GaussianFit gaussian_fit(const DensityProfile& profile);

struct TemperatureEstimate {
  double value = 0;  // K
  double error = 0;  // K
};

/// T = (M/k_B) (s2^2 - s1^2) / (t2^2 - t1^2), errors propagated from the widths.
TemperatureEstimate two_time_temperature(double sigma1, double sigma1_error, double sigma2, double sigma2_error,
                                         double tau1, double tau2, double mass);

/// M <v_axis^2> / k_B straight from the snapshot momenta, error from sample spread.
TemperatureEstimate direct_temperature(const Snapshot& snapshot, int axis);

struct ScalingPoint {
  double depth = 0;              // E_R
  double temperature = 0;        // K
  double temperature_error = 0;  // K
};

struct ScalingFit {
  double intercept = 0;        // uK
  double intercept_error = 0;  // uK
  double slope = 0;            // nK / E_R
  double slope_error = 0;      // nK / E_R
  double reduced_chi2 = 0;
  int points = 0;
};

/// Inverse-variance weighted line T = T0 + xi U0. Falls back to equal weights
/// when any error is non-positive. Standard errors are inflated by
/// sqrt(reduced chi2) when that exceeds one. Needs three or more points.
ScalingFit linear_scaling_fit(const std::vector<ScalingPoint>& points);

/// Per-axis two-time analysis of one snapshot.
struct TimeOfFlight {
  std::array<GaussianFit, 3> early;
  std::array<GaussianFit, 3> late;
  std::array<TemperatureEstimate, 3> temperature;
};

TimeOfFlight time_of_flight(const Snapshot& snapshot, double tau1, double tau2, double gravity = 0.0);

}  // namespace sisyphus
