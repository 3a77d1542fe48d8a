#include "sisyphus/thermometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "sisyphus/units.hpp"

namespace sisyphus {

ExpandedCloud ballistic_expand(const Snapshot& snapshot, double tau_seconds, double gravity) {
  if (!(tau_seconds >= 0.0)) throw std::invalid_argument("expansion time must be non-negative");
  ExpandedCloud cloud;
  cloud.tau = tau_seconds;
  cloud.positions.reserve(snapshot.rows.size());
  const double fall = 0.5 * gravity * tau_seconds * tau_seconds;
  for (std::size_t i = 0; i < snapshot.rows.size(); ++i) {
    Vec3 r;
    for (int a = 0; a < 3; ++a) r[a] = snapshot.position_m(i, a) + snapshot.velocity(i, a) * tau_seconds;
    r[2] -= fall;
    cloud.positions.push_back(r);
  }
  return cloud;
}

DensityProfile project_profile(const ExpandedCloud& cloud, int axis, const Binning& binning) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
  if (cloud.positions.empty()) throw std::invalid_argument("empty field of view");

  double mean = 0;
  for (const auto& r : cloud.positions) mean += r[axis];
  mean /= static_cast<double>(cloud.positions.size());
  double var = 0;
  for (const auto& r : cloud.positions) var += (r[axis] - mean) * (r[axis] - mean);
  const double rms = std::sqrt(var / static_cast<double>(cloud.positions.size()));

  const double width = binning.width > 0 ? binning.width : rms / 8.0;
  const double half = binning.half_range > 0 ? binning.half_range : 6.0 * rms;
  const double center = binning.half_range > 0 ? binning.center : mean;
  if (!(width > 0) || !(half > 0)) throw std::invalid_argument("cloud has zero extent; cannot choose bins");

  DensityProfile p;
  p.axis = axis;
  p.bin_width = width;
  p.total = cloud.positions.size();
  const auto bins = static_cast<std::size_t>(std::ceil(2.0 * half / width));
  const double lo = center - 0.5 * static_cast<double>(bins) * width;
  p.centers.resize(bins);
  p.counts.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) p.centers[b] = lo + (static_cast<double>(b) + 0.5) * width;
  for (const auto& r : cloud.positions) {
    const double u = (r[axis] - lo) / width;
    if (u < 0 || u >= static_cast<double>(bins)) {
      ++p.clipped;
      continue;
    }
    p.counts[static_cast<std::size_t>(u)] += 1.0;
  }
  if (p.clipped == p.total) throw std::invalid_argument("empty field of view");
  return p;
}

namespace {

// Residuals of A exp(-(x-c)^2/2s^2) + b - y in scaled coordinates.
struct GaussianResidual : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;

  GaussianResidual(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys)
      : DenseFunctor<double>(4, static_cast<int>(xs.size())), x(xs), y(ys) {}

  int operator()(const InputType& p, ValueType& f) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = (x[i] - p[1]) / p[2];
      f[i] = p[0] * std::exp(-0.5 * u * u) + p[3] - y[i];
    }
    return 0;
  }

  int df(const InputType& p, JacobianType& j) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = (x[i] - p[1]) / p[2];
      const double g = std::exp(-0.5 * u * u);
      j(i, 0) = g;
      j(i, 1) = p[0] * g * u / p[2];
      j(i, 2) = p[0] * g * u * u / p[2];
      j(i, 3) = 1.0;
    }
    return 0;
  }
};

bool converged_status(Eigen::LevenbergMarquardtSpace::Status s) {
  using namespace Eigen::LevenbergMarquardtSpace;
  switch (s) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
      return true;
    default:
      return false;
  }
}

}  // namespace

bool GaussianFit::acceptable() const { return converged && sigma > 0 && reduced_chi2 <= kFitChi2Limit; }

GaussianFit gaussian_fit(const DensityProfile& profile) {
  if (profile.counts.empty()) throw std::invalid_argument("empty profile");
  double n = 0;
  double m1 = 0;
  for (std::size_t b = 0; b < profile.counts.size(); ++b) {
    n += profile.counts[b];
    m1 += profile.counts[b] * profile.centers[b];
  }
  if (!(n > 0)) throw std::invalid_argument("empty profile");
  m1 /= n;
  double m2 = 0;
  double peak = 0;
  for (std::size_t b = 0; b < profile.counts.size(); ++b) {
    m2 += profile.counts[b] * (profile.centers[b] - m1) * (profile.centers[b] - m1);
    peak = std::max(peak, profile.counts[b]);
  }
  const double s0 = std::sqrt(m2 / n);

  GaussianFit fit;
  fit.center = m1;
  fit.sigma = s0;
  fit.amplitude = peak;
  if (!(s0 > 0)) return fit;

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t b = 0; b < profile.counts.size(); ++b) {
    const double u = (profile.centers[b] - m1) / s0;
    if (std::abs(u) <= 4.0) {
      xs.push_back(u);
      ys.push_back(profile.counts[b] / peak);
    }
  }
  fit.bins_used = static_cast<int>(xs.size());
  if (xs.size() < 5) return fit;

  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  GaussianResidual functor(x, y);
  Eigen::LevenbergMarquardt<GaussianResidual> lm(functor);
  lm.setFtol(1e-8);
  lm.setXtol(1e-8);
  lm.setMaxfev(2000);
  Eigen::VectorXd p(4);
  p << 1.0, 0.0, 1.0, 0.0;
  const auto status = lm.minimize(p);
  fit.iterations = static_cast<int>(lm.iterations());

  Eigen::VectorXd resid(x.size());
  functor(p, resid);
  Eigen::MatrixXd jac(x.size(), 4);
  functor.df(p, jac);

  const double sigma = std::abs(p[2]);
  fit.amplitude = p[0] * peak;
  fit.center = m1 + p[1] * s0;
  fit.sigma = sigma * s0;
  fit.offset = p[3] * peak;
  fit.residual_norm = resid.norm() * peak;
  fit.converged = converged_status(status) && sigma > 0 && p.allFinite();

  const auto dof = static_cast<double>(x.size() - 4);
  double chi2 = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double model = (resid[i] + y[i]) * peak;
    const double r = resid[i] * peak;
    chi2 += r * r / std::max(model, 1.0);
  }
  fit.reduced_chi2 = dof > 0 ? chi2 / dof : 0.0;

  const Eigen::Matrix4d normal = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(normal);
  if (lu.isInvertible() && dof > 0) {
    const Eigen::Matrix4d cov = lu.inverse() * (resid.squaredNorm() / dof);
    fit.amplitude_error = std::sqrt(std::max(0.0, cov(0, 0))) * peak;
    fit.center_error = std::sqrt(std::max(0.0, cov(1, 1))) * s0;
    fit.sigma_error = std::sqrt(std::max(0.0, cov(2, 2))) * s0;
    fit.offset_error = std::sqrt(std::max(0.0, cov(3, 3))) * peak;
  }
  return fit;
}

TemperatureEstimate two_time_temperature(double sigma1, double sigma1_error, double sigma2, double sigma2_error,
                                         double tau1, double tau2, double mass) {
  if (!std::isfinite(sigma1) || !std::isfinite(sigma2) || !std::isfinite(tau1) || !std::isfinite(tau2)) {
    throw InvalidMeasurement("non-finite width or delay");
  }
  if (tau1 == tau2) throw DegenerateInput("the two expansion times coincide");
  if (tau1 < 0 || tau2 < tau1) throw InvalidMeasurement("expansion times must satisfy 0 <= tau1 < tau2");
  if (sigma1 < 0 || sigma2 < sigma1) throw InvalidMeasurement("cloud shrinks between the two expansion times");
  if (!(mass > 0)) throw InvalidMeasurement("mass must be positive");

  const double denom = tau2 * tau2 - tau1 * tau1;
  const double k = mass / si::boltzmann / denom;
  TemperatureEstimate t;
  t.value = k * (sigma2 * sigma2 - sigma1 * sigma1);
  t.error = k * std::hypot(2.0 * sigma2 * sigma2_error, 2.0 * sigma1 * sigma1_error);
  return t;
}

TemperatureEstimate direct_temperature(const Snapshot& snapshot, int axis) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
  const std::size_t n = snapshot.rows.size();
  if (n < 2) throw std::invalid_argument("snapshot needs at least two rows");
  double sum = 0;
  double sum2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = snapshot.velocity(i, axis);
    sum += v * v;
    sum2 += v * v * v * v;
  }
  const double dn = static_cast<double>(n);
  const double mean = sum / dn;
  const double var = std::max(0.0, (sum2 / dn - mean * mean) * dn / (dn - 1.0));
  const double k = snapshot.mass_kg / si::boltzmann;
  return {k * mean, k * std::sqrt(var / dn)};
}

ScalingFit linear_scaling_fit(const std::vector<ScalingPoint>& points) {
  if (points.size() < 3) throw std::invalid_argument("scaling fit needs at least three points");
  bool weighted = true;
  for (const auto& p : points) {
    if (!std::isfinite(p.depth) || !std::isfinite(p.temperature)) throw std::invalid_argument("non-finite point");
    if (!(p.temperature_error > 0) || !std::isfinite(p.temperature_error)) weighted = false;
  }

  // Temperatures in uK so the slope comes out in uK/E_R.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double y = p.temperature * 1e6;
    const double e = p.temperature_error * 1e6;
    const double w = weighted ? 1.0 / (e * e) : 1.0;
    sw += w;
    sx += w * p.depth;
    sy += w * y;
    sxx += w * p.depth * p.depth;
    sxy += w * p.depth * y;
  }
  const double xbar = sx / sw;
  const double sxx_c = sxx - sx * xbar;
  if (!(sxx_c > 1e-12 * std::max(1.0, sxx))) throw RankDeficient("scaling fit needs at least two distinct depths");

  const double slope = (sxy - sx * sy / sw) / sxx_c;
  const double intercept = (sy - slope * sx) / sw;

  double chi2 = 0;
  for (const auto& p : points) {
    const double y = p.temperature * 1e6;
    const double e = p.temperature_error * 1e6;
    const double w = weighted ? 1.0 / (e * e) : 1.0;
    const double r = y - intercept - slope * p.depth;
    chi2 += w * r * r;
  }
  const double dof = static_cast<double>(points.size()) - 2.0;
  ScalingFit fit;
  fit.points = static_cast<int>(points.size());
  fit.reduced_chi2 = chi2 / dof;
  // Unweighted fits estimate the scatter from the residuals alone.
  const double inflate = weighted ? std::max(1.0, fit.reduced_chi2) : fit.reduced_chi2;
  double var_slope = inflate / sxx_c;
  double var_intercept = inflate * (1.0 / sw + xbar * xbar / sxx_c);
  if (!weighted && fit.reduced_chi2 == 0.0) {
    // Exact data: report the scale-free leverage so errors stay positive.
    var_slope = 1.0 / sxx_c;
    var_intercept = 1.0 / sw + xbar * xbar / sxx_c;
  }
  fit.slope = slope * 1e3;
  fit.slope_error = std::sqrt(var_slope) * 1e3;
  fit.intercept = intercept;
  fit.intercept_error = std::sqrt(var_intercept);
  return fit;
}

TimeOfFlight time_of_flight(const Snapshot& snapshot, double tau1, double tau2, double gravity) {
  TimeOfFlight out;
  const ExpandedCloud early = ballistic_expand(snapshot, tau1, gravity);
  const ExpandedCloud late = ballistic_expand(snapshot, tau2, gravity);
  for (int a = 0; a < 3; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    out.early[ua] = gaussian_fit(project_profile(early, a));
    out.late[ua] = gaussian_fit(project_profile(late, a));
    out.temperature[ua] = two_time_temperature(out.early[ua].sigma, out.early[ua].sigma_error, out.late[ua].sigma,
                                               out.late[ua].sigma_error, tau1, tau2, snapshot.mass_kg);
  }
  return out;
}

}  // namespace sisyphus
