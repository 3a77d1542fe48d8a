#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <sisyphus/thermometry.hpp>
#include <sisyphus/units.hpp>

using namespace sisyphus;

namespace {

// Maxwellian cloud with Gaussian initial size, stored in internal units.
Snapshot thermal_snapshot(std::size_t n, double kelvin, double size_m, unsigned seed) {
  const RecoilUnits u = RecoilUnits::of(Transition::cesium_d2());
  Snapshot s;
  s.seed = seed;
  s.params_hash = "0123456789abcdef";
  s.length_unit_m = 1.0 / u.wavenumber;
  s.momentum_unit_kg_m_s = si::hbar * u.wavenumber;
  s.mass_kg = u.mass;
  s.wavelength_m = Transition::cesium_d2().wavelength;
  s.detuning_gamma = -10;
  s.depth_recoil = 500;
  s.time_internal = 1234.5;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> x(0.0, size_m / s.length_unit_m);
  std::normal_distribution<double> p(0.0, std::sqrt(u.mean_p_squared(kelvin)));
  for (std::size_t i = 0; i < n; ++i) {
    SnapshotRow r;
    r.atom = i;
    r.position = Vec3(x(gen), x(gen), x(gen));
    r.momentum = Vec3(p(gen), p(gen), p(gen));
    r.level = static_cast<int>(i % 9);
    s.rows.push_back(r);
  }
  return s;
}

DensityProfile gaussian_profile(double amp, double c, double s, double b, int bins, double width) {
  DensityProfile p;
  p.bin_width = width;
  for (int i = 0; i < bins; ++i) {
    const double x = (i - bins / 2 + 0.5) * width;
    p.centers.push_back(x);
    p.counts.push_back(amp * std::exp(-0.5 * (x - c) * (x - c) / (s * s)) + b);
  }
  return p;
}

double rms(const ExpandedCloud& cloud, int axis) {
  double m = 0;
  double m2 = 0;
  for (const Vec3& r : cloud.positions) {
    m += r[axis];
    m2 += r[axis] * r[axis];
  }
  const double n = static_cast<double>(cloud.positions.size());
  return std::sqrt(m2 / n - (m / n) * (m / n));
}

constexpr double kMass = 132.905451931 * si::atomic_mass_unit;

}  // namespace

TEST_SUITE("thermometry") {
  TEST_CASE("zero delay is the identity and gravity only moves the centre") {
    const Snapshot s = thermal_snapshot(500, 10e-6, 50e-6, 1);
    const ExpandedCloud c0 = ballistic_expand(s, 0.0, 9.8);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      for (int k = 0; k < 3; ++k) CHECK(c0.positions[i][k] == s.position_m(i, k));
    }
    const double tau = 0.02;
    const ExpandedCloud a = ballistic_expand(s, tau);
    const ExpandedCloud b = ballistic_expand(s, tau, 9.8);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      CHECK(b.positions[i].x() == a.positions[i].x());
      CHECK(b.positions[i].z() == doctest::Approx(a.positions[i].z() - 0.5 * 9.8 * tau * tau).epsilon(1e-12));
    }
    CHECK(rms(a, 2) == doctest::Approx(rms(b, 2)).epsilon(1e-9));
    CHECK_THROWS_AS(ballistic_expand(s, -1.0), std::invalid_argument);
  }

  TEST_CASE("cloud size follows the free-expansion law") {
    const double t = 15e-6;
    const double s0 = 40e-6;
    const Snapshot s = thermal_snapshot(100000, t, s0, 2);
    for (const double tau : {0.005, 0.012, 0.035}) {
      const ExpandedCloud c = ballistic_expand(s, tau);
      const double expected = std::sqrt(s0 * s0 + si::boltzmann * t / kMass * tau * tau);
      for (int k = 0; k < 3; ++k) CHECK(rms(c, k) == doctest::Approx(expected).epsilon(0.01));
    }
  }

  TEST_CASE("projection keeps every atom accounted for") {
    const Snapshot s = thermal_snapshot(5000, 10e-6, 30e-6, 3);
    const ExpandedCloud c = ballistic_expand(s, 0.01);
    const DensityProfile auto_fov = project_profile(c, 0);
    double sum = 0;
    for (double v : auto_fov.counts) sum += v;
    CHECK(static_cast<std::size_t>(sum) + auto_fov.clipped == auto_fov.total);
    CHECK(auto_fov.total == s.rows.size());

    Binning narrow;
    narrow.width = 1e-5;
    narrow.half_range = 1e-4;
    const DensityProfile p = project_profile(c, 1, narrow);
    sum = 0;
    for (double v : p.counts) sum += v;
    CHECK(p.clipped > 0);
    CHECK(static_cast<std::size_t>(sum) + p.clipped == p.total);

    Binning far;
    far.half_range = 1e-6;
    far.center = 1.0;
    far.width = 1e-7;
    CHECK_THROWS_AS(project_profile(c, 0, far), std::invalid_argument);
  }

  TEST_CASE("fit recovers an exact Gaussian") {
    const DensityProfile p = gaussian_profile(120.0, 3e-5, 2e-4, 4.0, 121, 1e-5);
    const GaussianFit f = gaussian_fit(p);
    CHECK(f.converged);
    CHECK(f.amplitude == doctest::Approx(120.0).epsilon(1e-6));
    CHECK(f.center == doctest::Approx(3e-5).epsilon(1e-6));
    CHECK(f.sigma == doctest::Approx(2e-4).epsilon(1e-6));
    CHECK(f.offset == doctest::Approx(4.0).epsilon(1e-5));
    CHECK(f.reduced_chi2 < 1e-6);
  }

  TEST_CASE("fit on Poisson-noisy data is within 2%") {
    std::mt19937_64 gen(4);
    DensityProfile p = gaussian_profile(400.0, 0.0, 1e-3, 0.0, 101, 1e-4);
    for (double& c : p.counts) c = static_cast<double>(std::poisson_distribution<long>(c)(gen));
    const GaussianFit f = gaussian_fit(p);
    CHECK(f.acceptable());
    CHECK(f.sigma == doctest::Approx(1e-3).epsilon(0.02));
    CHECK(std::abs(f.sigma - 1e-3) < 4 * f.sigma_error);
  }

  TEST_CASE("binning is not a free parameter") {
    const Snapshot s = thermal_snapshot(200000, 10e-6, 30e-6, 5);
    const ExpandedCloud c = ballistic_expand(s, 0.012);
    const double width = rms(c, 0);
    Binning coarse;
    coarse.width = width / 8;
    Binning fine;
    fine.width = width / 16;
    const GaussianFit a = gaussian_fit(project_profile(c, 0, coarse));
    const GaussianFit b = gaussian_fit(project_profile(c, 0, fine));
    CHECK(std::abs(a.sigma - b.sigma) / a.sigma < 0.005);
  }

  TEST_CASE("non-Gaussian profiles are rejected") {
    DensityProfile p;
    p.bin_width = 1.0;
    std::mt19937_64 gen(6);
    for (int i = 0; i < 60; ++i) {
      p.centers.push_back(i);
      p.counts.push_back((i >= 10 && i < 50) ? static_cast<double>(std::poisson_distribution<long>(2000)(gen)) : 0.0);
    }
    CHECK_FALSE(gaussian_fit(p).acceptable());
  }

  TEST_CASE("two-time temperature") {
    const double t = 12e-6;
    const double tau1 = 0.012;
    const double tau2 = 0.035;
    const double s1 = 0.4e-3;
    const double s2 = std::sqrt(s1 * s1 + si::boltzmann * t / kMass * (tau2 * tau2 - tau1 * tau1));
    const TemperatureEstimate e = two_time_temperature(s1, 1e-6, s2, 2e-6, tau1, tau2, kMass);
    CHECK(e.value == doctest::Approx(t).epsilon(1e-12));
    CHECK(e.error > 0);
    const TemperatureEstimate exact = two_time_temperature(s1, 0, s2, 0, tau1, tau2, kMass);
    CHECK(exact.error == 0.0);

    CHECK_THROWS_AS(two_time_temperature(s1, 0, s2, 0, tau1, tau1, kMass), DegenerateInput);
    CHECK_THROWS_AS(two_time_temperature(s2, 0, s1, 0, tau1, tau2, kMass), InvalidMeasurement);
    CHECK_THROWS_AS(two_time_temperature(s1, 0, s2, 0, -0.01, tau2, kMass), InvalidMeasurement);
    CHECK_THROWS_AS(two_time_temperature(s1, 0, s2, 0, tau2, tau1, kMass), InvalidMeasurement);
    CHECK_THROWS_AS(two_time_temperature(s1, 0, s2, 0, tau1, tau2, 0.0), InvalidMeasurement);
    CHECK_THROWS_AS(two_time_temperature(s1, 0, NAN, 0, tau1, tau2, kMass), InvalidMeasurement);
  }

  TEST_CASE("time of flight reproduces the kinetic temperature") {
    const Snapshot s = thermal_snapshot(30000, 20e-6, 10e-6, 7);
    const TimeOfFlight tof = time_of_flight(s, 0.012, 0.035, si::standard_gravity);
    for (int k = 0; k < 3; ++k) {
      const TemperatureEstimate direct = direct_temperature(s, k);
      CHECK(direct.value == doctest::Approx(20e-6).epsilon(0.03));
      CHECK(tof.early[static_cast<std::size_t>(k)].acceptable());
      CHECK(tof.late[static_cast<std::size_t>(k)].acceptable());
      CHECK(tof.temperature[static_cast<std::size_t>(k)].value == doctest::Approx(direct.value).epsilon(0.02));
    }
    CHECK_THROWS_AS(direct_temperature(s, 3), std::invalid_argument);
  }

  TEST_CASE("scaling fit") {
    std::vector<ScalingPoint> pts;
    for (const double u : {500.0, 1000.0, 2000.0, 3000.0}) pts.push_back({u, 2e-6 + 20e-9 * u, 0.5e-6});
    const ScalingFit f = linear_scaling_fit(pts);
    CHECK(f.intercept == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(f.slope == doctest::Approx(20.0).epsilon(1e-10));
    CHECK(f.points == 4);
    CHECK(f.reduced_chi2 < 1e-12);
    CHECK(f.slope_error > 0);

    std::vector<ScalingPoint> shuffled = {pts[2], pts[0], pts[3], pts[1]};
    const ScalingFit g = linear_scaling_fit(shuffled);
    CHECK(g.slope == doctest::Approx(f.slope).epsilon(1e-12));
    CHECK(g.intercept == doctest::Approx(f.intercept).epsilon(1e-12));
    CHECK(g.slope_error == doctest::Approx(f.slope_error).epsilon(1e-12));

    // Weighted against unweighted on noisy data with a wild low-weight point.
    std::vector<ScalingPoint> noisy = {{500, 12e-6, 1e-6}, {1000, 22e-6, 1e-6}, {2000, 42e-6, 1e-6}, {3000, 80e-6, 100e-6}};
    CHECK(linear_scaling_fit(noisy).slope == doctest::Approx(20.0).epsilon(0.01));

    std::vector<ScalingPoint> flat = {{1000, 1e-6, 1e-7}, {1000, 2e-6, 1e-7}, {1000, 3e-6, 1e-7}};
    CHECK_THROWS_AS(linear_scaling_fit(flat), RankDeficient);
    pts.resize(2);
    CHECK_THROWS_AS(linear_scaling_fit(pts), std::invalid_argument);
  }

  TEST_CASE("snapshot text round trip is exact") {
    const Snapshot s = thermal_snapshot(50, 10e-6, 30e-6, 8);
    std::stringstream io;
    write_snapshot(io, s);
    const Snapshot r = read_snapshot(io);
    CHECK(r.seed == s.seed);
    CHECK(r.params_hash == s.params_hash);
    CHECK(r.length_unit_m == s.length_unit_m);
    CHECK(r.momentum_unit_kg_m_s == s.momentum_unit_kg_m_s);
    CHECK(r.mass_kg == s.mass_kg);
    CHECK(r.depth_recoil == s.depth_recoil);
    CHECK(r.time_internal == s.time_internal);
    REQUIRE(r.rows.size() == s.rows.size());
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      CHECK(r.rows[i].atom == s.rows[i].atom);
      CHECK(r.rows[i].position == s.rows[i].position);
      CHECK(r.rows[i].momentum == s.rows[i].momentum);
      CHECK(r.rows[i].level == s.rows[i].level);
    }

    std::stringstream bad_magic("atom,x,y,z,px,py,pz,m\n");
    CHECK_THROWS_AS(read_snapshot(bad_magic), std::runtime_error);
    std::string text = io.str();
    text.resize(text.size() - 10);
    text += ",oops\n";
    std::stringstream truncated(text);
    CHECK_THROWS_AS(read_snapshot(truncated), std::runtime_error);
    CHECK_THROWS_AS(read_snapshot(std::filesystem::path("/nonexistent/snapshot.csv")), std::runtime_error);
  }
}
