#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include <sisyphus/lattice_field.hpp>

using namespace sisyphus;

namespace {

const double kC = std::cos(kPi / 4);

}  // namespace

TEST_SUITE("lattice_field") {
  TEST_CASE("polarization is normalised at the wells and circular at alternating sites") {
    const BeamConfig cfg;
    for (const double z : {kPi / (4 * kC), 3 * kPi / (4 * kC)}) {
      const FieldSample s = field_polarization(cfg, Vec3(0, 0, z));
      CHECK(s.epsilon.squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
      const SphericalField f = SphericalField::from(s.epsilon);
      const double minus = std::norm(f.value[0]);
      const double plus = std::norm(f.value[2]);
      CHECK(std::max(minus, plus) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::min(minus, plus) < 1e-14);
    }
    const SphericalField a = SphericalField::from(field_polarization(cfg, Vec3(0, 0, kPi / (4 * kC))).epsilon);
    const SphericalField b = SphericalField::from(field_polarization(cfg, Vec3(0, 0, 3 * kPi / (4 * kC))).epsilon);
    CHECK(std::norm(a.value[2]) == doctest::Approx(std::norm(b.value[0])));
  }

  TEST_CASE("analytic derivatives agree with central differences") {
    const BeamConfig cfg;
    const Vec3 r(0.37, -1.21, 2.05);
    const FieldSample s = field_polarization(cfg, r);
    const double h = 1e-5;
    for (int i = 0; i < 3; ++i) {
      Vec3 dr = Vec3::Zero();
      dr[i] = h;
      const FieldSample p = field_polarization(cfg, r + dr);
      const FieldSample m = field_polarization(cfg, r - dr);
      CHECK(((p.epsilon - m.epsilon) / (2 * h) - s.d1[i]).norm() < 1e-9);
      for (int j = 0; j < 3; ++j) CHECK(((p.d1[j] - m.d1[j]) / (2 * h) - s.d2[i][j]).norm() < 1e-9);
    }
  }

  TEST_CASE("spherical components reconstruct the vector") {
    const CVec3 v(cd(0.3, -0.2), cd(-0.7, 0.1), cd(0.25, 0.4));
    const SphericalField f = SphericalField::from(v);
    CVec3 back = CVec3::Zero();
    for (int q = -1; q <= 1; ++q) back += f.value[static_cast<std::size_t>(q + 1)] * spherical_unit(q);
    CHECK((back - v).norm() < 1e-15);
    // Cartesian channel coefficients expand the unit vectors.
    const auto cx = channel_coefficients(Channel::X);
    CVec3 ex = CVec3::Zero();
    for (int q = -1; q <= 1; ++q) ex += cx[static_cast<std::size_t>(q + 1)] * spherical_unit(q);
    CHECK((ex - CVec3(1, 0, 0)).norm() < 1e-15);
  }

  TEST_CASE("light-shift operator is Hermitian and positive semidefinite") {
    const BeamConfig cfg;
    const DipoleComponents d = build_dipole_components(cfg.transition);
    const CMat a = light_shift_operator(field_polarization(cfg, Vec3(1.3, 0.4, -0.9)), d);
    CHECK((a - a.adjoint()).norm() < 1e-14);
    Eigen::SelfAdjointEigenSolver<CMat> es(a);
    CHECK(es.eigenvalues().minCoeff() > -1e-14);
  }

  TEST_CASE("operator derivatives agree with central differences") {
    const BeamConfig cfg;
    const DipoleComponents d = build_dipole_components(cfg.transition);
    const Vec3 r(0.8, 0.15, 1.7);
    const double h = 1e-5;
    const LocalOperators ops(field_polarization(cfg, r), d);
    for (int i = 0; i < 3; ++i) {
      Vec3 dr = Vec3::Zero();
      dr[i] = h;
      const LocalOperators p(field_polarization(cfg, r + dr), d);
      const LocalOperators m(field_polarization(cfg, r - dr), d);
      CHECK(((p.light_shift() - m.light_shift()) / (2 * h) - ops.light_shift_d1(i)).norm() < 1e-8);
      CHECK(((p.b(Channel::Plus) - m.b(Channel::Plus)) / (2 * h) - ops.b_d1(Channel::Plus, i)).norm() < 1e-8);
      for (int j = 0; j < 3; ++j) {
        CHECK(((p.light_shift_d1(j) - m.light_shift_d1(j)) / (2 * h) - ops.light_shift_d2(i, j)).norm() < 1e-8);
        CHECK(((p.b_d1(Channel::X, j) - m.b_d1(Channel::X, j)) / (2 * h) - ops.b_d2(Channel::X, i, j)).norm() < 1e-8);
      }
    }
  }

  TEST_CASE("lattice constants") {
    const LatticeConstants a = lattice_constants(kPi / 4, 852e-9);
    CHECK(a.a_z == doctest::Approx(852e-9 / (2 * std::sqrt(2.0))).epsilon(1e-15));
    CHECK(a.a_xy == doctest::Approx(852e-9 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(lattice_constants(0.5, 852e-9), std::invalid_argument);
  }

  TEST_CASE("depth inversion is exact") {
    for (const double det : {-10.0, -20.0, -30.0}) {
      for (const double u0 : {1.0, 500.0, 3000.0}) {
        const BeamConfig cfg = BeamConfig::for_depth(u0, det);
        CHECK(diabatic_depth(cfg) == doctest::Approx(u0).epsilon(1e-12));
      }
    }
    CHECK(diabatic_contrast(Transition::cesium_d2()) == doctest::Approx(44.0 / 45.0).epsilon(1e-15));
  }

  TEST_CASE("weak-field depth equals the light-shift contrast") {
    // In the linear regime ln(1+x) ~ x, so U0 -> |Delta s0 / 2| * 44/45 up to the
    // Delta^2/(Delta^2 + 1/4) factor of s0.
    const BeamConfig cfg = BeamConfig::for_depth(0.01, -10.0);
    const double delta2 = 100.0;
    CHECK(std::abs(cfg.light_shift_scale()) * (44.0 / 45.0) * (delta2 + 0.25) / delta2 ==
          doctest::Approx(0.01).epsilon(1e-6));
    CHECK(cfg.scattering_rate() == doctest::Approx(std::abs(cfg.light_shift_scale()) / 10.0).epsilon(1e-14));
  }

  TEST_CASE("cesium recoil units") {
    const RecoilUnits u = RecoilUnits::of(Transition::cesium_d2());
    // Reference cesium D2 data: recoil frequency 2.0663 kHz, recoil temperature 198.34 nK = 2 E_R / k_B.
    CHECK(u.recoil_frequency / kTwoPi == doctest::Approx(2066.3).epsilon(1e-4));
    CHECK(2 * u.recoil_temperature() == doctest::Approx(198.34e-9).epsilon(1e-4));
    CHECK(u.mean_p_squared(u.temperature(12.5)) == doctest::Approx(12.5));
    CHECK(u.velocity_per_momentum() == doctest::Approx(3.5225e-3).epsilon(1e-4));
  }

  TEST_CASE("configuration validation") {
    BeamConfig cfg;
    cfg.detuning = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = BeamConfig{};
    cfg.beam_irradiance = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(BeamConfig::for_depth(-5, -10), std::invalid_argument);
  }
}
