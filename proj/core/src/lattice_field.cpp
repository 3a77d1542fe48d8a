#include "sisyphus/lattice_field.hpp"

#include <cmath>
#include <stdexcept>

namespace sisyphus {

namespace {

constexpr int kPairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

}  // namespace

RecoilUnits RecoilUnits::of(const Transition& transition) {
  RecoilUnits u;
  u.wavenumber = kTwoPi / transition.wavelength;
  u.mass = transition.mass;
  const double p = si::hbar * u.wavenumber;
  u.recoil_energy = p * p / (2.0 * transition.mass);
  u.recoil_frequency = u.recoil_energy / si::hbar;
  return u;
}

double RecoilUnits::velocity_per_momentum() const { return si::hbar * wavenumber / mass; }

double RecoilUnits::temperature(double mean_p_squared) const {
  return 2.0 * recoil_energy * mean_p_squared / si::boltzmann;
}

double RecoilUnits::mean_p_squared(double kelvin) const {
  return kelvin * si::boltzmann / (2.0 * recoil_energy);
}

double RecoilUnits::recoil_temperature() const { return recoil_energy / si::boltzmann; }

void BeamConfig::validate() const {
  transition.validate();
  if (!(theta > 0.0 && theta < kPi / 2)) throw std::invalid_argument("beam angle must lie in (0, pi/2)");
  if (!std::isfinite(detuning) || detuning == 0.0) throw std::invalid_argument("detuning must be finite and nonzero");
  if (!(beam_irradiance >= 0.0) || !std::isfinite(beam_irradiance)) {
    throw std::invalid_argument("beam irradiance must be finite and non-negative");
  }
}

double BeamConfig::rabi_squared() const {
  return 0.5 * total_irradiance() / transition.saturation_irradiance;
}

double BeamConfig::saturation() const {
  return 0.5 * rabi_squared() / (detuning * detuning + 0.25);
}

double BeamConfig::linewidth_internal() const {
  return transition.linewidth / RecoilUnits::of(transition).recoil_frequency;
}

double BeamConfig::scattering_rate() const { return 0.5 * linewidth_internal() * saturation(); }

double BeamConfig::light_shift_scale() const { return 0.5 * detuning * linewidth_internal() * saturation(); }

BeamConfig BeamConfig::for_depth(double depth_recoil, double detuning, Transition transition) {
  if (!(depth_recoil >= 0.0)) throw std::invalid_argument("depth must be non-negative");
  BeamConfig c;
  c.detuning = detuning;
  c.transition = transition;
  const double half_width = 0.5 * std::abs(detuning) * c.linewidth_internal();
  // Invert U0 = (|D|/2) ln(1 + f Omega^2 / 2 D^2) with Omega^2/2D^2 = (I/I0) / 4D^2.
  const double ratio = std::expm1(depth_recoil / half_width) / diabatic_contrast(transition);
  const double total = ratio * 4.0 * detuning * detuning * transition.saturation_irradiance;
  c.beam_irradiance = total / 8.0;
  c.validate();
  return c;
}

double diabatic_contrast(const Transition& transition) {
  const double two_jg = 2.0 * transition.jg;
  return 1.0 - 2.0 / ((two_jg + 1.0) * (two_jg + 2.0));
}

double diabatic_depth(const BeamConfig& config) {
  const double half_width = 0.5 * std::abs(config.detuning) * config.linewidth_internal();
  const double omega_over_2delta_sq =
      config.rabi_squared() / (2.0 * config.detuning * config.detuning);
  return half_width * std::log1p(diabatic_contrast(config.transition) * omega_over_2delta_sq);
}

LatticeConstants lattice_constants(double theta, double wavelength) {
  if (std::abs(theta - kPi / 4) > 1e-12) {
    throw std::invalid_argument("lattice constants are only available for theta = pi/4");
  }
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  return {wavelength / (2.0 * std::sqrt(2.0)), wavelength / std::sqrt(2.0)};
}

FieldSample field_polarization(const BeamConfig& config, const Vec3& position) {
  const double s = std::sin(config.theta);
  const double c = std::cos(config.theta);
  const double amplitude = 1.0 / std::sqrt(8.0);

  struct Beam {
    Vec3 k;
    CVec3 pol;
  };
  const CVec3 x_hat(1.0, 0.0, 0.0);
  const CVec3 y_hat(0.0, 1.0, 0.0);
  const std::array<Beam, 4> beams = {{
      {Vec3(s, 0.0, c), y_hat},
      {Vec3(-s, 0.0, c), y_hat},
      {Vec3(0.0, s, -c), x_hat},
      {Vec3(0.0, -s, -c), x_hat},
  }};

  FieldSample out;
  out.position = position;
  for (const auto& beam : beams) {
    const double phase = beam.k.dot(position);
    const CVec3 term = amplitude * std::polar(1.0, phase) * beam.pol;
    out.epsilon += term;
    for (int i = 0; i < 3; ++i) {
      out.d1[i] += cd(0.0, beam.k[i]) * term;
      for (int j = 0; j < 3; ++j) out.d2[i][j] -= beam.k[i] * beam.k[j] * term;
    }
  }
  return out;
}

CVec3 spherical_unit(int q) {
  switch (q) {
    case -1:
      return CVec3(kInvSqrt2, cd(0.0, -kInvSqrt2), 0.0);
    case 0:
      return CVec3(0.0, 0.0, 1.0);
    case 1:
      return CVec3(-kInvSqrt2, cd(0.0, -kInvSqrt2), 0.0);
    default:
      throw std::invalid_argument("spherical index must be -1, 0 or +1");
  }
}

namespace {

std::array<cd, 3> to_spherical(const CVec3& v) {
  // eps_q = e_q^* . v
  return {(v.x() + cd(0, 1) * v.y()) * kInvSqrt2, v.z(), -(v.x() - cd(0, 1) * v.y()) * kInvSqrt2};
}

}  // namespace

SphericalField SphericalField::from(const CVec3& epsilon) {
  SphericalField f;
  f.value = to_spherical(epsilon);
  return f;
}

SphericalField SphericalField::from(const FieldSample& sample) {
  SphericalField f;
  f.value = to_spherical(sample.epsilon);
  for (int i = 0; i < 3; ++i) f.d1[i] = to_spherical(sample.d1[i]);
  for (int p = 0; p < 6; ++p) f.d2[p] = to_spherical(sample.d2[kPairs[p][0]][kPairs[p][1]]);
  return f;
}

std::array<cd, 3> channel_coefficients(Channel channel) {
  CVec3 e;
  switch (channel) {
    case Channel::Minus:
      return {1.0, 0.0, 0.0};
    case Channel::Zero:
      return {0.0, 1.0, 0.0};
    case Channel::Plus:
      return {0.0, 0.0, 1.0};
    case Channel::X:
      e = CVec3(1.0, 0.0, 0.0);
      break;
    case Channel::Y:
      e = CVec3(0.0, 1.0, 0.0);
      break;
    case Channel::Z:
      e = CVec3(0.0, 0.0, 1.0);
      break;
    default:
      throw std::invalid_argument("unknown emission channel");
  }
  return to_spherical(e);
}

namespace {

CMat combine(const DipoleComponents& dipoles, const std::array<cd, 3>& coeff) {
  CMat out = CMat::Zero(dipoles.excited_dim(), dipoles.ground_dim());
  for (int q = -1; q <= 1; ++q) {
    const cd c = coeff[static_cast<std::size_t>(q + 1)];
    if (c != cd(0.0)) out += c * dipoles.plus(q).cast<cd>();
  }
  return out;
}

}  // namespace

LocalOperators::LocalOperators(const FieldSample& sample, const DipoleComponents& dipoles) : dipoles_(&dipoles) {
  const SphericalField f = SphericalField::from(sample);
  m_ = combine(dipoles, f.value);
  for (int i = 0; i < 3; ++i) dm_[i] = combine(dipoles, f.d1[i]);
  for (int p = 0; p < 6; ++p) d2m_[p] = combine(dipoles, f.d2[p]);
}

CMat LocalOperators::light_shift() const { return m_.adjoint() * m_; }

CMat LocalOperators::light_shift_d1(int i) const {
  CMat t = dm_[i].adjoint() * m_;
  return t + t.adjoint();
}

CMat LocalOperators::light_shift_d2(int i, int j) const {
  const int p = pair_index(i, j);
  CMat t = d2m_[p].adjoint() * m_ + dm_[i].adjoint() * dm_[j];
  return t + t.adjoint();
}

CMat LocalOperators::emission(Channel c) const { return combine(*dipoles_, channel_coefficients(c)); }

CMat LocalOperators::b(Channel c) const { return m_.adjoint() * emission(c); }

CMat LocalOperators::b_d1(Channel c, int i) const { return dm_[i].adjoint() * emission(c); }

CMat LocalOperators::b_d2(Channel c, int i, int j) const { return d2m_[pair_index(i, j)].adjoint() * emission(c); }

CMat light_shift_operator(const FieldSample& sample, const DipoleComponents& dipoles) {
  return LocalOperators(sample, dipoles).light_shift();
}

}  // namespace sisyphus
