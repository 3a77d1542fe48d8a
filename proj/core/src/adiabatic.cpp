#include "sisyphus/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sisyphus {

namespace {

constexpr int kPairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};

using Solver = Eigen::SelfAdjointEigenSolver<CMat>;

CVec combine(const std::array<CVec, 3>& w, const std::array<cd, 3>& c) {
  return c[0] * w[0] + c[1] * w[1] + c[2] * w[2];
}

}  // namespace

Lattice::Lattice(BeamConfig config) : config_(std::move(config)) {
  config_.validate();
  dipoles_ = build_dipole_components(config_.transition);
  scale_ = config_.light_shift_scale();
  gamma_prime_ = config_.scattering_rate();
  depth_ = diabatic_depth(config_);
  cartesian_ = {channel_coefficients(Channel::X), channel_coefficients(Channel::Y), channel_coefficients(Channel::Z)};
  for (int q = -1; q <= 1; ++q) {
    auto& row = band_[static_cast<std::size_t>(q + 1)];
    row.fill(0.0);
    for (int r = 0; r < dipoles_.excited_dim(); ++r) row[static_cast<std::size_t>(r)] = dipoles_.band(q, r);
  }
}

CMat Lattice::coupling(const std::array<cd, 3>& eps) const {
  const int ne = dipoles_.excited_dim();
  const int ng = dipoles_.ground_dim();
  CMat m = CMat::Zero(ne, ng);
  for (int q = -1; q <= 1; ++q) {
    const cd e = eps[static_cast<std::size_t>(q + 1)];
    const auto& b = band(q);
    for (int r = 0; r < ne; ++r) {
      const int c = r - 1 - q;
      if (c >= 0 && c < ng) m(r, c) += e * b[static_cast<std::size_t>(r)];
    }
  }
  return m;
}

// Uses the single nonzero band of each component.
std::array<CVec, 3> emission_amplitudes(const Lattice& lattice, const CVec& phi) {
  const int ne = lattice.dipoles().excited_dim();
  const int ng = lattice.dim();
  std::array<CVec, 3> w;
  for (int q = -1; q <= 1; ++q) {
    CVec& out = w[static_cast<std::size_t>(q + 1)];
    out.setZero(ne);
    const auto& b = lattice.band(q);
    for (int r = 0; r < ne; ++r) {
      const int c = r - 1 - q;
      if (c >= 0 && c < ng) out[r] = b[static_cast<std::size_t>(r)] * phi[c];
    }
  }
  return w;
}

AdiabaticFrame diagonalize(const Lattice& lattice, const Vec3& position) {
  AdiabaticFrame frame;
  frame.position = position;
  frame.dim = lattice.dim();
  frame.field = SphericalField::from(field_polarization(lattice.config(), position));

  const CMat m = lattice.coupling(frame.field.value);
  const CMat h = lattice.light_shift_scale() * (m.adjoint() * m);
  Solver solver(h);
  frame.potentials = solver.eigenvalues();
  frame.states = solver.eigenvectors();

  const double scale = lattice.light_shift_scale();
  for (int n = 0; n < frame.dim; ++n) {
    const auto w = emission_amplitudes(lattice, frame.states.col(n));
    const CVec v = combine(w, frame.field.value);
    for (int i = 0; i < 3; ++i) {
      const CVec vi = combine(w, frame.field.d1[i]);
      frame.gradients[static_cast<std::size_t>(n)][i] = 2.0 * scale * v.dot(vi).real();
    }
  }

  const double range = frame.potentials[frame.dim - 1] - frame.potentials[0];
  for (int n = 0; n + 1 < frame.dim; ++n) {
    if (frame.potentials[n + 1] - frame.potentials[n] <= 1e-8 * range || range == 0.0) {
      frame.near_degenerate |= (1u << n);
    }
  }
  return frame;
}

double lowest_potential(const Lattice& lattice, const Vec3& position) {
  const SphericalField field = SphericalField::from(field_polarization(lattice.config(), position));
  const CMat m = lattice.coupling(field.value);
  const CMat h = lattice.light_shift_scale() * (m.adjoint() * m);
  Solver solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

StateAmplitudes state_amplitudes(const Lattice& lattice, const AdiabaticFrame& frame, int m) {
  StateAmplitudes a;
  a.w = emission_amplitudes(lattice, frame.states.col(m));
  a.v = combine(a.w, frame.field.value);
  for (int i = 0; i < 3; ++i) a.vi[i] = combine(a.w, frame.field.d1[i]);
  for (int p = 0; p < 6; ++p) a.vij[p] = combine(a.w, frame.field.d2[p]);
  return a;
}

double pumping_rate(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to) {
  double sum = 0;
  for (const auto& w : to.w) sum += std::norm(w.dot(from.v));
  return lattice.scattering_rate() * sum;
}

Vec3 radiation_pressure(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to) {
  // Sign chosen so that a single travelling wave pushes along its wavevector.
  Vec3 f = Vec3::Zero();
  for (std::size_t q = 0; q < 3; ++q) {
    const cd b = from.v.dot(to.w[q]);  // <Phi_from| B_q |Phi_to>
    for (int i = 0; i < 3; ++i) {
      const cd db_dag = to.w[q].dot(from.vi[i]);  // <Phi_to| d_i B_q^dagger |Phi_from>
      f[i] += (db_dag * b).imag();
    }
  }
  return lattice.scattering_rate() * f;
}

Mat3 diffusion_matrix(const Lattice& lattice, const StateAmplitudes& from, const StateAmplitudes& to, bool diagonal) {
  Mat3 d = Mat3::Zero();

  if (diagonal) {
    for (int p = 0; p < 6; ++p) {
      const int i = kPairs[p][0];
      const int j = kPairs[p][1];
      const double curvature = 2.0 * (from.v.dot(from.vij[p]) + from.vi[i].dot(from.vi[j])).real();
      d(i, j) += curvature / 8.0;
      if (i != j) d(j, i) += curvature / 8.0;
    }
  }

  // Spontaneous emission restricted to the three Cartesian axes.
  std::array<double, 3> axis_rate{};
  for (int u = 0; u < 3; ++u) {
    const CVec wu = combine(to.w, lattice.cartesian_channels()[static_cast<std::size_t>(u)]);
    axis_rate[static_cast<std::size_t>(u)] = std::norm(from.v.dot(wu));
  }
  for (int i = 0; i < 3; ++i) {
    double sum = 0;
    for (int u = 0; u < 3; ++u) {
      if (u != i) sum += axis_rate[static_cast<std::size_t>(u)];
    }
    d(i, i) += sum / 4.0;
  }

  // Absorption recoil and dipole-force fluctuations.
  for (std::size_t q = 0; q < 3; ++q) {
    const cd b = from.v.dot(to.w[q]);
    std::array<cd, 3> a{};
    for (int i = 0; i < 3; ++i) a[static_cast<std::size_t>(i)] = to.w[q].dot(from.vi[i]);
    for (int p = 0; p < 6; ++p) {
      const int i = kPairs[p][0];
      const int j = kPairs[p][1];
      const cd second = to.w[q].dot(from.vij[p]);
      const double term =
          -2.0 * (second * b - a[static_cast<std::size_t>(i)] * std::conj(a[static_cast<std::size_t>(j)])).real() / 8.0;
      d(i, j) += term;
      if (i != j) d(j, i) += term;
    }
  }
  return lattice.scattering_rate() * d;
}

ClippedDiffusion clip_diffusion(const Mat3& raw) {
  ClippedDiffusion out;
  const Mat3 sym = 0.5 * (raw + raw.transpose());
  const double norm = sym.norm();
  if (norm == 0.0) return out;
  Eigen::SelfAdjointEigenSolver<Mat3> solver(sym);
  const Vec3 values = solver.eigenvalues();
  out.axes = solver.eigenvectors();
  // Fix the sign of each axis so kicks depend on D only, not on solver round-off.
  for (int c = 0; c < 3; ++c) {
    Eigen::Index i = 0;
    out.axes.col(c).cwiseAbs().maxCoeff(&i);
    if (out.axes(i, c) < 0) out.axes.col(c) *= -1.0;
  }
  out.clip = std::min(0.0, values.minCoeff() / norm);
  out.variances = values.cwiseMax(0.0);
  out.matrix = out.axes * out.variances.asDiagonal() * out.axes.transpose();
  return out;
}

RateMatrix pumping_rates(const Lattice& lattice, const AdiabaticFrame& frame) {
  std::array<StateAmplitudes, kMaxGroundDim> amps;
  for (int n = 0; n < frame.dim; ++n) amps[static_cast<std::size_t>(n)] = state_amplitudes(lattice, frame, n);
  RateMatrix gamma(frame.dim, frame.dim);
  for (int n = 0; n < frame.dim; ++n) {
    for (int m = 0; m < frame.dim; ++m) {
      gamma(n, m) = pumping_rate(lattice, amps[static_cast<std::size_t>(n)], amps[static_cast<std::size_t>(m)]);
    }
  }
  return gamma;
}

CoefficientTable coefficient_table(const Lattice& lattice, const AdiabaticFrame& frame) {
  std::array<StateAmplitudes, kMaxGroundDim> amps;
  for (int n = 0; n < frame.dim; ++n) amps[static_cast<std::size_t>(n)] = state_amplitudes(lattice, frame, n);

  CoefficientTable t;
  t.dim = frame.dim;
  t.gamma.resize(frame.dim, frame.dim);
  for (int n = 0; n < frame.dim; ++n) {
    const auto& from = amps[static_cast<std::size_t>(n)];
    for (int m = 0; m < frame.dim; ++m) {
      const auto& to = amps[static_cast<std::size_t>(m)];
      const auto un = static_cast<std::size_t>(n);
      const auto um = static_cast<std::size_t>(m);
      t.gamma(n, m) = pumping_rate(lattice, from, to);
      t.force[un][um] = radiation_pressure(lattice, from, to);
      t.raw_diffusion[un][um] = diffusion_matrix(lattice, from, to, n == m);
      const ClippedDiffusion clipped = clip_diffusion(t.raw_diffusion[un][um]);
      t.diffusion[un][um] = clipped.matrix;
      t.worst_clip = std::min(t.worst_clip, clipped.clip);
    }
  }
  return t;
}

Alignment align_continuity(const AdiabaticFrame& previous, const AdiabaticFrame& next) {
  if (previous.dim != next.dim) throw std::invalid_argument("frames have different dimensions");
  const int n = previous.dim;
  const CMat overlap = previous.states.adjoint() * next.states;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxGroundDim, kMaxGroundDim> weight =
      overlap.cwiseAbs2();

  Alignment out;
  std::array<bool, kMaxGroundDim> used_old{};
  std::array<bool, kMaxGroundDim> used_new{};
  for (int step = 0; step < n; ++step) {
    double best = -1.0;
    int bi = 0;
    int bj = 0;
    for (int i = 0; i < n; ++i) {
      if (used_old[static_cast<std::size_t>(i)]) continue;
      for (int j = 0; j < n; ++j) {
        if (used_new[static_cast<std::size_t>(j)]) continue;
        const double a = weight(i, j);
        if (a > best) {
          best = a;
          bi = i;
          bj = j;
        }
      }
    }
    used_old[static_cast<std::size_t>(bi)] = true;
    used_new[static_cast<std::size_t>(bj)] = true;
    out.permutation[static_cast<std::size_t>(bi)] = bj;
    out.min_overlap = std::min(out.min_overlap, std::sqrt(best));
  }

  if (out.min_overlap < 0.5) {
    out.fallback = true;
    for (int i = 0; i < n; ++i) out.permutation[static_cast<std::size_t>(i)] = i;
  }
  for (int i = 0; i < n; ++i) {
    const cd o = overlap(i, out.permutation[static_cast<std::size_t>(i)]);
    const double a = std::abs(o);
    out.phases[static_cast<std::size_t>(i)] = a > 0.0 ? std::conj(o) / a : cd(1.0);
  }
  return out;
}

namespace {

Mat3 hessian_at(const Lattice& lattice, const Vec3& r, double h) {
  Mat3 hess;
  for (int j = 0; j < 3; ++j) {
    Vec3 dr = Vec3::Zero();
    dr[j] = h;
    const Vec3 gp = diagonalize(lattice, r + dr).gradient(0);
    const Vec3 gm = diagonalize(lattice, r - dr).gradient(0);
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

// Largest barrier encountered walking from `start` along `dir` for `length`,
// refined by golden-section search around the best grid sample.
double segment_maximum(const Lattice& lattice, const Vec3& start, const Vec3& dir, double length, int samples) {
  auto u = [&](double t) { return lowest_potential(lattice, start + t * dir); };
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  const double h = length / samples;
  for (int k = 0; k <= samples; ++k) {
    const double value = u(k * h);
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  double lo = std::max(0.0, (best - 1) * h);
  double hi = std::min(length, (best + 1) * h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - g * (hi - lo);
  double b = lo + g * (hi - lo);
  double fa = u(a);
  double fb = u(b);
  for (int it = 0; it < 60; ++it) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = u(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = u(b);
    }
  }
  return std::max({best_value, fa, fb});
}

}  // namespace

WellCharacter well_characterization(const Lattice& lattice, int points_per_az) {
  if (points_per_az < 20) throw std::invalid_argument("scan resolution must resolve a_z/20");
  const LatticeConstants a = lattice_constants(lattice.config().theta, kTwoPi);  // lengths in 1/k

  // Coarse search over one conventional cell.
  constexpr int kCoarse = 12;
  Vec3 best = Vec3::Zero();
  double best_value = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix < 2 * kCoarse; ++ix) {
    for (int iy = 0; iy < 2 * kCoarse; ++iy) {
      for (int iz = 0; iz < 2 * kCoarse; ++iz) {
        const Vec3 r(ix * a.a_xy / (2 * kCoarse), iy * a.a_xy / (2 * kCoarse), iz * a.a_z / kCoarse);
        const double value = lowest_potential(lattice, r);
        if (value < best_value) {
          best_value = value;
          best = r;
        }
      }
    }
  }

  // Newton refinement on the analytic gradient.
  const double h = 1e-4;
  Vec3 r = best;
  for (int it = 0; it < 50; ++it) {
    const Vec3 g = diagonalize(lattice, r).gradient(0);
    const Mat3 hess = hessian_at(lattice, r, h);
    const Vec3 step = hess.ldlt().solve(g);
    r -= step;
    if (step.norm() < 1e-12) break;
  }

  WellCharacter out;
  out.minimum = r;
  out.minimum_potential = lowest_potential(lattice, r);
  out.hessian = hessian_at(lattice, r, h);
  for (int i = 0; i < 3; ++i) out.frequencies[i] = std::sqrt(std::max(0.0, 2.0 * out.hessian(i, i)));

  auto barrier = [&](const Vec3& dir, double length, int samples) {
    const double plus = segment_maximum(lattice, r, dir, length, samples);
    const double minus = segment_maximum(lattice, r, -dir, length, samples);
    return std::min(plus, minus) - out.minimum_potential;
  };
  out.barrier_x = barrier(Vec3::UnitX(), a.a_xy, 2 * points_per_az);
  out.barrier_z = barrier(Vec3::UnitZ(), a.a_z, points_per_az);
  out.barrier_ratio = out.barrier_x / out.barrier_z;
  return out;
}

}  // namespace sisyphus
