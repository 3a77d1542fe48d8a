#include "sisyphus/langevin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "sisyphus/hash.hpp"
#include "sisyphus/units.hpp"

namespace sisyphus {

namespace {

// Streams at or above this value are reserved for run-level sampling.
constexpr std::uint64_t kServiceStream = 1ull << 63;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec3 cell_extent(const Lattice& lattice) {
  const LatticeConstants a = lattice_constants(lattice.config().theta, kTwoPi);
  return {a.a_xy, a.a_xy, 2.0 * a.a_z};
}

}  // namespace

void SimParams::validate() const {
  if (atoms < 2) throw std::invalid_argument("need at least two atoms");
  if (!(dt >= 0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be finite and non-negative");
  if (!(equilibration >= 0) || !std::isfinite(equilibration)) throw std::invalid_argument("equilibration time must be >= 0");
  if (!(averaging > 0) || !std::isfinite(averaging)) throw std::invalid_argument("averaging time must be positive");
  if (!(initial_temperature >= 0) || !std::isfinite(initial_temperature)) {
    throw std::invalid_argument("initial temperature must be finite and non-negative");
  }
  if (snapshot_samples < 1) throw std::invalid_argument("snapshot samples per atom must be >= 1");
  if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
  if (max_refinements < 0) throw std::invalid_argument("max refinements must be >= 0");
}

Integrator::Integrator(const Lattice& lattice, double dt, bool stochastic)
    : lattice_(&lattice), dt_(dt), stochastic_(stochastic) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
}

void Integrator::attach(const AtomState& atom) { frame_ = diagonalize(*lattice_, atom.position); }

double Integrator::energy(const AtomState& atom) const {
  return atom.momentum.squaredNorm() + frame_.potential(atom.level);
}

StepInfo Integrator::step(AtomState& atom) {
  StepInfo info;
  info.from = atom.level;

  atom.momentum -= 0.5 * dt_ * frame_.gradient(atom.level);
  atom.position += 2.0 * dt_ * atom.momentum;
  AdiabaticFrame next = diagonalize(*lattice_, atom.position);
  const Alignment align = align_continuity(frame_, next);
  atom.level = align.permutation[static_cast<std::size_t>(atom.level)];
  info.fallback = align.fallback;
  frame_ = std::move(next);
  atom.momentum -= 0.5 * dt_ * frame_.gradient(atom.level);

  if (stochastic_) {
    const Lattice& lattice = *lattice_;
    const StateAmplitudes from = state_amplitudes(lattice, frame_, atom.level);
    std::array<StateAmplitudes, kMaxGroundDim> to;
    std::array<double, kMaxGroundDim> rates{};
    for (int n = 0; n < frame_.dim; ++n) {
      auto& t = to[static_cast<std::size_t>(n)];
      t.w = n == atom.level ? from.w : emission_amplitudes(lattice, frame_.states.col(n));
      rates[static_cast<std::size_t>(n)] = pumping_rate(lattice, from, t);
    }
    const int level = atom.level;
    const KickOutcome kick = stochastic_kick(atom, rates, frame_.dim, dt_, [&](int n) {
      KickChannel ch;
      if (n == level) {
        ch.force = radiation_pressure(lattice, from, from);
        ch.diffusion = clip_diffusion(diffusion_matrix(lattice, from, from, true));
      } else {
        const auto& t = to[static_cast<std::size_t>(n)];
        ch.force = radiation_pressure(lattice, from, t);
        ch.diffusion = clip_diffusion(diffusion_matrix(lattice, from, t, false));
      }
      return ch;
    });
    info.jumped = kick.target >= 0;
    info.departure_probability = kick.departure_probability;
    info.clip = kick.clip;
  }
  info.to = atom.level;
  if (!atom.momentum.allFinite() || !atom.position.allFinite()) atom.aborted = true;
  return info;
}

std::array<double, kMaxGroundDim> departure_rates(const Lattice& lattice, const AdiabaticFrame& frame, int from) {
  const StateAmplitudes a = state_amplitudes(lattice, frame, from);
  std::array<double, kMaxGroundDim> rates{};
  for (int n = 0; n < frame.dim; ++n) {
    StateAmplitudes t;
    t.w = emission_amplitudes(lattice, frame.states.col(n));
    rates[static_cast<std::size_t>(n)] = pumping_rate(lattice, a, t);
  }
  return rates;
}

std::vector<AtomState> initialize_ensemble(const Lattice& lattice, const SimParams& params) {
  params.validate();
  const Vec3 cell = cell_extent(lattice);
  const RecoilUnits units = RecoilUnits::of(lattice.config().transition);
  const double sigma_p = std::sqrt(units.mean_p_squared(params.initial_temperature));

  std::vector<AtomState> atoms(static_cast<std::size_t>(params.atoms));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    AtomState& a = atoms[i];
    a.index = i;
    a.rng.reseed(params.seed, i);
    for (int k = 0; k < 3; ++k) a.position[k] = cell[k] * a.uniform();
    for (int k = 0; k < 3; ++k) a.momentum[k] = sigma_p * a.gaussian();
    a.level = 0;
  }
  return atoms;
}

double estimate_max_departure(const Lattice& lattice, std::uint64_t seed) {
  Philox4x32 rng(seed, kServiceStream);
  const Vec3 cell = cell_extent(lattice);
  double best = 0;
  for (int k = 0; k < 100; ++k) {
    Vec3 r;
    for (int i = 0; i < 3; ++i) r[i] = cell[i] * rng.uniform();
    const AdiabaticFrame frame = diagonalize(lattice, r);
    const RateMatrix gamma = pumping_rates(lattice, frame);
    for (int n = 0; n < frame.dim; ++n) best = std::max(best, gamma.row(n).sum() - gamma(n, n));
  }
  return best;
}

StepChoice choose_step(const Lattice& lattice, std::uint64_t seed) {
  StepChoice c;
  c.gamma_max = estimate_max_departure(lattice, seed);
  const WellCharacter well = well_characterization(lattice, 20);
  c.vibration_period = kTwoPi / well.frequencies.maxCoeff();
  c.dt = c.vibration_period / 40.0;
  if (c.gamma_max > 0) c.dt = std::min(c.dt, 0.05 / c.gamma_max);
  return c;
}

std::string describe(const Lattice& lattice, const SimParams& params) {
  const BeamConfig& b = lattice.config();
  const Transition& t = b.transition;
  std::string s;
  s += "theta=" + g17(b.theta) + ";detuning=" + g17(b.detuning) + ";beam_irradiance=" + g17(b.beam_irradiance);
  s += ";jg=" + g17(t.jg) + ";je=" + g17(t.je) + ";wavelength=" + g17(t.wavelength) + ";linewidth=" +
       g17(t.linewidth) + ";saturation_irradiance=" + g17(t.saturation_irradiance) + ";mass=" + g17(t.mass);
  s += ";atoms=" + std::to_string(params.atoms) + ";dt=" + g17(params.dt) + ";equilibration=" +
       g17(params.equilibration) + ";averaging=" + g17(params.averaging) + ";initial_temperature=" +
       g17(params.initial_temperature) + ";seed=" + std::to_string(params.seed) + ";snapshot_samples=" +
       std::to_string(params.snapshot_samples) + ";max_refinements=" + std::to_string(params.max_refinements);
  return s;
}

namespace {

struct AtomTally {
  std::array<double, 3> p2{};  // summed over averaging steps
  double first_half = 0;       // mean |P|^2
  double second_half = 0;
  long long jumps = 0;
  long long guard_trips = 0;
  double max_probability = 0;
  long long clip_alarms = 0;
  double worst_clip = 0;
  long long fallbacks = 0;
  bool aborted = false;
  std::vector<SnapshotRow> samples;
};

AtomTally run_atom(const Lattice& lattice, AtomState atom, double dt, long long n_eq, long long n_avg, int samples) {
  AtomTally tally;
  Integrator integrator(lattice, dt);
  integrator.attach(atom);

  auto account = [&](const StepInfo& info) {
    if (info.jumped) ++tally.jumps;
    if (info.departure_probability > kJumpGuard) ++tally.guard_trips;
    tally.max_probability = std::max(tally.max_probability, info.departure_probability);
    if (info.clip < -kDiffusionAlarm) ++tally.clip_alarms;
    tally.worst_clip = std::min(tally.worst_clip, info.clip);
    if (info.fallback) ++tally.fallbacks;
  };

  for (long long s = 0; s < n_eq && !atom.aborted; ++s) account(integrator.step(atom));

  const long long half = n_avg / 2;
  int next_sample = 0;
  for (long long s = 0; s < n_avg && !atom.aborted; ++s) {
    account(integrator.step(atom));
    const Vec3& p = atom.momentum;
    for (int i = 0; i < 3; ++i) tally.p2[static_cast<std::size_t>(i)] += p[i] * p[i];
    (s < half ? tally.first_half : tally.second_half) += p.squaredNorm();
    while (next_sample < samples && s == (next_sample + 1) * n_avg / samples - 1) {
      tally.samples.push_back({atom.index, atom.position, atom.momentum, atom.level});
      ++next_sample;
    }
  }
  tally.aborted = atom.aborted;
  tally.first_half /= static_cast<double>(std::max<long long>(half, 1));
  tally.second_half /= static_cast<double>(std::max<long long>(n_avg - half, 1));
  return tally;
}

std::vector<AtomTally> run_atoms(const Lattice& lattice, const std::vector<AtomState>& atoms, double dt,
                                 long long n_eq, long long n_avg, int samples, int workers) {
  std::vector<AtomTally> tallies(atoms.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < atoms.size(); i = next.fetch_add(1)) {
      tallies[i] = run_atom(lattice, atoms[i], dt, n_eq, n_avg, samples);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), atoms.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return tallies;
}

}  // namespace

EnsembleResult run_ensemble(const Lattice& lattice, const SimParams& params) {
  params.validate();
  const RecoilUnits units = RecoilUnits::of(lattice.config().transition);

  EnsembleResult result;
  TemperatureRecord& rec = result.record;
  EnsembleDiagnostics& diag = rec.diagnostics;
  rec.depth = lattice.depth();
  rec.detuning = lattice.config().detuning;

  double base_dt = params.dt;
  if (base_dt > 0) {
    diag.gamma_max = estimate_max_departure(lattice, params.seed);
  } else {
    const StepChoice choice = choose_step(lattice, params.seed);
    base_dt = choice.dt;
    diag.gamma_max = choice.gamma_max;
    diag.vibration_period = choice.vibration_period;
  }

  const std::vector<AtomState> atoms = initialize_ensemble(lattice, params);
  const double rate = lattice.scattering_rate();
  std::vector<AtomTally> tallies;
  double dt = base_dt;
  for (int r = 0;; ++r) {
    dt = base_dt / std::ldexp(1.0, r);
    diag.refinements = r;
    diag.equilibration_steps = static_cast<long long>(std::ceil(params.equilibration / rate / dt));
    diag.averaging_steps = std::max<long long>(2, static_cast<long long>(std::ceil(params.averaging / rate / dt)));
    tallies = run_atoms(lattice, atoms, dt, diag.equilibration_steps, diag.averaging_steps, params.snapshot_samples,
                        params.workers);
    long long trips = 0;
    for (const auto& t : tallies) trips += t.guard_trips;
    diag.guard_trips = trips;
    if (trips == 0 || r >= params.max_refinements) break;
  }
  diag.dt = dt;

  // In-order reduction keeps the result independent of scheduling.
  std::array<double, 3> sum{};
  std::array<double, 3> sum2{};
  double drift = 0;
  double drift2 = 0;
  long long jumps = 0;
  int used = 0;
  const auto n_avg = static_cast<double>(diag.averaging_steps);
  for (const auto& t : tallies) {
    diag.max_departure_probability = std::max(diag.max_departure_probability, t.max_probability);
    diag.clip_alarms += t.clip_alarms;
    diag.worst_clip = std::min(diag.worst_clip, t.worst_clip);
    diag.alignment_fallbacks += t.fallbacks;
    if (t.aborted) {
      ++diag.aborted_atoms;
      continue;
    }
    ++used;
    jumps += t.jumps;
    for (std::size_t i = 0; i < 3; ++i) {
      const double m = t.p2[i] / n_avg;
      sum[i] += m;
      sum2[i] += m * m;
    }
    const double d = t.second_half - t.first_half;
    drift += d;
    drift2 += d * d;
  }

  if (used >= 2) {
    const double n = used;
    double per_axis = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double mean = sum[i] / n;
      const double var = std::max(0.0, (sum2[i] / n - mean * mean) * n / (n - 1.0));
      rec.temperature[i] = units.temperature(mean);
      rec.temperature_error[i] = units.temperature(std::sqrt(var / n));
      per_axis += mean;
    }
    diag.kinetic_total_over_depth = per_axis / rec.depth;
    diag.kinetic_per_axis_over_depth = per_axis / 3.0 / rec.depth;
    diag.jumps_per_atom = static_cast<double>(jumps) / n;
    diag.kinetic_drift = drift / n;
    const double var = std::max(0.0, (drift2 / n - diag.kinetic_drift * diag.kinetic_drift) * n / (n - 1.0));
    diag.kinetic_drift_error = std::sqrt(var / n);
    if (std::abs(diag.kinetic_drift) > 2.0 * diag.kinetic_drift_error) rec.flags.push_back("not_equilibrated");
  } else {
    rec.temperature.fill(std::nan(""));
    rec.temperature_error.fill(std::nan(""));
    rec.flags.push_back("too_few_atoms");
  }
  if (diag.aborted_atoms > 0) rec.flags.push_back("aborted_atoms");
  if (diag.guard_trips > 0) rec.flags.push_back("jump_guard");

  Snapshot& snap = result.snapshot;
  snap.seed = params.seed;
  snap.params_hash = hex64(fnv1a64(describe(lattice, params)));
  snap.length_unit_m = 1.0 / units.wavenumber;
  snap.momentum_unit_kg_m_s = si::hbar * units.wavenumber;
  snap.mass_kg = units.mass;
  snap.wavelength_m = lattice.config().transition.wavelength;
  snap.detuning_gamma = rec.detuning;
  snap.depth_recoil = rec.depth;
  snap.time_internal = dt * static_cast<double>(diag.equilibration_steps + diag.averaging_steps);
  snap.samples_per_atom = params.snapshot_samples;
  for (const auto& t : tallies) {
    if (t.aborted) continue;
    snap.rows.insert(snap.rows.end(), t.samples.begin(), t.samples.end());
  }
  return result;
}

std::uint64_t record_seed(std::uint64_t master, double detuning, double depth) {
  return splitmix64(master ^ fnv1a64(g17(detuning) + "|" + g17(depth)));
}

SweepResult sweep(const SweepPlan& plan, const SimParams& params, const SweepProgress& progress) {
  if (plan.detunings.empty()) throw std::invalid_argument("sweep needs at least one detuning");
  if (plan.depths.size() < 3) throw std::invalid_argument("sweep needs at least three depths per detuning");
  SweepResult out;
  std::array<std::vector<ScalingPoint>, 3> pooled;
  for (const double detuning : plan.detunings) {
    std::array<std::vector<ScalingPoint>, 3> points;
    for (const double depth : plan.depths) {
      BeamConfig config = BeamConfig::for_depth(depth, detuning, plan.transition);
      config.theta = plan.theta;
      const Lattice lattice(config);
      SimParams p = params;
      p.seed = record_seed(params.seed, detuning, depth);
      EnsembleResult r = run_ensemble(lattice, p);
      if (progress) progress(r.record);
      for (std::size_t i = 0; i < 3; ++i) {
        const ScalingPoint sp{r.record.depth, r.record.temperature[i], r.record.temperature_error[i]};
        if (std::isfinite(sp.temperature)) {
          points[i].push_back(sp);
          pooled[i].push_back(sp);
        }
      }
      out.ensembles.push_back(std::move(r));
    }
    DetuningFits fits;
    fits.detuning = detuning;
    for (std::size_t i = 0; i < 3; ++i) fits.axes[i] = linear_scaling_fit(points[i]);
    out.per_detuning.push_back(fits);
  }
  for (std::size_t i = 0; i < 3; ++i) out.pooled[i] = linear_scaling_fit(pooled[i]);
  return out;
}

}  // namespace sisyphus
