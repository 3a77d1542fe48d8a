#include "sisyphus_app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include <sisyphus/hash.hpp>
#include <sisyphus/units.hpp>

namespace sisyphus::app {

using nlohmann::json;

namespace {

// Walks one JSON object, rejecting keys that are never read.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  void read_number(const char* key, double& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    out = it->get<double>();
  }

  void read_integer(const char* key, int& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    out = it->get<int>();
  }

  void read_numbers(const char* key, std::vector<double>& out) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_array()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
    out.clear();
    for (const auto& v : *it) {
      if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected an array of numbers");
      out.push_back(v.get<double>());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

json serialize(const RunConfig& c) {
  json j;
  j["transition"] = {{"jg", c.transition.jg},
                     {"je", c.transition.je},
                     {"wavelength_nm", c.transition.wavelength_nm},
                     {"linewidth_over_2pi_MHz", c.transition.linewidth_over_2pi_MHz},
                     {"saturation_irradiance_W_per_m2", c.transition.saturation_irradiance_W_per_m2},
                     {"mass_amu", c.transition.mass_amu}};
  j["lattice"] = {{"theta_deg", c.theta_deg}};
  j["sweep"] = {{"detunings_Gamma", c.detunings_Gamma}, {"depths_Er", c.depths_Er}};
  const auto& s = c.simulation;
  j["simulation"] = {{"atoms", s.atoms},
                     {"dt_hbar_over_Er", s.dt_hbar_over_Er},
                     {"equilibration_over_Gamma_prime", s.equilibration_over_Gamma_prime},
                     {"averaging_over_Gamma_prime", s.averaging_over_Gamma_prime},
                     {"initial_temperature_uK", s.initial_temperature_uK},
                     {"seed", s.seed},
                     {"snapshot_samples_per_atom", s.snapshot_samples_per_atom},
                     {"max_dt_refinements", s.max_dt_refinements}};
  j["thermometry"] = {{"tau_ms", c.thermometry.tau_ms},
                      {"gravity_m_per_s2", c.thermometry.gravity_m_per_s2},
                      {"write_snapshots", c.thermometry.write_snapshots}};
  const auto& sc = c.scan;
  j["scan"] = {{"plane", sc.plane},
               {"points_per_lattice_constant", sc.points_per_lattice_constant},
               {"cells", sc.cells},
               {"offset_over_lambda", sc.offset_over_lambda},
               {"all_levels", sc.all_levels},
               {"detuning_Gamma", sc.detuning_Gamma},
               {"depth_Er", sc.depth_Er}};
  j["output"] = {{"directory", c.output_directory}};
  j["workers"] = c.workers;
  return j;
}

}  // namespace

Transition RunConfig::physical_transition() const {
  Transition t;
  t.jg = transition.jg;
  t.je = transition.je;
  t.wavelength = transition.wavelength_nm * 1e-9;
  t.linewidth = kTwoPi * transition.linewidth_over_2pi_MHz * 1e6;
  t.saturation_irradiance = transition.saturation_irradiance_W_per_m2;
  t.mass = transition.mass_amu * si::atomic_mass_unit;
  return t;
}

double RunConfig::theta() const { return theta_deg * kPi / 180.0; }

SimParams RunConfig::sim_params() const {
  SimParams p;
  p.atoms = simulation.atoms;
  p.dt = simulation.dt_hbar_over_Er;
  p.equilibration = simulation.equilibration_over_Gamma_prime;
  p.averaging = simulation.averaging_over_Gamma_prime;
  p.initial_temperature = simulation.initial_temperature_uK * 1e-6;
  p.seed = simulation.seed;
  p.snapshot_samples = simulation.snapshot_samples_per_atom;
  p.workers = workers;
  p.max_refinements = simulation.max_dt_refinements;
  return p;
}

SweepPlan RunConfig::sweep_plan() const {
  SweepPlan plan;
  plan.detunings = detunings_Gamma;
  plan.depths = depths_Er;
  plan.theta = theta();
  plan.transition = physical_transition();
  return plan;
}

BeamConfig RunConfig::scan_beams() const {
  BeamConfig b = BeamConfig::for_depth(scan.depth_Er, scan.detuning_Gamma, physical_transition());
  b.theta = theta();
  return b;
}

void RunConfig::validate() const {
  try {
    physical_transition().validate();
    BeamConfig b;
    b.theta = theta();
    b.transition = physical_transition();
    b.validate();
    lattice_constants(theta(), b.transition.wavelength);
    sim_params().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (detunings_Gamma.empty()) throw ConfigError("sweep.detunings_Gamma must not be empty");
  for (const double d : detunings_Gamma) {
    if (!(d < 0)) throw ConfigError("sweep.detunings_Gamma: only red detunings produce a lattice");
  }
  if (depths_Er.size() < 1) throw ConfigError("sweep.depths_Er must not be empty");
  for (const double u : depths_Er) {
    if (!(u > 0)) throw ConfigError("sweep.depths_Er must be positive");
  }
  for (const double t : thermometry.tau_ms) {
    if (!(t >= 0)) throw ConfigError("thermometry.tau_ms must be non-negative");
  }
  if (scan.plane != "xz" && scan.plane != "yz" && scan.plane != "xy") {
    throw ConfigError("scan.plane must be one of xz, yz, xy");
  }
  if (scan.points_per_lattice_constant < 4) throw ConfigError("scan.points_per_lattice_constant must be >= 4");
  if (scan.cells < 1) throw ConfigError("scan.cells must be >= 1");
  if (!(scan.detuning_Gamma < 0)) throw ConfigError("scan.detuning_Gamma must be negative");
  if (!(scan.depth_Er > 0)) throw ConfigError("scan.depth_Er must be positive");
  if (output_directory.empty()) throw ConfigError("output.directory must not be empty");
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section top(root, "config");
  if (const json* node = top.child("transition")) {
    Section s(*node, "transition");
    s.read_number("jg", c.transition.jg);
    s.read_number("je", c.transition.je);
    s.read_number("wavelength_nm", c.transition.wavelength_nm);
    s.read_number("linewidth_over_2pi_MHz", c.transition.linewidth_over_2pi_MHz);
    s.read_number("saturation_irradiance_W_per_m2", c.transition.saturation_irradiance_W_per_m2);
    s.read_number("mass_amu", c.transition.mass_amu);
    s.finish();
  }
  if (const json* node = top.child("lattice")) {
    Section s(*node, "lattice");
    s.read_number("theta_deg", c.theta_deg);
    s.finish();
  }
  if (const json* node = top.child("sweep")) {
    Section s(*node, "sweep");
    s.read_numbers("detunings_Gamma", c.detunings_Gamma);
    s.read_numbers("depths_Er", c.depths_Er);
    s.finish();
  }
  if (const json* node = top.child("simulation")) {
    Section s(*node, "simulation");
    auto& sim = c.simulation;
    s.read_integer("atoms", sim.atoms);
    s.read_number("dt_hbar_over_Er", sim.dt_hbar_over_Er);
    s.read_number("equilibration_over_Gamma_prime", sim.equilibration_over_Gamma_prime);
    s.read_number("averaging_over_Gamma_prime", sim.averaging_over_Gamma_prime);
    s.read_number("initial_temperature_uK", sim.initial_temperature_uK);
    if (const json* seed = s.child("seed")) {
      if (!seed->is_number_unsigned()) throw ConfigError("simulation.seed: expected a non-negative integer");
      sim.seed = seed->get<std::uint64_t>();
    }
    s.read_integer("snapshot_samples_per_atom", sim.snapshot_samples_per_atom);
    s.read_integer("max_dt_refinements", sim.max_dt_refinements);
    s.finish();
  }
  if (const json* node = top.child("thermometry")) {
    Section s(*node, "thermometry");
    s.read_numbers("tau_ms", c.thermometry.tau_ms);
    s.read_number("gravity_m_per_s2", c.thermometry.gravity_m_per_s2);
    s.read("write_snapshots", c.thermometry.write_snapshots);
    s.finish();
  }
  if (const json* node = top.child("scan")) {
    Section s(*node, "scan");
    s.read("plane", c.scan.plane);
    s.read_integer("points_per_lattice_constant", c.scan.points_per_lattice_constant);
    s.read_integer("cells", c.scan.cells);
    s.read_number("offset_over_lambda", c.scan.offset_over_lambda);
    s.read("all_levels", c.scan.all_levels);
    s.read_number("detuning_Gamma", c.scan.detuning_Gamma);
    s.read_number("depth_Er", c.scan.depth_Er);
    s.finish();
  }
  if (const json* node = top.child("output")) {
    Section s(*node, "output");
    s.read("directory", c.output_directory);
    s.finish();
  }
  top.read_integer("workers", c.workers);
  top.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const RunConfig& config) { return serialize(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
  json j = serialize(config);
  j.erase("workers");
  j.erase("output");
  return hex64(fnv1a64(j.dump()));
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize(a) == serialize(b); }

}  // namespace sisyphus::app
