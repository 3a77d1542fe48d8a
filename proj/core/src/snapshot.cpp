#include "sisyphus/snapshot.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace sisyphus {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::runtime_error("snapshot: cannot parse " + what + " '" + text + "'");
  }
  if (used != text.size()) throw std::runtime_error("snapshot: trailing characters in " + what);
  return v;
}

template <class Int>
Int parse_integer(const std::string& text, const std::string& what) {
  Int v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::runtime_error("snapshot: cannot parse " + what + " '" + text + "'");
  }
  return v;
}

}  // namespace

double Snapshot::velocity(std::size_t i, int axis) const {
  return rows[i].momentum[axis] * momentum_unit_kg_m_s / mass_kg;
}

double Snapshot::position_m(std::size_t i, int axis) const { return rows[i].position[axis] * length_unit_m; }

void write_snapshot(std::ostream& out, const Snapshot& s) {
  out << "# sisyphus-snapshot v1\n";
  out << "# seed=" << s.seed << "\n";
  out << "# params_hash=" << s.params_hash << "\n";
  out << "# length_unit_m=" << format_double(s.length_unit_m) << "\n";
  out << "# momentum_unit_kg_m_s=" << format_double(s.momentum_unit_kg_m_s) << "\n";
  out << "# mass_kg=" << format_double(s.mass_kg) << "\n";
  out << "# wavelength_m=" << format_double(s.wavelength_m) << "\n";
  out << "# detuning_Gamma=" << format_double(s.detuning_gamma) << "\n";
  out << "# U0_Er=" << format_double(s.depth_recoil) << "\n";
  out << "# time_internal=" << format_double(s.time_internal) << "\n";
  out << "# samples_per_atom=" << s.samples_per_atom << "\n";
  out << "atom,x,y,z,px,py,pz,m\n";
  for (const auto& r : s.rows) {
    out << r.atom;
    for (int i = 0; i < 3; ++i) out << ',' << format_double(r.position[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(r.momentum[i]);
    out << ',' << r.level << '\n';
  }
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snapshot) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write snapshot " + path.string());
  write_snapshot(out, snapshot);
  if (!out) throw std::runtime_error("error while writing snapshot " + path.string());
}

Snapshot read_snapshot(std::istream& in) {
  Snapshot s;
  std::map<std::string, std::string> header;
  std::string line;
  bool saw_magic = false;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# sisyphus-snapshot", 0) == 0) {
        saw_magic = true;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!saw_columns) {
      if (line != "atom,x,y,z,px,py,pz,m") throw std::runtime_error("snapshot: unexpected column header");
      saw_columns = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw std::runtime_error("snapshot: row with " + std::to_string(cells.size()) + " columns");
    SnapshotRow r;
    r.atom = parse_integer<std::uint64_t>(cells[0], "atom");
    for (int i = 0; i < 3; ++i) r.position[i] = parse_double(cells[static_cast<std::size_t>(1 + i)], "position");
    for (int i = 0; i < 3; ++i) r.momentum[i] = parse_double(cells[static_cast<std::size_t>(4 + i)], "momentum");
    r.level = parse_integer<int>(cells[7], "level");
    s.rows.push_back(r);
  }
  if (!saw_magic || !saw_columns) throw std::runtime_error("snapshot: missing header");

  auto need = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error(std::string("snapshot: missing header key ") + key);
    return it->second;
  };
  s.seed = parse_integer<std::uint64_t>(need("seed"), "seed");
  s.params_hash = need("params_hash");
  s.length_unit_m = parse_double(need("length_unit_m"), "length_unit_m");
  s.momentum_unit_kg_m_s = parse_double(need("momentum_unit_kg_m_s"), "momentum_unit_kg_m_s");
  s.mass_kg = parse_double(need("mass_kg"), "mass_kg");
  s.wavelength_m = parse_double(need("wavelength_m"), "wavelength_m");
  s.detuning_gamma = parse_double(need("detuning_Gamma"), "detuning_Gamma");
  s.depth_recoil = parse_double(need("U0_Er"), "U0_Er");
  s.time_internal = parse_double(need("time_internal"), "time_internal");
  s.samples_per_atom = parse_integer<int>(need("samples_per_atom"), "samples_per_atom");
  if (!(s.length_unit_m > 0) || !(s.momentum_unit_kg_m_s > 0) || !(s.mass_kg > 0)) {
    throw std::runtime_error("snapshot: non-positive unit conversion");
  }
  return s;
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open snapshot " + path.string());
  return read_snapshot(in);
}

}  // namespace sisyphus
