#pragma once

#include <numbers>

namespace sisyphus {

// CODATA 2018 exact/recommended values, SI.
namespace si {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double boltzmann = 1.380649e-23;
inline constexpr double atomic_mass_unit = 1.66053906660e-27;
inline constexpr double standard_gravity = 9.80665;
}  // namespace si

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace sisyphus
