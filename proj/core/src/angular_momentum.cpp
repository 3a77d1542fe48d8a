#include "sisyphus/angular_momentum.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace sisyphus {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

int twice_of(double value, const char* name) {
  const double doubled = 2.0 * value;
  const double rounded = std::round(doubled);
  if (!std::isfinite(value) || std::abs(doubled - rounded) > 1e-9) {
    throw std::invalid_argument(std::string(name) + " is not an integer or half-integer");
  }
  return static_cast<int>(rounded);
}

cpp_int factorial(int n) {
  cpp_int result = 1;
  for (int i = 2; i <= n; ++i) result *= i;
  return result;
}

void check_projection(int two_j, int two_m, const char* name) {
  if (two_j < 0) throw std::invalid_argument(std::string(name) + ": negative angular momentum");
  if (std::abs(two_m) > two_j) throw std::invalid_argument(std::string(name) + ": |m| > j");
  if ((two_j + two_m) % 2 != 0) {
    throw std::invalid_argument(std::string(name) + ": j and m differ by a non-integer");
  }
}

}  // namespace

void Transition::validate() const {
  const int two_jg = twice_of(jg, "jg");
  const int two_je = twice_of(je, "je");
  if (two_jg < 0) throw std::invalid_argument("jg must be non-negative");
  if (two_je != two_jg + 2) throw std::invalid_argument("je must equal jg + 1");
  if (two_jg + 1 > kMaxGroundDim) throw std::invalid_argument("jg above 4 is not supported");
  if (!(wavelength > 0.0) || !(linewidth > 0.0) || !(saturation_irradiance > 0.0) || !(mass > 0.0)) {
    throw std::invalid_argument("transition constants must be strictly positive");
  }
}

int Transition::ground_dim() const { return twice_of(jg, "jg") + 1; }
int Transition::excited_dim() const { return twice_of(je, "je") + 1; }

double clebsch_gordan_twice(int j1, int m1, int j2, int m2, int J, int M) {
  check_projection(j1, m1, "j1/m1");
  check_projection(j2, m2, "j2/m2");
  check_projection(J, M, "J/M");

  if (m1 + m2 != M) return 0.0;
  if (J < std::abs(j1 - j2) || J > j1 + j2) return 0.0;
  if ((j1 + j2 + J) % 2 != 0) return 0.0;

  // All halved quantities below are integers once the checks above pass.
  const int a = (j1 + j2 - J) / 2;
  const int b = (j1 - m1) / 2;
  const int c = (j2 + m2) / 2;
  const int d = (J - j2 + m1) / 2;
  const int e = (J - j1 - m2) / 2;

  const int k_min = std::max({0, -d, -e});
  const int k_max = std::min({a, b, c});
  if (k_min > k_max) return 0.0;

  cpp_rational sum = 0;
  for (int k = k_min; k <= k_max; ++k) {
    const cpp_int denom =
        factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) * factorial(d + k) * factorial(e + k);
    const cpp_rational term(cpp_int(1), denom);
    if (k % 2 == 0) {
      sum += term;
    } else {
      sum -= term;
    }
  }
  if (sum == 0) return 0.0;

  const cpp_int triangle_num =
      cpp_int(J + 1) * factorial(a) * factorial((j1 - j2 + J) / 2) * factorial((-j1 + j2 + J) / 2);
  const cpp_int triangle_den = factorial((j1 + j2 + J) / 2 + 1);
  const cpp_int projections = factorial((j1 + m1) / 2) * factorial((j1 - m1) / 2) * factorial((j2 + m2) / 2) *
                              factorial((j2 - m2) / 2) * factorial((J + M) / 2) * factorial((J - M) / 2);

  const cpp_rational squared = cpp_rational(triangle_num * projections, triangle_den) * sum * sum;
  const double magnitude = std::sqrt(squared.convert_to<double>());
  return sum > 0 ? magnitude : -magnitude;
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M) {
  return clebsch_gordan_twice(twice_of(j1, "j1"), twice_of(m1, "m1"), twice_of(j2, "j2"), twice_of(m2, "m2"),
                              twice_of(J, "J"), twice_of(M, "M"));
}

double DipoleComponents::band(int q, int row) const {
  const int col = row - 1 - q;
  if (col < 0 || col >= ground_dim_) return 0.0;
  return plus(q)(row, col);
}

DipoleComponents build_dipole_components(const Transition& transition) {
  transition.validate();
  const int two_jg = twice_of(transition.jg, "jg");
  const int two_je = two_jg + 2;

  DipoleComponents out;
  out.ground_dim_ = two_jg + 1;
  out.excited_dim_ = two_je + 1;
  for (int q = -1; q <= 1; ++q) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(out.excited_dim_, out.ground_dim_);
    for (int col = 0; col < out.ground_dim_; ++col) {
      const int two_mg = 2 * col - two_jg;
      const int two_me = two_mg + 2 * q;
      if (std::abs(two_me) > two_je) continue;
      const int row = (two_me + two_je) / 2;
      m(row, col) = clebsch_gordan_twice(two_jg, two_mg, 2, 2 * q, two_je, two_me);
    }
    out.plus_[static_cast<std::size_t>(q + 1)] = std::move(m);
  }
  return out;
}

}  // namespace sisyphus
