#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include <sisyphus/angular_momentum.hpp>

using namespace sisyphus;

namespace {

// Independent construction: |J M> states of j1 x j2 built by applying J- to
// the stretched state and Gram-Schmidt against higher J, with the
// Condon-Shortley choice <j1 j1; j2 J-j1 | J J> > 0. All in twice-units.
class CouplingOracle {
 public:
  CouplingOracle(int tj1, int tj2) : tj1_(tj1), tj2_(tj2) {
    for (int m1 = -tj1; m1 <= tj1; m1 += 2) {
      for (int m2 = -tj2; m2 <= tj2; m2 += 2) basis_.emplace_back(m1, m2);
    }
    const int n = static_cast<int>(basis_.size());
    for (int tJ = tj1 + tj2; tJ >= std::abs(tj1 - tj2); tJ -= 2) {
      // Highest state of this J: orthogonal to every already-built |J' J>.
      Eigen::VectorXd top = Eigen::VectorXd::Zero(n);
      std::vector<int> idx;
      for (int i = 0; i < n; ++i) {
        if (basis_[i].first + basis_[i].second == tJ) idx.push_back(i);
      }
      Eigen::MatrixXd span(static_cast<Eigen::Index>(idx.size()), 0);
      for (const auto& [key, vec] : states_) {
        if (key.second != tJ) continue;
        Eigen::VectorXd sub(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub[static_cast<Eigen::Index>(k)] = vec[idx[k]];
        span.conservativeResize(Eigen::NoChange, span.cols() + 1);
        span.col(span.cols() - 1) = sub;
      }
      Eigen::VectorXd candidate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(idx.size()));
      for (Eigen::Index k = 0; k < candidate.size(); ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(candidate.size(), k);
        for (Eigen::Index c = 0; c < span.cols(); ++c) e -= span.col(c).dot(e) * span.col(c);
        if (e.norm() > 1e-8) {
          candidate = e.normalized();
          break;
        }
      }
      // Condon-Shortley: the component with m1 = j1 is positive.
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (basis_[idx[k]].first == tj1 && candidate[static_cast<Eigen::Index>(k)] < 0) candidate = -candidate;
      }
      for (std::size_t k = 0; k < idx.size(); ++k) top[idx[k]] = candidate[static_cast<Eigen::Index>(k)];
      states_[{tJ, tJ}] = top;

      Eigen::VectorXd cur = top;
      for (int tM = tJ; tM > -tJ; tM -= 2) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
          if (cur[i] == 0) continue;
          const auto [m1, m2] = basis_[i];
          if (m1 > -tj1) next[find(m1 - 2, m2)] += cur[i] * lower(tj1, m1);
          if (m2 > -tj2) next[find(m1, m2 - 2)] += cur[i] * lower(tj2, m2);
        }
        cur = next / lower(tJ, tM);
        states_[{tJ, tM - 2}] = cur;
      }
    }
  }

  double operator()(int m1, int m2, int tJ, int tM) const {
    const auto it = states_.find({tJ, tM});
    if (it == states_.end() || m1 + m2 != tM) return 0.0;
    return it->second[find(m1, m2)];
  }

 private:
  // sqrt((j + m)(j - m + 1)) in twice-units.
  static double lower(int tj, int tm) { return 0.5 * std::sqrt(static_cast<double>((tj + tm) * (tj - tm + 2))); }

  int find(int m1, int m2) const {
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (basis_[i] == std::make_pair(m1, m2)) return static_cast<int>(i);
    }
    throw std::logic_error("state not in basis");
  }

  int tj1_;
  int tj2_;
  std::vector<std::pair<int, int>> basis_;
  std::map<std::pair<int, int>, Eigen::VectorXd> states_;
};

}  // namespace

TEST_SUITE("angular_momentum") {
  TEST_CASE("matches the lowering-operator construction for every coupling up to 4 x 1 and 5/2 x 3/2") {
    for (int tj1 = 0; tj1 <= 8; ++tj1) {
      for (int tj2 : {1, 2, 3}) {
        CouplingOracle oracle(tj1, tj2);
        for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2) {
          for (int m1 = -tj1; m1 <= tj1; m1 += 2) {
            for (int m2 = -tj2; m2 <= tj2; m2 += 2) {
              for (int tM = -tJ; tM <= tJ; tM += 2) {
                CAPTURE(tj1);
                CAPTURE(tj2);
                CAPTURE(tJ);
                CHECK(clebsch_gordan_twice(tj1, m1, tj2, m2, tJ, tM) ==
                      doctest::Approx(oracle(m1, m2, tJ, tM)).epsilon(1e-12));
              }
            }
          }
        }
      }
    }
  }

  TEST_CASE("textbook values") {
    CHECK(clebsch_gordan(0.5, 0.5, 0.5, -0.5, 1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(clebsch_gordan(1, 1, 1, -1, 0, 0) == doctest::Approx(1.0 / std::sqrt(3.0)));
    // Stretched cesium line: <4 4; 1 1 | 5 5> = 1, weakest sigma+ component 1/sqrt(45).
    CHECK(clebsch_gordan(4, 4, 1, 1, 5, 5) == doctest::Approx(1.0));
    CHECK(clebsch_gordan(4, -4, 1, 1, 5, -3) == doctest::Approx(1.0 / std::sqrt(45.0)));
  }

  TEST_CASE("selection rules give zero") {
    CHECK(clebsch_gordan(1, 1, 1, 1, 2, 1) == 0.0);
    CHECK(clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0);
    CHECK(clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0);  // parity of 1 x 1 -> 1 at M = 0
  }

  TEST_CASE("invalid quantum numbers throw") {
    CHECK_THROWS_AS(clebsch_gordan(0.3, 0, 1, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(clebsch_gordan(1, 2, 1, 0, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(clebsch_gordan(1, 0.5, 1, 0, 1, 0.5), std::invalid_argument);
  }

  TEST_CASE("dipole components are orthonormal in the coupled basis") {
    const DipoleComponents d = build_dipole_components(Transition::cesium_d2());
    REQUIRE(d.ground_dim() == 9);
    REQUIRE(d.excited_dim() == 11);
    // Each excited state is fully fed: sum over q and mg of |CG|^2 = 1.
    Eigen::MatrixXd feed = Eigen::MatrixXd::Zero(11, 11);
    for (int q = -1; q <= 1; ++q) feed += d.plus(q) * d.minus(q);
    CHECK((feed - Eigen::MatrixXd::Identity(11, 11)).norm() < 1e-13);
    // Ground states: sum over q and me of |CG|^2 = (2je+1)/(2jg+1).
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(9, 9);
    for (int q = -1; q <= 1; ++q) out += d.minus(q) * d.plus(q);
    CHECK((out - (11.0 / 9.0) * Eigen::MatrixXd::Identity(9, 9)).norm() < 1e-13);
  }

  TEST_CASE("band accessor agrees with the dense tables") {
    const DipoleComponents d = build_dipole_components(Transition::cesium_d2());
    for (int q = -1; q <= 1; ++q) {
      for (int r = 0; r < 11; ++r) {
        const int c = r - 1 - q;
        const double dense = (c >= 0 && c < 9) ? d.plus(q)(r, c) : 0.0;
        CHECK(d.band(q, r) == dense);
      }
    }
  }

  TEST_CASE("transition validation") {
    Transition t;
    t.je = 4;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t = Transition{};
    t.jg = 0.5;
    t.je = 1.5;
    CHECK_NOTHROW(t.validate());
    CHECK(t.ground_dim() == 2);
    t.mass = -1;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  }
}
