#include <doctest.h>

#include <cmath>
#include <set>

#include <sisyphus/philox.hpp>

using sisyphus::Philox4x32;

TEST_SUITE("philox") {
  TEST_CASE("Random123 known-answer vectors") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::bijection(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::bijection(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::bijection(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("streams are reproducible and distinct") {
    Philox4x32 a(42, 7);
    Philox4x32 b(42, 7);
    Philox4x32 c(42, 8);
    Philox4x32 d(43, 7);
    int same_c = 0;
    int same_d = 0;
    for (int i = 0; i < 1000; ++i) {
      const auto x = a();
      CHECK(x == b());
      same_c += x == c();
      same_d += x == d();
    }
    CHECK(same_c < 3);
    CHECK(same_d < 3);
  }

  TEST_CASE("reseed restarts the sequence") {
    Philox4x32 a(5, 1);
    const auto first = a();
    for (int i = 0; i < 10; ++i) a();
    a.reseed(5, 1);
    CHECK(a() == first);
  }

  TEST_CASE("uniform doubles are in [0, 1) with the right moments") {
    Philox4x32 g(9, 0);
    const int n = 200000;
    double sum = 0;
    double sum2 = 0;
    for (int i = 0; i < n; ++i) {
      const double u = g.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      sum2 += u * u;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    CHECK(sum2 / n - mean * mean == doctest::Approx(1.0 / 12).epsilon(0.01));
  }

  TEST_CASE("bijection is injective on a sample of counters") {
    std::set<Philox4x32::Counter> seen;
    for (std::uint32_t i = 0; i < 4096; ++i) seen.insert(Philox4x32::bijection({i, 0, 0, 0}, {1, 2}));
    CHECK(seen.size() == 4096);
  }
}
