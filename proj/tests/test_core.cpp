#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>

#include "leafnet/errors.hpp"
#include "leafnet/rng.hpp"
#include "leafnet/tensor.hpp"

using namespace leafnet;

namespace {

// Standalone PCG32 (XSH-RR) written from the published algorithm.
struct Pcg32Oracle {
  std::uint64_t state = 0, inc = 0;
  Pcg32Oracle(std::uint64_t seed, std::uint64_t seq) {
    inc = (seq << 1u) | 1u;
    next();
    state += seed;
    next();
  }
  std::uint32_t next() {
    const std::uint64_t old = state;
    state = old * 6364136223846793005ULL + inc;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }
};

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("shape validation") {
    CHECK(Shape{2, 3}.elements() == 6);
    CHECK_THROWS_AS(Shape({0, 1}), ShapeError);
    CHECK_THROWS_AS(Shape({1, 2, 3, 4, 5}), ShapeError);
    CHECK_THROWS_AS(Shape(std::vector<std::int64_t>{}), ShapeError);
    const std::int64_t big = std::int64_t{1} << 40;
    CHECK_THROWS_AS(Shape({big, big}), ShapeError);
  }

  TEST_CASE("tensor_create") {
    const Tensor z = tensor_create(Shape{2, 2}, 0.0f);
    CHECK(z.size() == 4);
    for (float v : z.values()) CHECK(v == 0.0f);

    const Tensor h = tensor_create(Shape{1, 180, 180, 3}, 0.5f);
    CHECK(h.size() == 97200);
    for (float v : h.values()) REQUIRE(v == 0.5f);

    CHECK_THROWS_AS(tensor_create(Shape{0, 1}, 0.0f), ShapeError);
    CHECK_THROWS_AS(Tensor(Shape{2}, std::vector<float>{1, 2, 3}), ShapeError);
  }

  TEST_CASE("tensor reshape and accessors") {
    Tensor t(Shape{1, 2, 2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
    CHECK(t.at(0, 1, 0, 2) == 8.0f);
    const Tensor r = t.reshaped(Shape{12});
    CHECK(r[11] == 11.0f);
    CHECK_THROWS_AS(t.reshaped(Shape{5}), ShapeError);
    t[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
  }

  TEST_CASE("pcg32 matches the standalone oracle") {
    Rng rng(42, 54);
    CHECK(rng.next_u32() == 0xa15c02b7u);
    CHECK(rng.next_u32() == 0x7b47f409u);
    CHECK(rng.next_u32() == 0xba1d3330u);

    Rng a(123456789, 7);
    Pcg32Oracle b(123456789, 7);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u32() == b.next());
  }

  TEST_CASE("rng_uniform") {
    Rng a(42), b(42);
    CHECK(rng_uniform(a, 0, 1) == rng_uniform(b, 0, 1));
    Rng r(42);
    for (int i = 0; i < 10000; ++i) {
      const double v = rng_uniform(r, 0, 1);
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
    CHECK_THROWS_AS(rng_uniform(r, 1, 1), ArgumentError);
    CHECK_THROWS_AS(rng_uniform(r, 2, 1), ArgumentError);
  }

  TEST_CASE("streams are independent") {
    Rng a(7, streams::kShuffle), b(7, streams::kAugment);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += a.next_u32() == b.next_u32();
    CHECK(same < 3);
  }

  TEST_CASE("bounded draws stay in range and cover it") {
    Rng r(9);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
      const auto v = r.bounded(7);
      REQUIRE(v < 7u);
      ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);
  }

  TEST_CASE("gaussian moments") {
    Rng r(3);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double g = r.next_gaussian();
      s += g;
      s2 += g * g;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
  }

  TEST_CASE("glorot_uniform_init limits") {
    Rng r(1);
    const Tensor a = glorot_uniform_init<float>(3, 3, Shape{1000}, r);
    for (float v : a.values()) {
      REQUIRE(v > -1.0f);
      REQUIRE(v < 1.0f);
    }
    const double limit = std::sqrt(6.0 / 171.0);
    CHECK(limit == doctest::Approx(0.1873171623163388).epsilon(1e-15));
    const Tensor b = glorot_uniform_init<float>(27, 144, Shape{3, 3, 3, 16}, r);
    for (float v : b.values()) REQUIRE(std::abs(v) <= limit);

    // Uniform(-L, L) has sd L / sqrt(3); the mean of 10k draws has sd L / sqrt(30000).
    const Tensor64 c = glorot_uniform_init<double>(27, 144, Shape{10000}, r);
    double mean = 0;
    for (double v : c.values()) mean += v;
    mean /= 10000;
    CHECK(std::abs(mean) < 0.02);
  }

  TEST_CASE("approx_equal") {
    const Tensor x(Shape{3}, std::vector<float>{1, 2, 3});
    CHECK(approx_equal(x, x, 0, 0));
    CHECK(approx_equal(Tensor(Shape{1}, std::vector<float>{1.0f}), Tensor(Shape{1}, std::vector<float>{1.0001f}),
                       1e-3, 0));
    CHECK_FALSE(approx_equal(Tensor(Shape{1}, std::vector<float>{1.0f}),
                             Tensor(Shape{1}, std::vector<float>{1.1f}), 1e-3, 0));
    CHECK_FALSE(approx_equal(x, Tensor(Shape{1, 3}, std::vector<float>{1, 2, 3}), 0, 0));
  }

  TEST_CASE("mix_seed separates neighbouring indices") {
    CHECK(mix_seed(42, 0) != mix_seed(42, 1));
    CHECK(mix_seed(42, 1) == mix_seed(42, 1));
  }

  TEST_CASE("glorot bound over 1e5 draws") {
    Rng r(77);
    for (const auto& [fi, fo] : std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 1}, {27, 144}, {30976, 128}}) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fi + fo));
      const Tensor t = glorot_uniform_init<float>(fi, fo, Shape{100000}, r);
      double worst = 0;
      for (float v : t.values()) worst = std::max(worst, static_cast<double>(std::abs(v)));
      CHECK(worst < limit);
    }
  }

  TEST_CASE("approx_equal is reflexive and symmetric with rtol 0") {
    Rng r(5);
    for (int t = 0; t < 50; ++t) {
      Tensor a(Shape{4}), b(Shape{4});
      for (auto& v : a.values()) v = static_cast<float>(rng_uniform(r, -1, 1));
      for (auto& v : b.values()) v = static_cast<float>(rng_uniform(r, -1, 1));
      const double atol = rng_uniform(r, 0, 2);
      CHECK(approx_equal(a, a, 0, 0));
      CHECK(approx_equal(a, b, 0, atol) == approx_equal(b, a, 0, atol));
    }
  }

  TEST_CASE("rng sequences reproduce over 1000 draws") {
    for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xdeadbeefull}) {
      Rng a(seed, 3), b(seed, 3);
      for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u32() == b.next_u32());
      CHECK(a == b);
    }
  }
}
