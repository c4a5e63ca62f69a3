#include "support.hpp"

#include <doctest.h>

using namespace cmn;
using testing::line;
using testing::vec;

namespace {

HSet unit_set(int u, int s) { return HSet{"M", AffineChart::identity(u, s)}; }

CenterScale center(double p) { return CenterScale{vec({p}), Vec(0), 1.0}; }

}  // namespace

TEST_CASE("Example 1 source M11 covers the member centered at 3") {
  const auto out = check_covering(unit_set(1, 0), "M12", center(3), ProductFormMap{line(3.5, 1.5), std::nullopt});
  REQUIRE(out.verdict == Verdict::Pass);
  CHECK(out.certificate->unstable_margin == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out.certificate->degree.value == 1);
  CHECK(std::isinf(out.certificate->stable_margin));
  CHECK(out.certificate->admissible_eps == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("contractions and wide stable images fail with the violated inequality") {
  const auto contraction = check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(0.5, 0), std::nullopt});
  CHECK(contraction.verdict == Verdict::Fail);
  CHECK(contraction.reason == "min stretch 0.5 ≤ 1");

  const CenterScale narrow{vec({0}), vec({0}), 0.4};
  const auto wide = check_covering(unit_set(1, 1), "N", narrow, ProductFormMap{line(3, 0), line(0.5, 0)});
  CHECK(wide.verdict == Verdict::Fail);
  CHECK(wide.reason == "max stretch 0.5 ≥ 0.4");
  CHECK(wide.slack == doctest::Approx(-0.1));

  const auto miss = check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(1, 5), std::nullopt});
  CHECK(miss.verdict == Verdict::Fail);
  CHECK(miss.reason == "degree 0 at target center");
}

TEST_CASE("certificate inequalities are strict") {
  CHECK(check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(2, 0), std::nullopt}).verdict == Verdict::Pass);
  CHECK(check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(1, 0), std::nullopt}).verdict == Verdict::Fail);
  CHECK(check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(1 + 1e-13, 0), std::nullopt}).verdict ==
        Verdict::Fail);
  const CenterScale exact{vec({0}), vec({0}), 0.5};
  CHECK(check_covering(unit_set(1, 1), "N", exact, ProductFormMap{line(3, 0), line(0.5, 0)}).verdict == Verdict::Fail);
}

TEST_CASE("persistence bound instantiates the margin formula") {
  CoveringCertificate c;
  c.unstable_margin = 1.0;
  c.stable_margin = kInf;
  CHECK(persistence_bound(c, 1.0, 1.0, 1.0) == 0.5);
  CHECK(persistence_bound(c, 2.0, 1.0, 1.0) == 0.25);
  c.stable_margin = 0.2;
  c.target_radius = 0.5;
  CHECK(persistence_bound(c, 1.0, 1.0, 1.0) == doctest::Approx(0.05));
  c.unstable_margin = 0.0;
  CHECK_THROWS_AS(persistence_bound(c, 1.0, 1.0, 1.0), PreconditionError);
}

TEST_CASE("a certified covering survives bumps below the admissible radius") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> slope(1.2, 6.0), shift(-1.0, 1.0), phase(0.0, 6.283);
  int passed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double a = (trial % 2 ? 1 : -1) * slope(rng), b = shift(rng);
    const double p = trial % 3 == 0 ? 3.0 : 0.0;
    const auto f = line(a, b + p);
    const auto out = check_covering(unit_set(1, 0), "N", center(p), ProductFormMap{f, std::nullopt});
    if (out.verdict != Verdict::Pass) continue;
    ++passed;
    const double eps = out.certificate->admissible_eps;
    // A perturbation of size eps in the local map and in the coupling moves the chart form by at most 2 eps.
    const double amp = 0.9 * eps * 2.0, ph = phase(rng), w = 0.5 + shift(rng);
    auto g = [&](double x) { return f(x) + amp * std::sin(w * x + ph); };
    const double lo = g(-1.0) - p, hi = g(1.0) - p;
    CHECK(std::min(std::abs(lo), std::abs(hi)) > 1.0);
    CHECK(lo * hi < 0.0);
    const TermDeviation dev{amp, std::make_pair(vec({g(-1.0)}), vec({g(1.0)}))};
    CHECK(check_covering(unit_set(1, 0), "N", center(p), ProductFormMap{f, std::nullopt}, kDefaultGrid, {}, dev).verdict ==
          Verdict::Pass);
  }
  CHECK(passed > 50);
}

TEST_CASE("clear failures stay failures under one percent rescaling") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> slope(0.1, 3.0), shift(-2.0, 2.0), factor(0.99, 1.01);
  int seen = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double a = slope(rng), b = shift(rng);
    const auto out = check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(a, b), std::nullopt});
    if (out.verdict != Verdict::Fail || out.slack >= -0.1) continue;
    ++seen;
    for (int k = 0; k < 5; ++k) {
      const double c = factor(rng);
      CHECK(check_covering(unit_set(1, 0), "N", center(0), ProductFormMap{line(a * c, b * c), std::nullopt}).verdict !=
            Verdict::Pass);
    }
  }
  CHECK(seen > 50);
}

TEST_CASE("two-dimensional affine coverings use the determinant degree") {
  Mat l(2, 2);
  l << 3, 1, -1, 3;
  const auto f = PiecewiseAffineMap::affine(l, Vec::Zero(2));
  const CenterScale c{Vec::Zero(2), Vec(0), 1.0};
  const auto out = check_covering(unit_set(2, 0), "N", c, ProductFormMap{f, std::nullopt});
  REQUIRE(out.verdict == Verdict::Pass);
  CHECK(out.certificate->degree.value == 1);
  // On the face x2 = 1 the larger coordinate is minimal at x1 = 1/2, where both equal 2.5.
  CHECK(out.certificate->unstable_margin == doctest::Approx(1.5));
}
