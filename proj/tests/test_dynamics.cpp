#include "support.hpp"

#include <doctest.h>

using namespace cmn;
using testing::vec;

namespace {

Vec iterate(const NetworkSpec& spec, Vec x, int n, const Perturbation* pert = nullptr) {
  for (int i = 0; i < n; ++i) x = step(spec, x, pert);
  return x;
}

NetworkSpec trapped_fixed_point() {
  NetworkSpec spec;
  spec.graph.d = 1;
  spec.dim_u = 1;
  spec.nodes.push_back(NodeSystem{testing::line(2, 0), {HSet{"M", AffineChart::identity(1, 0)}}, TransitionMatrix::identity(1),
                                  UnifiedSet{AffineChart::identity(1, 0), {UnifiedMember{"M", CenterScale{vec({0}), Vec(0), 1}}}},
                                  {}});
  spec.coupling.kind = CouplingKind::TypeII;
  spec.coupling.matrix = Mat::Identity(1, 1);
  return spec;
}

}  // namespace

TEST_CASE("one network step applies local maps then the coupling") {
  const auto spec = testing::load("example1.json");
  const Vec y = step(spec, vec({-0.6, 0.2}));
  CHECK(y(0) == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(y(1) == doctest::Approx(3.4));
  const auto mixed = testing::with_coupling(spec, testing::diffusive(0.25));
  const Vec z = step(mixed, vec({-0.6, 0.2}));
  CHECK(z(0) == doctest::Approx(0.75 * -0.6 + 0.25 * 3.4));
}

TEST_CASE("a zero perturbation leaves the step bit-identical") {
  const auto spec = testing::load("example1.json");
  std::mt19937_64 rng(61);
  for (int i = 0; i < 200; ++i) {
    const Vec x = testing::random_vec(rng, 2, 4.0);
    const Perturbation zero{0.0, static_cast<std::uint64_t>(i)};
    const Vec a = step(spec, x), b = step(spec, x, &zero);
    CHECK(a == b);
  }
}

TEST_CASE("perturbed steps stay within the composition bound") {
  const auto spec = testing::with_coupling(testing::load("example1.json"), testing::diffusive(0.07));
  const double norm = op_inf_norm(spec.coupling.matrix);
  std::mt19937_64 rng(62);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Vec x = testing::random_vec(rng, 2, 4.0);
    const Perturbation p{0.03, static_cast<std::uint64_t>(i % 17)};
    const double shift = inf_norm(step(spec, x, &p) - step(spec, x));
    CHECK(shift <= 0.03 * (1.0 + norm) + 1e-15);
    worst = std::max(worst, shift);
  }
  CHECK(worst > 0.03);
  const Perturbation p{0.2, 9};
  double peak = 0.0;
  for (int i = 0; i < 2000; ++i) peak = std::max(peak, inf_norm(p.alpha(0, testing::random_vec(rng, 1, 50.0))));
  CHECK(peak <= 1.0);
  CHECK(peak > 0.99);
}

TEST_CASE("itineraries") {
  const auto spec = testing::load("example1.json");
  const auto fixed = periodic_point(spec, {{0, 1}});
  const auto it = itinerary(spec, fixed.point, 6);
  CHECK_FALSE(it.escape_step.has_value());
  CHECK(it.steps.size() == 6);
  for (const auto& s : it.steps) CHECK(s == std::vector<int>{0, 1});
  const auto gone = itinerary(spec, vec({50, 50}), 6);
  CHECK(gone.escape_step == std::optional<int>(0));
  int ties = 0;
  CHECK(locate_hsets(spec, vec({1.0, 2.0}), &ties) == std::vector<int>{0, 1});
  CHECK(ties == 2);
  CHECK(flat_symbol(spec, {1, 0}) == 2);
}

TEST_CASE("surviving itineraries are admissible for a certified network") {
  const auto spec = testing::with_coupling(testing::load("example1.json"), testing::diffusive(0.05));
  REQUIRE(theorem2_check(spec).verdict == Verdict::Pass);
  const auto w = kronecker(spec.transitions());
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> box(-1.0, 4.0);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto it = itinerary(spec, vec({box(rng), box(rng)}), 8);
    if (it.escape_step) continue;
    CHECK(is_admissible(it.flat(spec), w));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("periodic points") {
  const auto single = testing::load("example1_node1.json");
  const auto p = periodic_point(single, {{0}});
  CHECK(p.point(0) == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(p.residual <= 1e-15);
  CHECK(p.period == 1);
  CHECK_THROWS_AS(periodic_point(testing::load("example1_node2.json"), {{0}, {0}}), PreconditionError);

  const auto perm = testing::load("theorem1_2x3.json");
  const auto loop = canonical_loop(perm);
  CHECK(loop.size() == 6);
  const auto c = periodic_point(perm, loop);
  CHECK(c.period == 6);
  CHECK(c.residual < 1e-10);
  CHECK(inf_norm(iterate(perm, c.point, 6) - c.point) < 1e-10);
  for (double m : c.interior_margins) CHECK(m > 0.0);

  const auto ex1 = testing::load("example1.json");
  const std::vector<std::vector<int>> word{{0, 1}, {1, 1}, {0, 0}};
  const auto q = periodic_point(ex1, word);
  CHECK(inf_norm(iterate(ex1, q.point, 3) - q.point) < 1e-10);
  CHECK(itinerary(ex1, q.point, 3).steps == word);
}

TEST_CASE("periodic points of a coupled perturbed network") {
  auto perm = testing::with_coupling(testing::load("theorem1_2x3.json"), testing::mat2(1, 0.1, 0.05, 1));
  REQUIRE(theorem1_check(perm).verdict == Verdict::Pass);
  const auto loop = canonical_loop(perm);
  const auto c = periodic_point(perm, loop);
  CHECK(inf_norm(iterate(perm, c.point, 6) - c.point) < 1e-10);
  const Perturbation pert{0.01, 4};
  const auto d = periodic_point(perm, loop, &pert);
  CHECK(inf_norm(iterate(perm, d.point, 6, &pert) - d.point) < 1e-10);
  CHECK(inf_norm(d.point - c.point) < 0.1);
}

TEST_CASE("empirical entropy") {
  const auto spec = testing::load("example1.json");
  const auto w = kronecker(spec.transitions());
  for (int depth : {4, 8, 10}) {
    const auto e = empirical_entropy_detail(spec, depth, 20000, 3);
    const double cap = std::log(count_words(w, depth).convert_to<double>()) / (depth - 1);
    CHECK(e.value <= cap + 1e-12);
    CHECK(e.value > 0.0);
  }
  CHECK(empirical_entropy(trapped_fixed_point(), 8, 1000, 1) == 0.0);
  CHECK(empirical_entropy(spec, 6, 500, 9) == empirical_entropy(spec, 6, 500, 9));
}

TEST_CASE("re-certification under perturbations") {
  const auto spec = testing::load("example1.json");
  const double eps = theorem2_check(spec).global_eps;
  CHECK(recertify(spec, Perturbation{0.5 * eps, 1}).verdict == Verdict::Pass);
  CHECK(recertify(spec, Perturbation{0.0, 1}).verdict == Verdict::Pass);
  CHECK(recertify(spec, Perturbation{20.0 * eps, 1}).verdict != Verdict::Pass);
  const auto dev = deviation_of(spec, Perturbation{0.1, 2});
  CHECK(dev.local == std::vector<double>{0.1, 0.1});
  CHECK(dev.coupling == 0.1);
}
