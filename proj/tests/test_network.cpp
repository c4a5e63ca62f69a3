#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace cmn;
using testing::diffusive;
using testing::with_coupling;

namespace {

// Independent reading of the Example 1 inequalities: row k of entry (i -> j)
// under tau holds when a_{k,tau(k)} U_{tau(k)} maps the sphere {-1, 1} to
// opposite sides of 3 j_k at distance > 1 + sum of the foreign max stretches.
bool example1_oracle(double alpha) {
  const double u[2][2][2] = {{{-2.0, 5.0}, {-2.0, 2.0}}, {{1.0, 5.0}, {-2.0, 5.0}}};  // [node][source][x = -1, +1]
  const int w[2][2][2] = {{{1, 1}, {1, 0}}, {{0, 1}, {1, 1}}};
  const Mat a = diffusive(alpha);
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int j1 = 0; j1 < 2; ++j1)
        for (int j2 = 0; j2 < 2; ++j2) {
          if (!w[0][i1][j1] || !w[1][i2][j2]) continue;
          const int src[2] = {i1, i2}, tgt[2] = {j1, j2};
          bool entry = false;
          for (int swap = 0; swap < 2 && !entry; ++swap) {
            bool rows = true;
            for (int k = 0; k < 2; ++k) {
              const int m = swap ? 1 - k : k, l = 1 - m;
              const double p = 3.0 * tgt[k];
              const double lo = a(k, m) * u[m][src[m]][0] - p, hi = a(k, m) * u[m][src[m]][1] - p;
              const double foreign = std::abs(a(k, l)) * std::max(std::abs(u[l][src[l]][0]), std::abs(u[l][src[l]][1]));
              rows = rows && lo * hi < 0.0 && std::min(std::abs(lo), std::abs(hi)) - foreign > 1.0;
            }
            entry = rows;
          }
          if (!entry) return false;
        }
  return true;
}

NetworkSpec swap_network() {
  auto spec = testing::load("theorem1_2x3.json");
  spec.nodes[1] = spec.nodes[0];
  return spec;
}

NetworkSpec relabel(const NetworkSpec& spec) {
  NetworkSpec out = spec;
  std::reverse(out.nodes.begin(), out.nodes.end());
  for (auto& [a, b] : out.graph.edges) {
    a = 1 - a;
    b = 1 - b;
  }
  Mat p(2, 2);
  p << 0, 1, 1, 0;
  out.coupling.matrix = p * spec.coupling.matrix * p;
  return out;
}

}  // namespace

TEST_CASE("Example 1 is a valid network and passes with the golden bound") {
  const auto spec = testing::load("example1.json");
  CHECK(validate_spec(spec).ok());
  const auto r = theorem2_check(spec);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.entries.size() == 9);
  CHECK(std::abs(r.entropy_bound - 2.0 * std::log((1.0 + std::sqrt(5.0)) / 2.0)) <= 1e-9);
  CHECK(r.global_eps == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(theorem1_check(spec), PreconditionError);
}

TEST_CASE("zero pattern and transition validation") {
  auto spec = testing::load("example1.json");
  spec.graph.edges = {{0, 1}};
  spec.coupling.matrix = testing::mat2(1, 0.05, 0.05, 1);
  const auto v = validate_spec(spec);
  CHECK_FALSE(v.ok());
  spec.coupling.matrix = testing::mat2(1, 0, 0.05, 1);
  CHECK(validate_spec(spec).ok());
  CHECK_FALSE(validate_transition({{1, 0}, {1, 0}}).ok());
  spec.coupling.matrix = testing::mat2(1, 1, 1, 1);
  spec.graph.edges = {{0, 1}, {1, 0}};
  CHECK_FALSE(validate_spec(spec).ok());
  CHECK_THROWS_AS(theorem2_check(spec), InvalidSpecError);
}

TEST_CASE("Kronecker products of transition matrices") {
  const TransitionMatrix a({{1, 1}, {1, 0}}), b({{0, 1}, {1, 1}});
  const auto k = kronecker({a, b});
  REQUIRE(k.size() == 4);
  int ones = 0;
  for (int i1 = 0; i1 < 2; ++i1)
    for (int i2 = 0; i2 < 2; ++i2)
      for (int j1 = 0; j1 < 2; ++j1)
        for (int j2 = 0; j2 < 2; ++j2) {
          CHECK(k(2 * i1 + i2, 2 * j1 + j2) == (a(i1, j1) && b(i2, j2)));
          ones += k(2 * i1 + i2, 2 * j1 + j2);
        }
  CHECK(ones == 9);  // three ones in each factor
  CHECK(kronecker({a}) == a);
  CHECK(kronecker({TransitionMatrix::identity(2), TransitionMatrix::identity(2)}) == TransitionMatrix::identity(4));
}

TEST_CASE("tau search picks the lexicographically first matching") {
  using B = std::vector<std::vector<bool>>;
  CHECK(tau_search(B{{true, false}, {false, true}}) == std::vector<int>{0, 1});
  CHECK(tau_search(B(3, std::vector<bool>(3, true))) == std::vector<int>{0, 1, 2});
  CHECK_FALSE(tau_search(B{{false, false}, {true, true}}).has_value());

  std::mt19937_64 rng(51);
  std::bernoulli_distribution bit(0.45);
  for (int trial = 0; trial < 600; ++trial) {
    const int d = 1 + trial % 6;
    B f(d, std::vector<bool>(d));
    for (auto& row : f)
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = bit(rng);
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::optional<std::vector<int>> first;
    do {
      bool ok = true;
      for (int k = 0; k < d; ++k) ok = ok && f[k][perm[k]];
      if (ok) {
        first = perm;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(tau_search(f) == first);
  }
}

TEST_CASE("theorem 1 on permutation networks") {
  const auto swaps = swap_network();
  const auto r = theorem1_check(swaps);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.period == 2);
  const auto r6 = theorem1_check(testing::load("theorem1_2x3.json"));
  CHECK(r6.verdict == Verdict::Pass);
  CHECK(r6.period == 6);
  CHECK(r6.entries.size() == 6);
  const auto weak = theorem1_check(with_coupling(swaps, Mat::Identity(2, 2) * 0.4));
  CHECK(weak.verdict == Verdict::Fail);
  REQUIRE(weak.binding_entry.has_value());
  CHECK(weak.entries[*weak.binding_entry].slack == doctest::Approx(0.8 - 1.0));
  CHECK_THROWS_AS(theorem1_check(testing::load("example1.json")), PreconditionError);
}

TEST_CASE("diffusive coupling verdicts follow the derived inequalities") {
  const auto base = testing::load("example1.json");
  for (int i = 0; i <= 60; ++i) {
    const double alpha = -0.05 + 0.005 * i;
    if (std::abs(alpha - 0.1) < 1e-9) continue;
    const auto r = theorem2_check(with_coupling(base, diffusive(alpha)));
    CHECK_MESSAGE((r.verdict == Verdict::Pass) == example1_oracle(alpha), "alpha = " << alpha);
  }
  CHECK(example1_oracle(0.0999));
  CHECK_FALSE(example1_oracle(0.1001));
  const auto fail = theorem2_check(with_coupling(base, diffusive(0.1001)));
  REQUIRE(fail.binding_entry.has_value());
  CHECK(fail.entries[*fail.binding_entry].verdict == Verdict::Fail);
  CHECK(fail.entries[*fail.binding_entry].slack == doctest::Approx(-0.001).epsilon(1e-6));
  const auto near = theorem2_check(with_coupling(base, diffusive(0.099)));
  CHECK(near.verdict == Verdict::Pass);
  CHECK(near.global_eps == doctest::Approx(0.005).epsilon(1e-9));
}

TEST_CASE("Example 2 matches Example 1 and its ambient coupling is conjugate") {
  const auto ex1 = testing::load("example1.json");
  auto ex2 = testing::load("example2.json");
  const auto audit = conjugacy_audit(ex2);
  CHECK(audit.ok());
  CHECK(audit.worst_residual < 1e-9);
  for (double alpha : {0.0, 0.05, 0.0999, 0.1001, 0.2}) {
    const Mat a = diffusive(alpha);
    auto shifted = ex2;
    shifted.coupling.matrix = a;
    shifted.coupling.ambient = PiecewiseAffineMap::affine(a, testing::vec({1, 2}) - a * testing::vec({1, 2}));
    CHECK(conjugacy_audit(shifted).worst_residual < 1e-9);
    const auto r1 = theorem2_check(with_coupling(ex1, a));
    const auto r2 = theorem2_check(shifted);
    CHECK(r1.verdict == r2.verdict);
    CHECK(r1.entropy_bound == r2.entropy_bound);
    CHECK(r1.global_eps == doctest::Approx(r2.global_eps).epsilon(1e-12));
  }
  ex2.coupling.ambient = PiecewiseAffineMap::affine(Mat::Identity(2, 2), testing::vec({0.01, 0.0}));
  CHECK(conjugacy_audit(ex2).worst_residual == doctest::Approx(0.01).epsilon(1e-9));
  CHECK_FALSE(validate_spec(ex2).ok());
}

TEST_CASE("verdicts do not depend on node labels") {
  const auto base = testing::load("example1.json");
  for (double alpha : {0.0, 0.03, 0.0999, 0.1001, 0.15}) {
    const auto spec = with_coupling(base, diffusive(alpha));
    const auto a = theorem2_check(spec), b = theorem2_check(relabel(spec));
    CHECK(a.verdict == b.verdict);
    CHECK(a.global_eps == doctest::Approx(b.global_eps).epsilon(1e-12));
  }
  Mat skew(2, 2);
  skew << 0.95, 0.04, 0.0, 1.0;
  const auto spec = with_coupling(base, skew);
  CHECK(theorem2_check(spec).verdict == theorem2_check(relabel(spec)).verdict);
}

TEST_CASE("stronger expansion about centered targets never breaks a pass") {
  const auto base = testing::load("theorem1_2x3.json");
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> off(-0.3, 0.3), c(1.0, 3.0);
  int passes = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Mat a = Mat::Identity(2, 2) + testing::random_matrix(rng, 2, 2, 0.3);
    const auto r = theorem1_check(with_coupling(base, a));
    if (r.verdict != Verdict::Pass) continue;
    ++passes;
    CHECK(theorem1_check(with_coupling(base, a * c(rng))).verdict == Verdict::Pass);
  }
  CHECK(passes > 10);
}

TEST_CASE("a single node with identity coupling reduces to its local coverings") {
  for (const char* name : {"example1_node1.json", "example1_node2.json"}) {
    const auto base = testing::load(name);
    for (double c : {0.3, 0.6, 0.9, 1.0, 1.4}) {
      auto spec = base;
      spec.nodes[0].local_map = base.nodes[0].local_map.scaled(c);
      bool all = true;
      const auto& w = spec.nodes[0].transition;
      for (int i = 0; i < w.size(); ++i)
        for (int j = 0; j < w.size(); ++j)
          if (w(i, j))
            all = all && check_covering(spec.nodes[0].hsets[i], "", target_center(spec, 0, j), chart_form(spec, 0, i, j)).verdict ==
                             Verdict::Pass;
      CHECK_MESSAGE((theorem2_check(spec).verdict == Verdict::Pass) == all, name << " scaled by " << c);
    }
  }
}

TEST_CASE("chart forms are derived from the local maps") {
  const auto spec = testing::load("example1.json");
  const auto u12 = chart_form(spec, 0, 1, 0).u;
  CHECK(u12(-1.0) == doctest::Approx(-2.0));
  CHECK(u12(1.0) == doctest::Approx(2.0));
  const auto u21 = chart_form(spec, 1, 0, 1).u;
  CHECK(u21(-1.0) == doctest::Approx(1.0));
  CHECK(u21(1.0) == doctest::Approx(5.0));
}
