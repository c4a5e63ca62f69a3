#include "support.hpp"

#include <doctest.h>

using namespace cmn;
using testing::line;
using testing::vec;

TEST_CASE("degree of affine maps") {
  CHECK(degree_affine(Mat::Identity(1, 1), vec({0}), vec({0})).value == 1);
  CHECK(degree_affine(Mat::Identity(1, 1) * 2.0, vec({1.5}), vec({0})).value == 1);
  CHECK(degree_affine(Mat::Identity(1, 1) * 2.0, vec({0}), vec({5})).value == 0);
  CHECK(degree_affine(-Mat::Identity(3, 3), Vec::Zero(3), Vec::Zero(3)).value == -1);
  CHECK_THROWS_AS(degree_affine(Mat::Identity(1, 1), vec({0}), vec({1})), BoundaryDegreeError);
}

TEST_CASE("degree of one-dimensional maps") {
  CHECK(degree_1d(line(3.5, 1.5), 0.0).value == 1);
  CHECK(degree_1d(line(-1, 0), 0.0).value == -1);
  const auto parabola = testing::through({-1, -0.5, 0, 0.5, 1}, {1, 0.25, 0, 0.25, 1});
  CHECK(degree_1d(parabola, -0.5).value == 0);
  CHECK(degree_1d(parabola, 0.5).value == 0);
}

TEST_CASE("products and affine compositions") {
  const DegreeValue p{1}, m{-1}, z{0};
  CHECK(degree_product(std::vector<DegreeValue>{p, p}).value == 1);
  CHECK(degree_product(std::vector<DegreeValue>{p, m, p}).value == -1);
  CHECK(degree_product(std::vector<DegreeValue>{z, m}).value == 0);
  CHECK(degree_compose_affine(Mat::Identity(2, 2), p).value == 1);
  CHECK(degree_compose_affine(-Mat::Identity(1, 1), p).value == -1);
  Mat a(2, 2);
  a << 0.9, 0.1, 0.2, 0.8;
  const Mat psi = kron(a, Mat::Identity(1, 1));
  CHECK(degree_compose_affine(psi, m).value == -1);
}

TEST_CASE("degree_1d agrees with the signed crossing oracle on random maps") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> val(-3.0, 3.0), knot(-1.5, 1.5);
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> knots{-4.0, 4.0};
    for (int i = count(rng); i > 0; --i) knots.push_back(knot(rng));
    std::sort(knots.begin(), knots.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < knots.size(); ++i) values.push_back(val(rng));
    const auto f = testing::through(knots, values);
    const double q = val(rng);
    if (std::abs(f(-1.0) - q) < 1e-9 || std::abs(f(1.0) - q) < 1e-9) continue;
    CHECK(degree_1d(f, q).value == testing::crossing_oracle(knots, values, q));
  }
}

TEST_CASE("degree_affine agrees with sign of determinant and membership") {
  std::mt19937_64 rng(22);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int u = 1 + trial % 3;
    const Mat l = testing::random_matrix(rng, u, u, 2.0);
    if (std::abs(l.determinant()) < 1e-6) continue;
    const Vec b = testing::random_vec(rng, u, 2.0), q = testing::random_vec(rng, u, 2.0);
    const Vec pre = l.fullPivLu().solve(q - b);
    if (std::abs(inf_norm(pre) - 1.0) < 1e-9) continue;
    const int expected = inf_norm(pre) < 1.0 ? (l.determinant() > 0 ? 1 : -1) : 0;
    CHECK(degree_affine(l, b, q).value == expected);
    ++compared;
  }
  CHECK(compared > 950);
}

TEST_CASE("affine and one-dimensional degrees coincide") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> v(-3.0, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double a = v(rng), b = v(rng), q = v(rng);
    if (std::abs(a) < 1e-6 || std::abs(std::abs((q - b) / a) - 1.0) < 1e-9) continue;
    CHECK(degree_affine(Mat::Constant(1, 1, a), vec({b}), vec({q})).value == degree_1d(line(a, b), q).value);
  }
}

TEST_CASE("product degree equals the degree of the block-diagonal map") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 300; ++trial) {
    const int u1 = 1 + trial % 2, u2 = 1 + (trial / 2) % 2;
    const Mat l1 = testing::random_matrix(rng, u1, u1, 2.0), l2 = testing::random_matrix(rng, u2, u2, 2.0);
    if (std::abs(l1.determinant()) < 1e-6 || std::abs(l2.determinant()) < 1e-6) continue;
    const Vec b1 = testing::random_vec(rng, u1), b2 = testing::random_vec(rng, u2);
    const Vec q1 = testing::random_vec(rng, u1), q2 = testing::random_vec(rng, u2);
    try {
      const DegreeValue parts[] = {degree_affine(l1, b1, q1), degree_affine(l2, b2, q2)};
      CHECK(degree_product(parts).value == degree_affine(block_diag({l1, l2}), concat(b1, b2), concat(q1, q2)).value);
    } catch (const BoundaryDegreeError&) {
    }
  }
}

TEST_CASE("degree at zero is invariant under positive scaling") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> v(-3.0, 3.0), c(0.1, 10.0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto f = testing::through({-2, -0.4, 0.3, 2}, {v(rng), v(rng), v(rng), v(rng)});
    if (std::abs(f(-1.0)) < 1e-9 || std::abs(f(1.0)) < 1e-9) continue;
    CHECK(degree_1d(f.scaled(c(rng)), 0.0).value == degree_1d(f, 0.0).value);
  }
}
