#pragma once

#include "cmn/dynamics.hpp"
#include "cmn/spec_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace testing {

using cmn::Mat;
using cmn::Vec;

inline std::string fixture(const std::string& name) { return std::string(CMN_FIXTURE_DIR) + "/" + name; }

inline cmn::NetworkSpec load(const std::string& name) { return cmn::io::load_spec(fixture(name)); }

inline Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Mat diffusive(double alpha) { return mat2(1.0 - alpha, alpha, alpha, 1.0 - alpha); }

inline cmn::NetworkSpec with_coupling(cmn::NetworkSpec spec, const Mat& a) {
  spec.coupling.matrix = a;
  if (spec.coupling.ambient) spec.coupling.ambient.reset();
  return spec;
}

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline cmn::PiecewiseAffineMap line(double slope, double intercept) {
  Mat l(1, 1);
  l(0, 0) = slope;
  return cmn::PiecewiseAffineMap::affine(l, Vec::Constant(1, intercept));
}

// Continuous piecewise-affine map of the line through (knots[i], values[i]),
// extended affinely beyond the outer knots.
inline cmn::PiecewiseAffineMap through(const std::vector<double>& knots, const std::vector<double>& values) {
  std::vector<cmn::AffinePiece> pieces;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double s = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    Mat l(1, 1);
    l(0, 0) = s;
    pieces.push_back({l, Vec::Constant(1, values[i] - s * knots[i])});
  }
  std::vector<double> bps(knots.begin() + 1, knots.end() - 1);
  return cmn::PiecewiseAffineMap::interval(bps, pieces);
}

// Random 0/1 matrix with every row and column sum at least one.
inline cmn::TransitionMatrix random_transition(std::mt19937_64& rng, int n, double density = 0.4) {
  std::bernoulli_distribution bit(density);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::vector<std::vector<int>> b(n, std::vector<int>(n));
  for (auto& row : b)
    for (auto& x : row) x = bit(rng);
  for (int i = 0; i < n; ++i) {
    bool row = false, col = false;
    for (int j = 0; j < n; ++j) {
      row = row || b[i][j];
      col = col || b[j][i];
    }
    if (!row) b[i][pick(rng)] = 1;
    if (!col) b[pick(rng)][i] = 1;
  }
  return cmn::TransitionMatrix(b);
}

inline Mat random_matrix(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// Signed count of the pieces of the map through (knots, values) that cross
// level q inside [-1, 1].
inline int crossing_oracle(const std::vector<double>& knots, const std::vector<double>& values, double q) {
  int total = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = std::max(knots[i], -1.0), b = std::min(knots[i + 1], 1.0);
    if (a >= b) continue;
    const double s = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    const double va = values[i] + s * (a - knots[i]) - q, vb = values[i] + s * (b - knots[i]) - q;
    if (va * vb < 0.0) total += vb > 0.0 ? 1 : -1;
  }
  return total;
}

// Counts admissible words by listing them one by one.
inline long long enumerate_words(const cmn::TransitionMatrix& w, int n) {
  const int m = w.size();
  long long total = 0;
  std::vector<int> word;
  auto extend = [&](auto&& self) -> void {
    if (static_cast<int>(word.size()) == n) {
      ++total;
      return;
    }
    for (int s = 0; s < m; ++s) {
      if (!word.empty() && !w(word.back(), s)) continue;
      word.push_back(s);
      self(self);
      word.pop_back();
    }
  };
  extend(extend);
  return total;
}

}  // namespace testing
