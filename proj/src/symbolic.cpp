#include "cmn/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cmn {

ValidationReport validate_transition(const std::vector<std::vector<int>>& bits) {
  ValidationReport r;
  const size_t n = bits.size();
  if (n == 0) {
    r.error("transition matrix is empty");
    return r;
  }
  std::vector<int> col(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (bits[i].size() != n) {
      r.error("transition matrix is not square");
      return r;
    }
    int row = 0;
    for (size_t j = 0; j < n; ++j) {
      const int b = bits[i][j];
      if (b != 0 && b != 1) {
        std::ostringstream m;
        m << "entry (" << i + 1 << "," << j + 1 << ") is " << b << ", expected 0 or 1";
        r.error(m.str());
      }
      row += b != 0;
      col[j] += b != 0;
    }
    if (row == 0) r.error("row " + std::to_string(i + 1) + " has no nonzero entry");
  }
  for (size_t j = 0; j < n; ++j)
    if (col[j] == 0) r.error("column " + std::to_string(j + 1) + " has no nonzero entry");
  return r;
}

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<int>>& bits) {
  const auto rep = validate_transition(bits);
  if (!rep.ok()) throw Error("invalid transition matrix: " + rep.errors.front());
  n_ = static_cast<int>(bits.size());
  bits_.reserve(bits.size() * bits.size());
  for (const auto& row : bits)
    for (int b : row) bits_.push_back(static_cast<std::uint8_t>(b));
}

TransitionMatrix TransitionMatrix::identity(int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  return permutation(perm);
}

TransitionMatrix TransitionMatrix::permutation(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<std::vector<int>> bits(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) {
    if (perm[i] < 0 || perm[i] >= n) throw Error("permutation: index out of range");
    bits[i][perm[i]] = 1;
  }
  return TransitionMatrix(bits);
}

bool TransitionMatrix::is_permutation() const {
  for (int i = 0; i < n_; ++i) {
    int row = 0;
    for (int j = 0; j < n_; ++j) row += (*this)(i, j);
    if (row != 1) return false;
  }
  // Row sums of one with no zero column force a permutation.
  return true;
}

std::vector<std::vector<int>> TransitionMatrix::rows() const {
  std::vector<std::vector<int>> out(n_, std::vector<int>(n_));
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) out[i][j] = (*this)(i, j);
  return out;
}

Mat TransitionMatrix::as_matrix() const {
  Mat m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

namespace {

// Tarjan's algorithm; components come out in reverse topological order.
std::vector<std::vector<int>> strong_components(const TransitionMatrix& w) {
  const int n = w.size();
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<int>> comps;
  int counter = 0;

  // Iterative DFS: frames hold (node, next neighbour to try).
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<int, int>> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < n) {
        const int t = next++;
        if (!w(v, t)) continue;
        if (index[t] < 0) {
          index[t] = low[t] = counter++;
          stack.push_back(t);
          on_stack[t] = true;
          frames.push_back({t, 0});
        } else if (on_stack[t]) {
          low[v] = std::min(low[v], index[t]);
        }
        continue;
      }
      const int done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<int> comp;
        int x;
        do {
          x = stack.back();
          stack.pop_back();
          on_stack[x] = false;
          comp.push_back(x);
        } while (x != done);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
    }
  }
  return comps;
}

double closed_form(const Mat& m) {
  if (m.rows() == 1) return m(0, 0);
  const double half_tr = 0.5 * (m(0, 0) + m(1, 1));
  const double half_gap = 0.5 * (m(0, 0) - m(1, 1));
  return half_tr + std::sqrt(half_gap * half_gap + m(0, 1) * m(1, 0));
}

// Perron root of an irreducible nonnegative block via B + I, which is primitive.
double irreducible_radius(const Mat& b, double tol) {
  const auto n = b.rows();
  if (n <= 2) return closed_form(b);
  const Mat m = b + Mat::Identity(n, n);
  Vec x = Vec::Ones(n);
  double lo = 0.0, hi = kInf;
  for (int it = 0; it < 1000000; ++it) {
    const Vec y = m * x;
    const Vec q = y.cwiseQuotient(x);
    lo = std::max(lo, q.minCoeff());
    hi = std::min(hi, q.maxCoeff());
    if (hi - lo <= tol * lo) break;
    x = y / y.maxCoeff();
  }
  return 0.5 * (lo + hi) - 1.0;
}

}  // namespace

double spectral_radius(const TransitionMatrix& w, double tol) {
  const Mat a = w.as_matrix();
  if (w.size() <= 2) return closed_form(a);
  double rho = 0.0;
  for (const auto& comp : strong_components(w)) {
    const auto k = static_cast<Eigen::Index>(comp.size());
    if (k == 1 && !w(comp[0], comp[0])) continue;
    Mat b(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) b(i, j) = a(comp[i], comp[j]);
    rho = std::max(rho, irreducible_radius(b, tol));
  }
  return rho;
}

double entropy_lower_bound(const std::vector<TransitionMatrix>& ws) {
  if (ws.empty()) throw PreconditionError("entropy_lower_bound: no matrices");
  double sum = 0.0;
  for (const auto& w : ws) sum += std::log(spectral_radius(w));
  return sum;
}

BigInt count_words(const TransitionMatrix& w, int n) {
  if (n < 1) throw PreconditionError("count_words: length must be at least 1");
  const int k = w.size();
  // v[j] = number of admissible words of the current length ending in j.
  std::vector<BigInt> v(k, 1), next(k);
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < k; ++j) {
      next[j] = 0;
      for (int i = 0; i < k; ++i)
        if (w(i, j)) next[j] += v[i];
    }
    v.swap(next);
  }
  BigInt total = 0;
  for (const auto& x : v) total += x;
  return total;
}

bool is_admissible(const std::vector<int>& seq, const TransitionMatrix& w) {
  for (int s : seq)
    if (s < 0 || s >= w.size()) throw Error("is_admissible: symbol " + std::to_string(s + 1) + " out of range");
  for (size_t i = 1; i < seq.size(); ++i)
    if (!w(seq[i - 1], seq[i])) return false;
  return true;
}

std::vector<std::vector<int>> closed_loops(const TransitionMatrix& w, int p) {
  if (p < 1) throw PreconditionError("closed_loops: length must be at least 1");
  const int n = w.size();
  std::vector<std::vector<int>> out;
  std::vector<int> word;
  word.reserve(p);
  auto extend = [&](auto&& self) -> void {
    if (static_cast<int>(word.size()) == p) {
      if (w(word.back(), word.front())) out.push_back(word);
      return;
    }
    for (int s = 0; s < n; ++s) {
      if (!word.empty() && !w(word.back(), s)) continue;
      word.push_back(s);
      self(self);
      word.pop_back();
    }
  };
  extend(extend);
  return out;
}

std::int64_t lcm_period(const std::vector<int>& dims) {
  if (dims.empty()) throw PreconditionError("lcm_period: no dimensions");
  std::int64_t l = 1;
  for (int d : dims) {
    if (d < 1) throw PreconditionError("lcm_period: dimensions must be positive");
    l = std::lcm(l, static_cast<std::int64_t>(d));
  }
  return l;
}

}  // namespace cmn
