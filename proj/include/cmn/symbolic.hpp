#pragma once

#include "cmn/geometry.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <vector>

namespace cmn {

using BigInt = boost::multiprecision::cpp_int;

// Square 0/1 matrix whose row and column sums are all at least one.
class TransitionMatrix {
 public:
  // Throws Error on a non-square table, an entry outside {0, 1} or a zero row/column.
  explicit TransitionMatrix(const std::vector<std::vector<int>>& bits);

  static TransitionMatrix identity(int n);
  // Row i has its one in column perm[i].
  static TransitionMatrix permutation(const std::vector<int>& perm);

  int size() const { return n_; }
  bool operator()(int i, int j) const { return bits_[static_cast<size_t>(i) * n_ + j] != 0; }
  bool is_permutation() const;
  std::vector<std::vector<int>> rows() const;
  Mat as_matrix() const;

  friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
    return a.n_ == b.n_ && a.bits_ == b.bits_;
  }

 private:
  TransitionMatrix() = default;
  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

ValidationReport validate_transition(const std::vector<std::vector<int>>& bits);

// Perron root. Closed form for n <= 2; otherwise each strongly connected
// block is iterated as B + I, bracketed by Collatz-Wielandt quotients.
double spectral_radius(const TransitionMatrix& w, double tol = 1e-12);

// Sum of log rho(W_k).
double entropy_lower_bound(const std::vector<TransitionMatrix>& ws);

// Admissible words of length n: the entry sum of W^(n-1), exact.
BigInt count_words(const TransitionMatrix& w, int n);

// Symbols are 0-based.
bool is_admissible(const std::vector<int>& seq, const TransitionMatrix& w);

// Admissible words s_0..s_{p-1} with s_{p-1} -> s_0 allowed, in lexicographic order.
std::vector<std::vector<int>> closed_loops(const TransitionMatrix& w, int p);

std::int64_t lcm_period(const std::vector<int>& dims);

}  // namespace cmn
