#include "cmn/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace cmn {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double op_inf_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

Mat block_diag(const std::vector<Mat>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Mat out = Mat::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Polytope unit_box(int dim) {
  Polytope p;
  p.reserve(2 * dim);
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e(i) = 1.0;
    p.push_back({e, 1.0});
    p.push_back({-e, 1.0});
  }
  return p;
}

Polytope box(const Vec& lo, const Vec& hi) {
  Polytope p;
  const int dim = static_cast<int>(lo.size());
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e(i) = 1.0;
    if (std::isfinite(hi(i))) p.push_back({e, hi(i)});
    if (std::isfinite(lo(i))) p.push_back({-e, -lo(i)});
  }
  return p;
}

bool contains(const Polytope& p, const Vec& x, double slack) {
  for (const auto& h : p) {
    const double scale = std::max(1.0, std::abs(h.bound));
    if (h.normal.dot(x) > h.bound + slack * scale) return false;
  }
  return true;
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<Vec> enumerate_vertices(const Polytope& p, int dim, double slack) {
  std::vector<Vec> out;
  const int m = static_cast<int>(p.size());
  if (dim == 0) {
    out.emplace_back(Vec(0));
    return out;
  }
  if (m < dim) return out;
  if (binomial(m, dim) > 2e6) throw Error("vertex enumeration: too many constraint subsets");

  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) idx[i] = i;
  Mat a(dim, dim);
  Vec b(dim);
  while (true) {
    for (int r = 0; r < dim; ++r) {
      a.row(r) = p[idx[r]].normal.transpose();
      b(r) = p[idx[r]].bound;
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() == dim) {
      Vec x = lu.solve(b);
      if (x.allFinite() && contains(p, x, slack)) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Vec& v) {
          return (v - x).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, inf_norm(x));
        });
        if (!dup) out.push_back(std::move(x));
      }
    }
    // next combination
    int k = dim - 1;
    while (k >= 0 && idx[k] == m - dim + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < dim; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::optional<double> min_abs_max(const Polytope& p, int dim, const Mat& rows, const Vec& shift) {
  Polytope lifted;
  lifted.reserve(p.size() + 2 * rows.rows());
  for (const auto& h : p) {
    Vec n(dim + 1);
    n << h.normal, 0.0;
    lifted.push_back({n, h.bound});
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Vec n(dim + 1);
    n << rows.row(i).transpose(), -1.0;
    lifted.push_back({n, -shift(i)});
    n << -rows.row(i).transpose(), -1.0;
    lifted.push_back({n, shift(i)});
  }
  const auto verts = enumerate_vertices(lifted, dim + 1);
  if (verts.empty()) return std::nullopt;
  double best = kInf;
  for (const auto& v : verts) {
    // evaluate the objective directly; t at a vertex may carry slack error
    const Vec x = v.head(dim);
    best = std::min(best, inf_norm(rows * x + shift));
  }
  return best;
}

}  // namespace cmn
