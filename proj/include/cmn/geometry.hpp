#pragma once

#include "cmn/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cmn {

// Collected findings of a structural check. Errors invalidate the input,
// warnings do not.
struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
  void error(std::string msg) { errors.push_back(std::move(msg)); }
  void warn(std::string msg) { warnings.push_back(std::move(msg)); }
  void merge(const ValidationReport& other, const std::string& prefix = {});
};

// Invertible affine coordinate change R^{u+s} -> R^u x R^s.
class AffineChart {
 public:
  AffineChart(int dim_u, int dim_s, Mat linear, Vec offset);

  static AffineChart identity(int dim_u, int dim_s);
  // x -> x + shift
  static AffineChart translation(int dim_u, int dim_s, const Vec& shift);

  int dim_u() const { return dim_u_; }
  int dim_s() const { return dim_s_; }
  int dim() const { return dim_u_ + dim_s_; }
  const Mat& linear() const { return linear_; }
  const Vec& offset() const { return offset_; }
  const Mat& inverse_linear() const { return inverse_; }

  Vec apply(const Vec& x) const;
  Vec inverse(const Vec& z) const;

  // this o inner
  AffineChart after(const AffineChart& inner) const;

 private:
  int dim_u_;
  int dim_s_;
  Mat linear_;
  Vec offset_;
  Mat inverse_;
};

Vec chart_apply(const AffineChart& chart, const Vec& point);

// Compact set chart^{-1}(closed unit ball of R^u x R^s) in the max-norm.
struct HSet {
  std::string id;
  AffineChart chart;

  int dim() const { return chart.dim(); }
  // 1 - |chart(x)|, positive strictly inside.
  double interior_margin(const Vec& x) const;
  bool contains(const Vec& x, double slack = tol::kBoundary) const;
  Polytope polytope() const;
  // Images of the 2^dim corners of the unit cube.
  std::vector<Vec> vertices() const;
};

// Center p = (p_u, p_s) and stable radius r of one member of a unified tuple.
// Induces g(x, y) = (x - p_u, (y - p_s) / r).
struct CenterScale {
  Vec p_u;
  Vec p_s;
  double r = 1.0;

  AffineChart as_chart() const;
};

struct UnifiedMember {
  std::string id;
  CenterScale center;
};

// A tuple of disjoint h-sets that share one ambient chart, under which
// member i is the unit unstable ball centered at (3i, 0, ..., 0).
struct UnifiedSet {
  AffineChart chart;
  std::vector<UnifiedMember> members;

  int size() const { return static_cast<int>(members.size()); }
  // Chart of member i: g_i o chart.
  AffineChart member_chart(int i) const;
  HSet member_hset(int i) const;
};

ValidationReport unified_validate(const UnifiedSet& n);

struct AffinePiece {
  Mat linear;
  Vec offset;

  Vec apply(const Vec& x) const { return linear * x + offset; }
};

struct Cell {
  Polytope region;
  AffinePiece piece;
};

// Continuous map assembled from affine pieces on polyhedral cells. Maps on
// the line keep their sorted breakpoints so one-dimensional algorithms can be
// exact.
class PiecewiseAffineMap {
 public:
  // A single affine piece on all of R^n.
  static PiecewiseAffineMap affine(Mat linear, Vec offset);
  // Pieces on (-inf, b_0], [b_0, b_1], ..., [b_{k-1}, +inf), clipped to [lo, hi].
  static PiecewiseAffineMap interval(std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
                                     double lo = -kInf, double hi = kInf);
  static PiecewiseAffineMap polyhedral(int dim_in, int dim_out, std::vector<Cell> cells, Vec lo, Vec hi);

  int dim_in() const { return dim_in_; }
  int dim_out() const { return dim_out_; }
  bool is_affine() const { return cells_.size() == 1; }
  bool is_interval() const { return dim_in_ == 1; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const Vec& domain_lo() const { return lo_; }
  const Vec& domain_hi() const { return hi_; }

  // Index of the first cell containing x, nullopt outside the domain.
  std::optional<int> locate(const Vec& x) const;
  std::optional<Vec> try_eval(const Vec& x) const;
  Vec operator()(const Vec& x) const;
  double operator()(double x) const;

  // L o F + c
  PiecewiseAffineMap post_compose(const Mat& linear, const Vec& offset) const;
  // F o (x -> L x + c); L must be invertible.
  PiecewiseAffineMap pre_compose(const Mat& linear, const Vec& offset) const;
  PiecewiseAffineMap scaled(double factor) const;

  // Largest operator norm over the pieces; a Lipschitz constant in the
  // max-norm for a continuous map.
  double lipschitz() const;

  // Pairs (vertex, cell index) of every cell intersected with `region`.
  std::vector<std::pair<Vec, int>> vertices_over(const Polytope& region) const;
  // Bounding box of F(region); exact per coordinate for polytopes.
  std::pair<Vec, Vec> image_box(const Polytope& region) const;

  ValidationReport validate(double continuity_tol = tol::kContinuity) const;

 private:
  int dim_in_ = 0;
  int dim_out_ = 0;
  std::vector<Cell> cells_;
  std::vector<double> breakpoints_;
  Vec lo_;
  Vec hi_;
};

struct StretchBounds {
  double min_rel = 0.0;      // lower bound on min over the unit sphere of |F(x) - ref|
  double max_abs = 0.0;      // max over the closed unit ball of |F(x) - ref|
  bool certified = true;     // both values exact; false means min_rel carries grid slack
  double min_sampled = 0.0;  // a value of |F(x) - ref| actually attained on the sphere
};

inline constexpr int kDefaultGrid = 64;

// Both operations compute min and max together; the max is always exact.
StretchBounds min_stretch(const PiecewiseAffineMap& f, const Vec& ref, int grid = kDefaultGrid);
StretchBounds max_stretch(const PiecewiseAffineMap& f, const Vec& ref);

}  // namespace cmn
