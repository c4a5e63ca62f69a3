#include "cmn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cmn {

void ValidationReport::merge(const ValidationReport& other, const std::string& prefix) {
  for (const auto& e : other.errors) errors.push_back(prefix + e);
  for (const auto& w : other.warnings) warnings.push_back(prefix + w);
}

// ---------------------------------------------------------------- charts

AffineChart::AffineChart(int dim_u, int dim_s, Mat linear, Vec offset)
    : dim_u_(dim_u), dim_s_(dim_s), linear_(std::move(linear)), offset_(std::move(offset)) {
  const int n = dim_u + dim_s;
  if (dim_u < 0 || dim_s < 0 || n == 0) throw DimensionError("chart: u + s must be positive");
  if (linear_.rows() != n || linear_.cols() != n || offset_.size() != n) {
    std::ostringstream msg;
    msg << "chart: expected " << n << "x" << n << " linear part and offset of length " << n;
    throw DimensionError(msg.str());
  }
  const double det = linear_.determinant();
  if (!(std::abs(det) >= tol::kSingularDet)) {
    std::ostringstream msg;
    msg << "chart: linear part is singular (|det| = " << std::abs(det) << ")";
    throw Error(msg.str());
  }
  inverse_ = linear_.inverse();
}

AffineChart AffineChart::identity(int dim_u, int dim_s) {
  const int n = dim_u + dim_s;
  return AffineChart(dim_u, dim_s, Mat::Identity(n, n), Vec::Zero(n));
}

AffineChart AffineChart::translation(int dim_u, int dim_s, const Vec& shift) {
  const int n = dim_u + dim_s;
  return AffineChart(dim_u, dim_s, Mat::Identity(n, n), shift);
}

Vec AffineChart::apply(const Vec& x) const {
  if (x.size() != dim()) throw DimensionError("chart_apply: point has wrong dimension");
  return linear_ * x + offset_;
}

Vec AffineChart::inverse(const Vec& z) const {
  if (z.size() != dim()) throw DimensionError("chart inverse: point has wrong dimension");
  return inverse_ * (z - offset_);
}

AffineChart AffineChart::after(const AffineChart& inner) const {
  if (inner.dim() != dim()) throw DimensionError("chart composition: dimension mismatch");
  return AffineChart(dim_u_, dim_s_, linear_ * inner.linear_, linear_ * inner.offset_ + offset_);
}

Vec chart_apply(const AffineChart& chart, const Vec& point) { return chart.apply(point); }

// ---------------------------------------------------------------- h-sets

double HSet::interior_margin(const Vec& x) const { return 1.0 - inf_norm(chart.apply(x)); }

bool HSet::contains(const Vec& x, double slack) const { return interior_margin(x) >= -slack; }

Polytope HSet::polytope() const {
  Polytope p;
  const int n = dim();
  for (int i = 0; i < n; ++i) {
    const Vec row = chart.linear().row(i).transpose();
    p.push_back({row, 1.0 - chart.offset()(i)});
    p.push_back({-row, 1.0 + chart.offset()(i)});
  }
  return p;
}

std::vector<Vec> HSet::vertices() const {
  const int n = dim();
  std::vector<Vec> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Vec corner(n);
    for (int i = 0; i < n; ++i) corner(i) = (mask >> i) & 1u ? 1.0 : -1.0;
    out.push_back(chart.inverse(corner));
  }
  return out;
}

AffineChart CenterScale::as_chart() const {
  if (!(r > 0.0)) throw Error("center/scale: radius must be positive");
  const int u = static_cast<int>(p_u.size());
  const int s = static_cast<int>(p_s.size());
  Vec diag(u + s);
  diag.head(u).setOnes();
  diag.tail(s).setConstant(1.0 / r);
  Vec off(u + s);
  off.head(u) = -p_u;
  off.tail(s) = -p_s / r;
  return AffineChart(u, s, diag.asDiagonal(), off);
}

AffineChart UnifiedSet::member_chart(int i) const { return members.at(i).center.as_chart().after(chart); }

HSet UnifiedSet::member_hset(int i) const { return HSet{members.at(i).id, member_chart(i)}; }

ValidationReport unified_validate(const UnifiedSet& n) {
  ValidationReport rep;
  const int u = n.chart.dim_u();
  const int s = n.chart.dim_s();
  if (n.members.empty()) {
    rep.error("unified set has no members");
    return rep;
  }
  for (int i = 0; i < n.size(); ++i) {
    const auto& c = n.members[i].center;
    std::ostringstream where;
    where << "member " << i + 1 << " (" << n.members[i].id << "): ";
    if (c.p_u.size() != u || c.p_s.size() != s) {
      rep.error(where.str() + "center dimensions do not match the chart");
      continue;
    }
    Vec expected = Vec::Zero(u);
    expected(0) = 3.0 * i;
    if (inf_norm(c.p_u - expected) > tol::kBoundary) {
      std::ostringstream msg;
      msg << where.str() << "unstable center must be (" << 3 * i << ", 0, ..., 0), got first coordinate "
          << c.p_u(0);
      rep.error(msg.str());
    }
    if (s > 0) {
      if (!(std::abs(c.p_s(0)) < 1.0)) rep.error(where.str() + "stable center first coordinate must satisfy |q| < 1");
      if (s > 1 && inf_norm(c.p_s.tail(s - 1)) > 0.0)
        rep.error(where.str() + "stable center coordinates after the first must be zero");
    }
    if (!(c.r > 0.0 && c.r <= 1.0)) {
      std::ostringstream msg;
      msg << where.str() << "stable radius must lie in (0, 1], got " << c.r;
      rep.error(msg.str());
    } else if (s > 0 && inf_norm(c.p_s) + c.r > 1.0 + tol::kBoundary) {
      rep.error(where.str() + "stable ball leaves the unified set (|q| + r > 1)");
    }
  }
  for (int i = 0; i < n.size(); ++i)
    for (int j = i + 1; j < n.size(); ++j) {
      const auto& a = n.members[i].center.p_u;
      const auto& b = n.members[j].center.p_u;
      if (a.size() == b.size() && inf_norm(a - b) <= 2.0) {
        std::ostringstream msg;
        msg << "members " << i + 1 << " and " << j + 1 << " overlap";
        rep.error(msg.str());
      }
    }
  return rep;
}

// ---------------------------------------------------------------- maps

namespace {

constexpr double kLocateSlack = 1e-12;
constexpr double kClip = 1e3;

Polytope clipped_domain(const Vec& lo, const Vec& hi) {
  Vec l = lo, h = hi;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (!std::isfinite(l(i))) l(i) = -kClip;
    if (!std::isfinite(h(i))) h(i) = kClip;
  }
  return box(l, h);
}

Polytope joined(std::initializer_list<const Polytope*> parts) {
  Polytope out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

// Largest t such that every constraint holds with slack t * |normal|.
double inner_radius(const Polytope& p, int dim) {
  Polytope lifted;
  for (const auto& h : p) {
    Vec n(dim + 1);
    n << h.normal, h.normal.norm();
    lifted.push_back({n, h.bound});
  }
  Vec cap = Vec::Zero(dim + 1);
  cap(dim) = 1.0;
  lifted.push_back({cap, 1.0});
  double best = -kInf;
  for (const auto& v : enumerate_vertices(lifted, dim + 1)) best = std::max(best, v(dim));
  return best;
}

}  // namespace

PiecewiseAffineMap PiecewiseAffineMap::affine(Mat linear, Vec offset) {
  if (linear.rows() != offset.size()) throw DimensionError("affine map: offset length must equal row count");
  PiecewiseAffineMap m;
  m.dim_in_ = static_cast<int>(linear.cols());
  m.dim_out_ = static_cast<int>(linear.rows());
  m.lo_ = Vec::Constant(m.dim_in_, -kInf);
  m.hi_ = Vec::Constant(m.dim_in_, kInf);
  m.cells_.push_back({Polytope{}, AffinePiece{std::move(linear), std::move(offset)}});
  return m;
}

PiecewiseAffineMap PiecewiseAffineMap::interval(std::vector<double> breakpoints, std::vector<AffinePiece> pieces,
                                                double lo, double hi) {
  if (pieces.size() != breakpoints.size() + 1)
    throw DimensionError("interval map: need exactly one more piece than breakpoints");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
      std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
    throw Error("interval map: breakpoints must be strictly increasing");
  if (!(lo < hi)) throw Error("interval map: empty domain");
  PiecewiseAffineMap m;
  m.dim_in_ = 1;
  m.dim_out_ = static_cast<int>(pieces.front().offset.size());
  m.lo_ = Vec::Constant(1, lo);
  m.hi_ = Vec::Constant(1, hi);
  m.breakpoints_ = std::move(breakpoints);
  Vec e(1);
  e << 1.0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    if (pieces[k].linear.cols() != 1 || pieces[k].linear.rows() != m.dim_out_ ||
        pieces[k].offset.size() != m.dim_out_)
      throw DimensionError("interval map: inconsistent piece dimensions");
    Polytope region;
    if (k > 0) region.push_back({-e, -m.breakpoints_[k - 1]});
    if (k < m.breakpoints_.size()) region.push_back({e, m.breakpoints_[k]});
    m.cells_.push_back({std::move(region), std::move(pieces[k])});
  }
  return m;
}

PiecewiseAffineMap PiecewiseAffineMap::polyhedral(int dim_in, int dim_out, std::vector<Cell> cells, Vec lo,
                                                  Vec hi) {
  if (cells.empty()) throw Error("polyhedral map: no cells");
  if (lo.size() != dim_in || hi.size() != dim_in) throw DimensionError("polyhedral map: domain box dimension");
  for (const auto& c : cells) {
    if (c.piece.linear.rows() != dim_out || c.piece.linear.cols() != dim_in || c.piece.offset.size() != dim_out)
      throw DimensionError("polyhedral map: inconsistent piece dimensions");
    for (const auto& h : c.region)
      if (h.normal.size() != dim_in) throw DimensionError("polyhedral map: constraint dimension");
  }
  if (dim_in == 1) {
    // Recover breakpoints so the one-dimensional fast paths apply.
    std::vector<std::pair<double, double>> spans;
    for (const auto& c : cells) {
      double a = -kInf, b = kInf;
      for (const auto& h : c.region) {
        if (h.normal(0) > 0) b = std::min(b, h.bound / h.normal(0));
        else if (h.normal(0) < 0) a = std::max(a, h.bound / h.normal(0));
      }
      spans.emplace_back(a, b);
    }
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return spans[x].first < spans[y].first; });
    bool chain = true;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      chain = chain && spans[order[i]].second == spans[order[i + 1]].first;
    chain = chain && !std::isfinite(spans[order.front()].first) && !std::isfinite(spans[order.back()].second);
    if (chain) {
      std::vector<double> bps;
      std::vector<AffinePiece> pieces;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (i + 1 < order.size()) bps.push_back(spans[order[i]].second);
        pieces.push_back(cells[order[i]].piece);
      }
      return interval(std::move(bps), std::move(pieces), lo(0), hi(0));
    }
  }
  PiecewiseAffineMap m;
  m.dim_in_ = dim_in;
  m.dim_out_ = dim_out;
  m.cells_ = std::move(cells);
  m.lo_ = std::move(lo);
  m.hi_ = std::move(hi);
  return m;
}

std::optional<int> PiecewiseAffineMap::locate(const Vec& x) const {
  if (x.size() != dim_in_) throw DimensionError("map evaluation: point has wrong dimension");
  for (int i = 0; i < dim_in_; ++i) {
    const double slack = kLocateSlack * std::max(1.0, std::abs(x(i)));
    if (x(i) < lo_(i) - slack || x(i) > hi_(i) + slack) return std::nullopt;
  }
  if (is_interval()) {
    const double v = x(0);
    const double slack = kLocateSlack * std::max(1.0, std::abs(v));
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), v - slack);
    return static_cast<int>(it - breakpoints_.begin());
  }
  for (std::size_t c = 0; c < cells_.size(); ++c)
    if (contains(cells_[c].region, x, kLocateSlack)) return static_cast<int>(c);
  return std::nullopt;
}

std::optional<Vec> PiecewiseAffineMap::try_eval(const Vec& x) const {
  const auto c = locate(x);
  if (!c) return std::nullopt;
  return cells_[*c].piece.apply(x);
}

Vec PiecewiseAffineMap::operator()(const Vec& x) const {
  auto y = try_eval(x);
  if (!y) {
    std::ostringstream msg;
    msg << "map is undefined at (" << x.transpose() << ")";
    throw Error(msg.str());
  }
  return *y;
}

double PiecewiseAffineMap::operator()(double x) const {
  if (dim_in_ != 1 || dim_out_ != 1) throw DimensionError("scalar evaluation needs a map R -> R");
  return (*this)(Vec::Constant(1, x))(0);
}

PiecewiseAffineMap PiecewiseAffineMap::post_compose(const Mat& linear, const Vec& offset) const {
  if (linear.cols() != dim_out_ || linear.rows() != offset.size())
    throw DimensionError("post_compose: dimension mismatch");
  PiecewiseAffineMap m = *this;
  m.dim_out_ = static_cast<int>(linear.rows());
  for (auto& c : m.cells_) {
    c.piece.offset = linear * c.piece.offset + offset;
    c.piece.linear = linear * c.piece.linear;
  }
  return m;
}

PiecewiseAffineMap PiecewiseAffineMap::pre_compose(const Mat& linear, const Vec& offset) const {
  if (linear.rows() != dim_in_ || linear.cols() != dim_in_ || offset.size() != dim_in_)
    throw DimensionError("pre_compose: dimension mismatch");
  if (!(std::abs(linear.determinant()) >= tol::kSingularDet)) throw Error("pre_compose: singular substitution");
  if (is_interval()) {
    const double a = linear(0, 0);
    const double b = offset(0);
    std::vector<double> bps;
    std::vector<AffinePiece> pieces;
    for (double bp : breakpoints_) bps.push_back((bp - b) / a);
    for (const auto& c : cells_) pieces.push_back({c.piece.linear * a, c.piece.linear * offset + c.piece.offset});
    double lo = (lo_(0) - b) / a, hi = (hi_(0) - b) / a;
    if (a < 0) {
      std::reverse(bps.begin(), bps.end());
      std::reverse(pieces.begin(), pieces.end());
      std::swap(lo, hi);
    }
    return interval(std::move(bps), std::move(pieces), lo, hi);
  }
  auto pull = [&](const Polytope& p) {
    Polytope out;
    for (const auto& h : p) out.push_back({linear.transpose() * h.normal, h.bound - h.normal.dot(offset)});
    return out;
  };
  const Polytope dom = pull(box(lo_, hi_));
  std::vector<Cell> cells;
  for (const auto& c : cells_) {
    Polytope region = pull(c.region);
    region.insert(region.end(), dom.begin(), dom.end());
    cells.push_back({std::move(region), {c.piece.linear * linear, c.piece.linear * offset + c.piece.offset}});
  }
  PiecewiseAffineMap m;
  m.dim_in_ = dim_in_;
  m.dim_out_ = dim_out_;
  m.cells_ = std::move(cells);
  m.lo_ = Vec::Constant(dim_in_, -kInf);
  m.hi_ = Vec::Constant(dim_in_, kInf);
  return m;
}

PiecewiseAffineMap PiecewiseAffineMap::scaled(double factor) const {
  return post_compose(factor * Mat::Identity(dim_out_, dim_out_), Vec::Zero(dim_out_));
}

double PiecewiseAffineMap::lipschitz() const {
  double l = 0.0;
  for (const auto& c : cells_) l = std::max(l, op_inf_norm(c.piece.linear));
  return l;
}

std::vector<std::pair<Vec, int>> PiecewiseAffineMap::vertices_over(const Polytope& region) const {
  std::vector<std::pair<Vec, int>> out;
  const Polytope dom = box(lo_, hi_);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const Polytope p = joined({&cells_[c].region, &dom, &region});
    for (auto& v : enumerate_vertices(p, dim_in_)) out.emplace_back(std::move(v), static_cast<int>(c));
  }
  return out;
}

std::pair<Vec, Vec> PiecewiseAffineMap::image_box(const Polytope& region) const {
  Vec lo = Vec::Constant(dim_out_, kInf);
  Vec hi = Vec::Constant(dim_out_, -kInf);
  for (const auto& [v, c] : vertices_over(region)) {
    const Vec y = cells_[c].piece.apply(v);
    lo = lo.cwiseMin(y);
    hi = hi.cwiseMax(y);
  }
  return {lo, hi};
}

ValidationReport PiecewiseAffineMap::validate(double continuity_tol) const {
  ValidationReport rep;
  if (is_interval()) {
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
      const Vec x = Vec::Constant(1, breakpoints_[k]);
      const double gap = inf_norm(cells_[k].piece.apply(x) - cells_[k + 1].piece.apply(x));
      if (gap > continuity_tol) {
        std::ostringstream msg;
        msg << "discontinuous at breakpoint " << breakpoints_[k] << " (jump " << gap << ")";
        rep.error(msg.str());
      }
    }
    return rep;
  }
  const Polytope dom = clipped_domain(lo_, hi_);
  for (std::size_t a = 0; a < cells_.size(); ++a)
    for (std::size_t b = a + 1; b < cells_.size(); ++b) {
      const Polytope both = joined({&cells_[a].region, &cells_[b].region, &dom});
      if (inner_radius(both, dim_in_) > 1e-9) {
        std::ostringstream msg;
        msg << "cells " << a + 1 << " and " << b + 1 << " overlap";
        rep.error(msg.str());
        continue;
      }
      for (const auto& v : enumerate_vertices(both, dim_in_)) {
        const double gap = inf_norm(cells_[a].piece.apply(v) - cells_[b].piece.apply(v));
        if (gap > continuity_tol) {
          std::ostringstream msg;
          msg << "cells " << a + 1 << " and " << b + 1 << " disagree on their shared boundary (jump " << gap
              << ")";
          rep.error(msg.str());
          break;
        }
      }
    }
  // coverage by sampling: a hole anywhere in the domain is an error
  std::mt19937_64 rng(0x5eed);
  Vec lo = lo_, hi = hi_;
  for (int i = 0; i < dim_in_; ++i) {
    if (!std::isfinite(lo(i))) lo(i) = -kClip;
    if (!std::isfinite(hi(i))) hi(i) = kClip;
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    Vec x(dim_in_);
    for (int i = 0; i < dim_in_; ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    if (!locate(x)) {
      std::ostringstream msg;
      msg << "cells do not cover the domain, e.g. (" << x.transpose() << ")";
      rep.error(msg.str());
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- stretch

namespace {

void require_on_ball(const PiecewiseAffineMap& f) {
  for (int i = 0; i < f.dim_in(); ++i)
    if (f.domain_lo()(i) > -1.0 || f.domain_hi()(i) < 1.0)
      throw Error("stretch: map is undefined on part of the closed unit ball");
}

double grid_face_min(const PiecewiseAffineMap& f, const Vec& ref, int grid) {
  const int u = f.dim_in();
  const int free = u - 1;
  double best = kInf;
  std::vector<int> idx(free, 0);
  Vec x(u);
  for (int axis = 0; axis < u; ++axis)
    for (double side : {-1.0, 1.0}) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        int k = 0;
        for (int i = 0; i < u; ++i) {
          if (i == axis) x(i) = side;
          else x(i) = -1.0 + 2.0 * idx[k++] / (grid - 1);
        }
        best = std::min(best, inf_norm(f(x) - ref));
        int j = 0;
        while (j < free && ++idx[j] == grid) idx[j++] = 0;
        if (j == free) break;
      }
    }
  return best;
}

}  // namespace

StretchBounds min_stretch(const PiecewiseAffineMap& f, const Vec& ref, int grid) {
  if (ref.size() != f.dim_out()) throw DimensionError("stretch: reference point dimension");
  if (grid < 2) throw Error("stretch: grid needs at least two points per axis");
  require_on_ball(f);
  const int u = f.dim_in();
  StretchBounds out;

  out.max_abs = 0.0;
  for (const auto& [v, c] : f.vertices_over(unit_box(u)))
    out.max_abs = std::max(out.max_abs, inf_norm(f.cells()[c].piece.apply(v) - ref));

  if (u == 1) {
    const Vec lo = Vec::Constant(1, -1.0), hi = Vec::Constant(1, 1.0);
    out.min_rel = std::min(inf_norm(f(lo) - ref), inf_norm(f(hi) - ref));
    out.min_sampled = out.min_rel;
  } else if (f.is_affine()) {
    const auto& piece = f.cells().front().piece;
    double best = kInf;
    for (int axis = 0; axis < u; ++axis)
      for (double side : {-1.0, 1.0}) {
        Polytope face = unit_box(u);
        Vec e = Vec::Zero(u);
        e(axis) = -side;
        face.push_back({e, -1.0});
        if (auto m = min_abs_max(face, u, piece.linear, piece.offset - ref)) best = std::min(best, *m);
      }
    out.min_rel = best;
    out.min_sampled = best;
  } else {
    const double sampled = grid_face_min(f, ref, grid);
    out.min_sampled = sampled;
    out.min_rel = std::max(0.0, sampled - f.lipschitz() / (grid - 1));
    out.certified = false;
  }
  return out;
}

StretchBounds max_stretch(const PiecewiseAffineMap& f, const Vec& ref) { return min_stretch(f, ref, kDefaultGrid); }

}  // namespace cmn
