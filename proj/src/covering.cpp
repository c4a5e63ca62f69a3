#include "cmn/covering.hpp"

#include <cmath>
#include <sstream>

namespace cmn {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
  if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
  return Verdict::Pass;
}

namespace {

int sign(double v) { return (v > 0) - (v < 0); }

std::optional<DegreeValue> safe_degree(const PiecewiseAffineMap& f, const Vec& q) {
  try {
    return degree_of(f, q);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool inside_box(const std::pair<Vec, Vec>& box, const Vec& q, double pad) {
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) < box.first(i) - pad || q(i) > box.second(i) + pad) return false;
  return true;
}

}  // namespace

UnstableTerm unstable_term(const PiecewiseAffineMap& u, double scale, const Vec& ref, int grid,
                           const TermDeviation& dev) {
  const PiecewiseAffineMap f = u.scaled(scale);
  const StretchBounds b = min_stretch(f, ref, grid);
  const double delta = std::abs(scale) * dev.bound;
  const int n = u.dim_in();
  UnstableTerm out;
  out.max_upper = b.max_abs + delta;

  if (dev.boundary_values && n == 1 && f.dim_out() == 1) {
    const double lo = scale * dev.boundary_values->first(0) - ref(0);
    const double hi = scale * dev.boundary_values->second(0) - ref(0);
    out.min_lower = out.min_upper = std::min(std::abs(lo), std::abs(hi));
    if (out.min_lower > tol::kBoundary) out.degree = DegreeValue{(sign(hi) - sign(lo)) / 2, DegreeMethod::OneDCrossing};
    if (sign(lo) * sign(hi) < 0) {
      out.membership = Verdict::Pass;
    } else {
      const auto box = f.image_box(unit_box(1));
      out.membership = inside_box(box, ref, delta) ? Verdict::Inconclusive : Verdict::Fail;
    }
    return out;
  }

  out.min_lower = std::max(0.0, b.min_rel - delta);
  out.min_upper = b.min_sampled + delta;
  if (b.min_rel - delta > tol::kBoundary) out.degree = safe_degree(f, ref);

  const auto box = f.image_box(unit_box(n));
  if (delta == 0.0 && n == 1) {
    out.membership = inside_box(box, ref, 0.0) ? Verdict::Pass : Verdict::Fail;
  } else if (out.degree && out.degree->value != 0) {
    out.membership = Verdict::Pass;
  } else if (delta == 0.0 && f.is_affine() && f.dim_out() == n) {
    const auto& piece = f.cells().front().piece;
    const auto lu = piece.linear.fullPivLu();
    if (lu.isInvertible()) {
      const Vec pre = lu.solve(ref - piece.offset);
      out.membership = inf_norm(pre) <= 1.0 + tol::kBoundary ? Verdict::Pass : Verdict::Fail;
    } else {
      out.membership = inside_box(box, ref, 0.0) ? Verdict::Inconclusive : Verdict::Fail;
    }
  } else {
    out.membership = inside_box(box, ref, delta) ? Verdict::Inconclusive : Verdict::Fail;
  }
  return out;
}

CoveringOutcome check_covering(const HSet& source, const std::string& target_id, const CenterScale& target,
                               const ProductFormMap& f, int grid, const PersistenceContext& ctx,
                               const TermDeviation& dev_u, double dev_v) {
  const int u = source.chart.dim_u();
  const int s = source.chart.dim_s();
  if (f.dim_u() != u || f.u.dim_out() != u || target.p_u.size() != u)
    throw DimensionError("check_covering: unstable dimensions do not match");
  if (f.dim_s() != s || target.p_s.size() != s || (f.v && f.v->dim_out() != s))
    throw DimensionError("check_covering: stable dimensions do not match");

  const UnstableTerm term = unstable_term(f.u, 1.0, target.p_u, grid, dev_u);
  const double um = term.min_lower - 1.0;
  double sm = kInf;
  double max_v = 0.0;
  if (s > 0) {
    max_v = max_stretch(*f.v, target.p_s).max_abs + dev_v;
    sm = target.r - max_v;
  }

  CoveringOutcome out;
  std::ostringstream why;
  Verdict v = Verdict::Pass;
  double slack = std::min(um, sm);

  if (um <= ctx.strict_margin) {
    if (term.min_upper - 1.0 <= ctx.strict_margin) {
      why << "min stretch " << term.min_upper << " ≤ 1";
      v = Verdict::Fail;
      slack = term.min_upper - 1.0;
    } else {
      why << "min stretch only bracketed in [" << term.min_lower << ", " << term.min_upper << "]";
      v = Verdict::Inconclusive;
      slack = um;
    }
  } else if (!term.degree) {
    why << "degree at target center not computable";
    v = Verdict::Inconclusive;
  } else if (term.degree->value == 0) {
    why << "degree 0 at target center";
    v = Verdict::Fail;
    slack = 0.0;
  }
  if (v != Verdict::Fail && sm <= ctx.strict_margin) {
    why.str({});
    why << "max stretch " << max_v << " ≥ " << target.r;
    v = Verdict::Fail;
    slack = sm;
  }

  out.verdict = v;
  out.reason = why.str();
  out.slack = slack;
  if (v == Verdict::Pass) {
    CoveringCertificate cert;
    cert.source_id = source.id;
    cert.target_id = target_id;
    cert.degree = *term.degree;
    cert.unstable_margin = um;
    cert.stable_margin = sm;
    cert.target_radius = target.r;
    cert.admissible_eps = persistence_bound(cert, ctx.chart_lip, ctx.coupling_row_l1, ctx.coupling_lip);
    out.certificate = cert;
  }
  return out;
}

double persistence_bound(const CoveringCertificate& cert, double chart_lip, double coupling_row_l1,
                         double coupling_lip) {
  if (!(cert.unstable_margin > 0.0) || !(cert.stable_margin > 0.0))
    throw PreconditionError("persistence_bound: nonpositive margin");
  if (!(chart_lip > 0.0) || !(coupling_lip >= 0.0) || !(coupling_row_l1 >= 0.0))
    throw PreconditionError("persistence_bound: Lipschitz factors must be positive");
  if (coupling_row_l1 > coupling_lip * (1.0 + 1e-12) + 1e-15)
    throw PreconditionError("persistence_bound: row sum exceeds the coupling norm");
  const double stable = std::isinf(cert.stable_margin) ? kInf : cert.stable_margin * cert.target_radius;
  return std::min(cert.unstable_margin, stable) / (chart_lip * (1.0 + coupling_lip));
}

}  // namespace cmn
