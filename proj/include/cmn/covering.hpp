#pragma once

#include "cmn/degree.hpp"
#include "cmn/geometry.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace cmn {

enum class Verdict { Pass, Fail, Inconclusive };

std::string_view to_string(Verdict v);

// Combines verdicts: any Fail wins, then any Inconclusive.
Verdict worst(Verdict a, Verdict b);

// A chart-coordinate map of the form (x, y) -> (U(x), V(y)).
struct ProductFormMap {
  PiecewiseAffineMap u;
  std::optional<PiecewiseAffineMap> v;  // absent when s = 0

  int dim_u() const { return u.dim_in(); }
  int dim_s() const { return v ? v->dim_in() : 0; }
};

struct CoveringCertificate {
  std::string source_id;
  std::string target_id;
  DegreeValue degree;
  double unstable_margin = 0.0;  // min stretch relative to the target center, minus 1
  double stable_margin = kInf;   // target radius minus max stretch; +inf when s = 0
  double target_radius = 1.0;
  double admissible_eps = 0.0;
};

struct CoveringOutcome {
  Verdict verdict = Verdict::Fail;
  std::optional<CoveringCertificate> certificate;
  std::string reason;  // names the violated inequality, empty on pass
  double slack = 0.0;  // the binding inequality's slack
};

// How far a perturbed map may stray from the declared one, measured in the
// coordinates the inequalities are stated in.
struct TermDeviation {
  double bound = 0.0;
  // Exact perturbed values at x = -1 and x = +1; only meaningful for u = 1.
  std::optional<std::pair<Vec, Vec>> boundary_values;
};

// Everything the checkers need to know about x -> scale * U(x) - ref on the
// unit ball, with a C0 deviation of U folded in.
struct UnstableTerm {
  double min_lower = 0.0;    // certified lower bound on min over the sphere
  double min_upper = 0.0;    // upper bound on the same minimum
  double max_upper = 0.0;    // upper bound on max over the closed ball
  std::optional<DegreeValue> degree;  // deg(scale * U, B^u, ref) when decidable
  Verdict membership = Verdict::Inconclusive;  // ref in scale * U(B^u)
};

UnstableTerm unstable_term(const PiecewiseAffineMap& u, double scale, const Vec& ref, int grid = kDefaultGrid,
                           const TermDeviation& dev = {});

struct PersistenceContext {
  double chart_lip = 1.0;        // operator norm of the target chart's linear part
  double coupling_row_l1 = 1.0;  // absolute row sum of the binding coupling row
  double coupling_lip = 1.0;     // operator norm of the linear coupling model
  double strict_margin = tol::kStrictMargin;  // slack an inequality needs to count as strict
};

// Checks the three inequalities that witness source ==f==> target:
//   min stretch of U - p_u > 1, deg(U, B^u, p_u) != 0, max stretch of V - p_s < r.
CoveringOutcome check_covering(const HSet& source, const std::string& target_id, const CenterScale& target,
                               const ProductFormMap& f, int grid = kDefaultGrid, const PersistenceContext& ctx = {},
                               const TermDeviation& dev_u = {}, double dev_v = 0.0);

// eps* = min(unstable_margin, stable_margin * r) / (chart_lip * (1 + coupling_lip)).
double persistence_bound(const CoveringCertificate& cert, double chart_lip, double coupling_row_l1,
                         double coupling_lip);

}  // namespace cmn
