#pragma once

#include "cmn/covering.hpp"
#include "cmn/symbolic.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cmn {

// Directed graph on nodes 0..d-1; an edge (from, to) lets node `to` read node `from`.
struct Graph {
  int d = 0;
  std::vector<std::pair<int, int>> edges;

  bool has_edge(int from, int to) const;
  bool weakly_connected() const;
};

enum class CouplingKind { TypeI, TypeII };

std::string_view to_string(CouplingKind k);

// Key of a chart form: (source, target) for Type I, (source, -1) for Type II.
using ChartFormKey = std::pair<int, int>;

struct NodeSystem {
  PiecewiseAffineMap local_map;
  std::vector<HSet> hsets;
  TransitionMatrix transition;
  std::optional<UnifiedSet> unified;
  std::map<ChartFormKey, ProductFormMap> chart_forms;  // declared forms only
};

struct CouplingSpec {
  CouplingKind kind = CouplingKind::TypeII;
  Mat matrix;
  std::optional<PiecewiseAffineMap> ambient;  // defaults to matrix (x) I
  // Overrides keyed by the Kronecker entry (i_1..i_d, j_1..j_d).
  std::map<std::vector<int>, Mat> per_entry;
};

struct NetworkSpec {
  Graph graph;
  std::vector<NodeSystem> nodes;
  CouplingSpec coupling;
  int dim_u = 1;
  int dim_s = 0;

  int d() const { return graph.d; }
  int node_dim() const { return dim_u + dim_s; }
  int dim() const { return node_dim() * graph.d; }
  std::vector<TransitionMatrix> transitions() const;
  const Mat& coupling_matrix(const std::vector<int>& entry) const;
  PiecewiseAffineMap ambient() const;
};

// Chart under which node k's unstable inequalities are stated when the
// target is h-set j: the unified chart (Type II) or the h-set chart (Type I).
const AffineChart& target_chart(const NetworkSpec& spec, int node, int j);
// Center and radius of target j in target_chart coordinates.
CenterScale target_center(const NetworkSpec& spec, int node, int j);
// Chart of source h-set i.
const AffineChart& source_chart(const NetworkSpec& spec, int node, int i);

// The declared chart form, or the exact composition target o T_k o source^-1
// when s = 0. Throws when a form is missing and cannot be derived.
ProductFormMap chart_form(const NetworkSpec& spec, int node, int i, int j);

struct SpecValidation : ValidationReport {
  std::vector<std::string> undecided;  // conditions the bounding-box test could not settle
};

SpecValidation validate_spec(const NetworkSpec& spec);

class InvalidSpecError : public Error {
 public:
  explicit InvalidSpecError(SpecValidation v);
  const SpecValidation& validation() const { return validation_; }

 private:
  SpecValidation validation_;
};

TransitionMatrix kronecker(const std::vector<TransitionMatrix>& mats);

// Lexicographically smallest perfect matching, row k -> column tau[k].
std::optional<std::vector<int>> tau_search(const std::vector<std::vector<bool>>& feasible);

// Sup-norm deviations of a perturbed network, in ambient coordinates.
struct DeviationModel {
  std::vector<double> local;  // per node, sup |T~_k - T_k|
  double coupling = 0.0;      // sup |A~ - A|
  // Perturbed local maps; when present and u = 1 the unstable terms are
  // evaluated exactly at the sphere {-1, 1}.
  std::function<Vec(int node, const Vec& x)> local_map;
};

struct CheckOptions {
  int grid = kDefaultGrid;
  const DeviationModel* deviation = nullptr;
  bool validate = true;
  double strict_margin = tol::kStrictMargin;
};

enum class Theorem { One, Two };

struct EntryResult {
  std::vector<int> source;  // i_1..i_d
  std::vector<int> target;  // j_1..j_d
  Verdict verdict = Verdict::Fail;
  std::optional<std::vector<int>> tau;
  double slack = 0.0;  // bottleneck slack over rows, stable rows included
  int binding_row = 0;
  std::string reason;
  std::optional<CoveringCertificate> certificate;
};

struct LocalResult {
  int node = 0;
  int source = 0;
  int target = 0;
  CoveringOutcome outcome;
};

struct TheoremReport {
  Theorem theorem = Theorem::Two;
  Verdict verdict = Verdict::Fail;
  std::vector<EntryResult> entries;
  std::vector<LocalResult> local;
  std::vector<std::string> notes;
  double global_eps = 0.0;
  std::optional<std::size_t> binding_entry;
  double entropy_bound = 0.0;
  std::int64_t period = 0;
};

std::string entry_label(const EntryResult& e);

TheoremReport theorem1_check(const NetworkSpec& spec, const CheckOptions& opts = {});
TheoremReport theorem2_check(const NetworkSpec& spec, const CheckOptions& opts = {});

struct ConjugacyAudit {
  int samples = 0;
  double worst_residual = 0.0;
  Vec worst_point;
  int mismatches = 0;

  bool ok() const { return worst_residual <= tol::kConjugacy; }
};

ConjugacyAudit conjugacy_audit(const NetworkSpec& spec, int samples = 256, std::uint64_t seed = 0);

// Product of local maps, blockwise.
Vec apply_local(const NetworkSpec& spec, const Vec& x);

}  // namespace cmn
