#include "cmn/network.hpp"

#include "cmn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace cmn {

// ---------------------------------------------------------------- graph

bool Graph::has_edge(int from, int to) const {
  return std::find(edges.begin(), edges.end(), std::make_pair(from, to)) != edges.end();
}

bool Graph::weakly_connected() const {
  if (d <= 0) return false;
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : edges)
    if (a >= 0 && a < d && b >= 0 && b < d) parent[find(a)] = find(b);
  for (int k = 1; k < d; ++k)
    if (find(k) != find(0)) return false;
  return true;
}

std::string_view to_string(CouplingKind k) { return k == CouplingKind::TypeI ? "I" : "II"; }

// ---------------------------------------------------------------- spec

std::vector<TransitionMatrix> NetworkSpec::transitions() const {
  std::vector<TransitionMatrix> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.transition);
  return out;
}

const Mat& NetworkSpec::coupling_matrix(const std::vector<int>& entry) const {
  if (auto it = coupling.per_entry.find(entry); it != coupling.per_entry.end()) return it->second;
  return coupling.matrix;
}

PiecewiseAffineMap NetworkSpec::ambient() const {
  if (coupling.ambient) return *coupling.ambient;
  const Mat lin = kron(coupling.matrix, Mat::Identity(node_dim(), node_dim()));
  return PiecewiseAffineMap::affine(lin, Vec::Zero(lin.rows()));
}

const AffineChart& target_chart(const NetworkSpec& spec, int node, int j) {
  const auto& n = spec.nodes.at(node);
  if (spec.coupling.kind == CouplingKind::TypeII) {
    if (!n.unified) throw PreconditionError("node " + std::to_string(node + 1) + " has no unified set");
    return n.unified->chart;
  }
  return n.hsets.at(j).chart;
}

CenterScale target_center(const NetworkSpec& spec, int node, int j) {
  if (spec.coupling.kind == CouplingKind::TypeII) {
    const auto& n = spec.nodes.at(node);
    if (!n.unified) throw PreconditionError("node " + std::to_string(node + 1) + " has no unified set");
    return n.unified->members.at(j).center;
  }
  return CenterScale{Vec::Zero(spec.dim_u), Vec::Zero(spec.dim_s), 1.0};
}

const AffineChart& source_chart(const NetworkSpec& spec, int node, int i) { return spec.nodes.at(node).hsets.at(i).chart; }

ProductFormMap chart_form(const NetworkSpec& spec, int node, int i, int j) {
  const auto& n = spec.nodes.at(node);
  const ChartFormKey key{i, spec.coupling.kind == CouplingKind::TypeII ? -1 : j};
  if (auto it = n.chart_forms.find(key); it != n.chart_forms.end()) return it->second;
  if (spec.dim_s != 0) {
    std::ostringstream msg;
    msg << "node " << node + 1 << ": chart form for source " << i + 1;
    if (key.second >= 0) msg << " and target " << j + 1;
    msg << " must be declared when the stable dimension is positive";
    throw PreconditionError(msg.str());
  }
  const auto& src = source_chart(spec, node, i);
  const auto& tgt = target_chart(spec, node, j);
  const Mat& inv = src.inverse_linear();
  auto f = n.local_map.pre_compose(inv, -inv * src.offset()).post_compose(tgt.linear(), tgt.offset());
  return ProductFormMap{std::move(f), std::nullopt};
}

Vec apply_local(const NetworkSpec& spec, const Vec& x) {
  const int n = spec.node_dim();
  if (x.size() != spec.dim()) throw DimensionError("apply_local: state dimension");
  Vec y(x.size());
  for (int k = 0; k < spec.d(); ++k) y.segment(k * n, n) = spec.nodes[k].local_map(Vec(x.segment(k * n, n)));
  return y;
}

InvalidSpecError::InvalidSpecError(SpecValidation v)
    : Error("invalid network spec: " + (v.errors.empty() ? std::string("unknown") : v.errors.front())),
      validation_(std::move(v)) {}

// ---------------------------------------------------------------- helpers

namespace {

std::uint64_t splitmix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec cube_draw(std::mt19937_64& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = 2.0 * unit_draw(rng) - 1.0;
  return v;
}

std::string fmt(double v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

bool polytopes_meet(const Polytope& a, const Polytope& b, int dim) {
  Polytope both = a;
  both.insert(both.end(), b.begin(), b.end());
  return !enumerate_vertices(both, dim).empty();
}

std::pair<Vec, Vec> bounding_box(const std::vector<Vec>& pts) {
  Vec lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

bool boxes_separated(const std::pair<Vec, Vec>& a, const std::pair<Vec, Vec>& b) {
  for (Eigen::Index i = 0; i < a.first.size(); ++i)
    if (a.second(i) < b.first(i) || b.second(i) < a.first(i)) return true;
  return false;
}

// Nonzero Kronecker entries as (i_1..i_d, j_1..j_d), in row-major order of the product.
std::vector<std::vector<int>> kronecker_entries(const NetworkSpec& spec) {
  const int d = spec.d();
  std::vector<std::vector<std::pair<int, int>>> per(d);
  for (int k = 0; k < d; ++k) {
    const auto& w = spec.nodes[k].transition;
    for (int i = 0; i < w.size(); ++i)
      for (int j = 0; j < w.size(); ++j)
        if (w(i, j)) per[k].push_back({i, j});
  }
  std::vector<std::vector<int>> out;
  std::vector<int> idx(d, 0);
  while (true) {
    std::vector<int> e(2 * d);
    for (int k = 0; k < d; ++k) {
      e[k] = per[k][idx[k]].first;
      e[d + k] = per[k][idx[k]].second;
    }
    out.push_back(std::move(e));
    int k = d - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(per[k].size())) idx[k--] = 0;
    if (k < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool has_perfect_matching(const std::vector<std::vector<bool>>& ok, std::vector<int>* match_of_row = nullptr) {
  const int d = static_cast<int>(ok.size());
  std::vector<int> row_of(d, -1);
  for (int r = 0; r < d; ++r) {
    std::vector<bool> seen(d, false);
    auto augment = [&](auto&& self, int row) -> bool {
      for (int c = 0; c < d; ++c) {
        if (!ok[row][c] || seen[c]) continue;
        seen[c] = true;
        if (row_of[c] < 0 || self(self, row_of[c])) {
          row_of[c] = row;
          return true;
        }
      }
      return false;
    };
    if (!augment(augment, r)) return false;
  }
  if (match_of_row) {
    match_of_row->assign(d, -1);
    for (int c = 0; c < d; ++c) (*match_of_row)[row_of[c]] = c;
  }
  return true;
}

int permutation_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<bool> seen(p.size(), false);
  for (size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    size_t len = 0;
    for (size_t j = i; !seen[j]; j = p[j]) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

// Largest t such that some permutation keeps every chosen value >= t.
double bottleneck(const std::vector<std::vector<double>>& v, std::vector<int>* perm) {
  const int d = static_cast<int>(v.size());
  std::vector<double> cand;
  for (const auto& row : v) cand.insert(cand.end(), row.begin(), row.end());
  std::sort(cand.begin(), cand.end(), std::greater<>());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  for (double t : cand) {
    std::vector<std::vector<bool>> ok(d, std::vector<bool>(d));
    for (int k = 0; k < d; ++k)
      for (int m = 0; m < d; ++m) ok[k][m] = v[k][m] >= t;
    if (has_perfect_matching(ok, perm)) return t;
  }
  return -kInf;
}

std::string hset_id(const NetworkSpec& spec, int node, int i) {
  const auto& id = spec.nodes[node].hsets[i].id;
  if (!id.empty()) return id;
  return "M" + std::to_string(node + 1) + "," + std::to_string(i + 1);
}

std::string product_id(const NetworkSpec& spec, const std::vector<int>& idx) {
  std::string out;
  for (size_t k = 0; k < idx.size(); ++k) {
    if (k) out += " x ";
    out += hset_id(spec, static_cast<int>(k), idx[k]);
  }
  return out;
}

std::string multi_index(const std::vector<int>& idx) {
  std::string out = "(";
  for (size_t k = 0; k < idx.size(); ++k) out += (k ? "," : "") + std::to_string(idx[k] + 1);
  return out + ")";
}

}  // namespace

std::string entry_label(const EntryResult& e) { return multi_index(e.source) + "->" + multi_index(e.target); }

// ---------------------------------------------------------------- validation

namespace {

void audit_chart_form(const NetworkSpec& spec, int k, const ChartFormKey& key, const ProductFormMap& f,
                      SpecValidation& rep) {
  const auto& n = spec.nodes[k];
  const int u = spec.dim_u, s = spec.dim_s;
  std::ostringstream where;
  where << "node " << k + 1 << " chart form (" << key.first + 1;
  if (key.second >= 0) where << "," << key.second + 1;
  where << "): ";
  if (f.dim_u() != u || f.u.dim_out() != u || f.dim_s() != s || (f.v && f.v->dim_out() != s)) {
    rep.error(where.str() + "dimensions do not match (u, s)");
    return;
  }
  if (key.first < 0 || key.first >= static_cast<int>(n.hsets.size()) || key.second >= static_cast<int>(n.hsets.size())) {
    rep.error(where.str() + "index out of range");
    return;
  }
  const int j = key.second < 0 ? 0 : key.second;
  const auto& src = source_chart(spec, k, key.first);
  const auto& tgt = target_chart(spec, k, j);
  std::mt19937_64 rng(0x5eedULL + 977ULL * k + key.first);
  double worst = 0.0;
  for (int t = 0; t < 256; ++t) {
    Vec z = cube_draw(rng, u + s);
    if (t < (1 << std::min(u + s, 8)))
      for (int c = 0; c < u + s; ++c) z(c) = (t >> c) & 1 ? 1.0 : -1.0;
    const auto image = n.local_map.try_eval(src.inverse(z));
    if (!image) {
      rep.error(where.str() + "local map undefined on the source h-set");
      return;
    }
    const Vec exact = tgt.apply(*image);
    Vec declared(u + s);
    const auto fu = f.u.try_eval(Vec(z.head(u)));
    if (!fu) {
      rep.error(where.str() + "U is not defined on the closed unit ball");
      return;
    }
    declared.head(u) = *fu;
    if (s > 0) {
      const auto fv = f.v->try_eval(Vec(z.tail(s)));
      if (!fv) {
        rep.error(where.str() + "V is not defined on the closed unit ball");
        return;
      }
      declared.tail(s) = *fv;
    }
    worst = std::max(worst, inf_norm(declared - exact));
  }
  if (worst > tol::kConjugacy) rep.error(where.str() + "does not match the local map in chart coordinates (residual " + fmt(worst) + ")");
}

void check_matrix(const NetworkSpec& spec, const Mat& a, const std::string& label, SpecValidation& rep) {
  const int d = spec.d();
  if (a.rows() != d || a.cols() != d) {
    rep.error(label + " must be " + std::to_string(d) + "x" + std::to_string(d));
    return;
  }
  if (!(std::abs(a.determinant()) >= tol::kSingularDet)) rep.error(label + " is singular");
  bool other_ok = true;
  std::vector<std::string> violations;
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m) {
      if (l == m || a(l, m) == 0.0) continue;
      if (!spec.graph.has_edge(m, l)) {
        std::ostringstream msg;
        msg << label << ": a(" << l + 1 << "," << m + 1 << ") = " << a(l, m) << " but edge (" << m + 1 << ","
            << l + 1 << ") is absent";
        violations.push_back(msg.str());
        if (!spec.graph.has_edge(l, m)) other_ok = false;
      }
    }
  for (auto& v : violations) rep.error(std::move(v));
  if (!violations.empty() && other_ok)
    rep.warn(label + " satisfies the zero pattern only under the transposed reading a(l,m) = 0 when (l,m) is not an edge; "
                     "node l must read node m through edge (m,l)");
}

}  // namespace

SpecValidation validate_spec(const NetworkSpec& spec) {
  SpecValidation rep;
  const int d = spec.d();
  const int u = spec.dim_u, s = spec.dim_s, n = u + s;
  if (d < 1) {
    rep.error("graph has no nodes");
    return rep;
  }
  if (u < 1 || s < 0) rep.error("dimensions must satisfy u >= 1 and s >= 0");
  for (const auto& [a, b] : spec.graph.edges)
    if (a < 0 || a >= d || b < 0 || b >= d) rep.error("edge (" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ") names a missing node");
  if (!spec.graph.weakly_connected()) rep.error("graph is not (weakly) connected");
  if (static_cast<int>(spec.nodes.size()) != d) {
    rep.error("expected " + std::to_string(d) + " nodes, got " + std::to_string(spec.nodes.size()));
    return rep;
  }
  if (!rep.ok()) return rep;

  const bool type2 = spec.coupling.kind == CouplingKind::TypeII;
  for (int k = 0; k < d; ++k) {
    const auto& node = spec.nodes[k];
    const std::string where = "node " + std::to_string(k + 1) + ": ";
    if (node.local_map.dim_in() != n || node.local_map.dim_out() != n) {
      rep.error(where + "local map must act on R^" + std::to_string(n));
      continue;
    }
    rep.merge(node.local_map.validate(), where + "local map: ");
    if (node.hsets.empty()) {
      rep.error(where + "no h-sets");
      continue;
    }
    bool dims_ok = true;
    for (const auto& h : node.hsets)
      if (h.chart.dim_u() != u || h.chart.dim_s() != s) {
        rep.error(where + "h-set " + h.id + " has (u, s) different from the network");
        dims_ok = false;
      }
    if (node.transition.size() != static_cast<int>(node.hsets.size()))
      rep.error(where + "transition matrix dimension differs from the h-set count");
    if (!dims_ok) continue;
    for (size_t i = 0; i < node.hsets.size(); ++i)
      for (size_t j = i + 1; j < node.hsets.size(); ++j)
        if (polytopes_meet(node.hsets[i].polytope(), node.hsets[j].polytope(), n))
          rep.error(where + "h-sets " + std::to_string(i + 1) + " and " + std::to_string(j + 1) + " are not disjoint");

    if (type2) {
      if (!node.unified) {
        rep.error(where + "Type II requires a unified set");
        continue;
      }
      const auto& uni = *node.unified;
      if (uni.chart.dim_u() != u || uni.chart.dim_s() != s) {
        rep.error(where + "unified chart has the wrong (u, s)");
        continue;
      }
      rep.merge(unified_validate(uni), where + "unified set: ");
      if (uni.size() != static_cast<int>(node.hsets.size())) {
        rep.error(where + "unified set size differs from the h-set count");
        continue;
      }
      for (int i = 0; i < uni.size(); ++i) {
        try {
          const auto mc = uni.member_chart(i);
          const auto& hc = node.hsets[i].chart;
          if ((mc.linear() - hc.linear()).cwiseAbs().maxCoeff() > tol::kConjugacy ||
              inf_norm(mc.offset() - hc.offset()) > tol::kConjugacy)
            rep.error(where + "h-set " + std::to_string(i + 1) + " chart differs from the unified member chart");
        } catch (const Error& e) {
          rep.error(where + e.what());
        }
      }
      for (const auto& [key, f] : node.chart_forms)
        if (key.second != -1) rep.error(where + "Type II chart forms are indexed by source only");
    } else {
      for (const auto& [key, f] : node.chart_forms)
        if (key.second < 0) rep.error(where + "Type I chart forms are indexed by (source, target)");
    }
  }
  if (!rep.ok()) return rep;

  check_matrix(spec, spec.coupling.matrix, "coupling matrix", rep);
  for (const auto& [key, a] : spec.coupling.per_entry) {
    const std::string label = "coupling matrix for entry " + multi_index(key);
    if (type2) rep.error(label + ": per-entry matrices apply to Type I only");
    if (static_cast<int>(key.size()) != 2 * d) {
      rep.error(label + ": key must list 2d indices");
      continue;
    }
    bool nonzero = true;
    for (int k = 0; k < d; ++k) {
      const auto& w = spec.nodes[k].transition;
      if (key[k] < 0 || key[k] >= w.size() || key[d + k] < 0 || key[d + k] >= w.size() || !w(key[k], key[d + k]))
        nonzero = false;
    }
    if (!nonzero) rep.error(label + " is not a nonzero Kronecker entry");
    check_matrix(spec, a, label, rep);
  }
  if (spec.coupling.ambient) {
    const auto& amb = *spec.coupling.ambient;
    if (amb.dim_in() != spec.dim() || amb.dim_out() != spec.dim())
      rep.error("ambient coupling must act on R^" + std::to_string(spec.dim()));
    else
      rep.merge(amb.validate(), "ambient coupling: ");
  }
  if (!rep.ok()) return rep;

  for (int k = 0; k < d; ++k) {
    const auto& node = spec.nodes[k];
    const auto& w = node.transition;
    for (int i = 0; i < w.size(); ++i)
      for (int j = 0; j < w.size(); ++j) {
        if (!w(i, j)) continue;
        const ChartFormKey key{i, type2 ? -1 : j};
        try {
          const auto f = chart_form(spec, k, i, j);
          if (node.chart_forms.count(key)) audit_chart_form(spec, k, key, f, rep);
          if (!f.u.try_eval(Vec::Constant(u, 1.0)) || !f.u.try_eval(Vec::Constant(u, -1.0)))
            rep.error("node " + std::to_string(k + 1) + ": chart form U is not defined on the unit ball");
        } catch (const Error& e) {
          rep.error(e.what());
        }
        // Type II forms depend on the source only.
        if (type2) break;
      }
  }

  if (!type2) {
    // T_k(M_ki) must avoid M_kj' (j' != j) and T_k(M_ki') (i' != i) whenever w_kij = 1.
    for (int k = 0; k < d; ++k) {
      const auto& node = spec.nodes[k];
      const auto& w = node.transition;
      std::vector<std::pair<Vec, Vec>> images, sets;
      for (const auto& h : node.hsets) {
        images.push_back(node.local_map.image_box(h.polytope()));
        sets.push_back(bounding_box(h.vertices()));
      }
      for (int i = 0; i < w.size(); ++i)
        for (int j = 0; j < w.size(); ++j) {
          if (!w(i, j)) continue;
          const std::string where = "node " + std::to_string(k + 1) + ": image of h-set " + std::to_string(i + 1);
          for (int jp = 0; jp < w.size(); ++jp) {
            if (jp == j || boxes_separated(images[i], sets[jp])) continue;
            if (polytopes_meet(box(images[i].first, images[i].second), node.hsets[jp].polytope(), n))
              rep.undecided.push_back(where + " may meet h-set " + std::to_string(jp + 1));
          }
          for (int ip = 0; ip < w.size(); ++ip)
            if (ip != i && !boxes_separated(images[i], images[ip]))
              rep.undecided.push_back(where + " may meet the image of h-set " + std::to_string(ip + 1));
        }
    }
  }

  if (spec.coupling.ambient) {
    const auto audit = conjugacy_audit(spec, 256, 0);
    if (!audit.ok())
      rep.error("ambient coupling is not conjugate to the linear model on the image set (worst residual " +
                fmt(audit.worst_residual) + ")");
  }
  return rep;
}

// ---------------------------------------------------------------- algebra

TransitionMatrix kronecker(const std::vector<TransitionMatrix>& mats) {
  if (mats.empty()) throw PreconditionError("kronecker: no matrices");
  std::vector<std::vector<int>> acc = mats.front().rows();
  for (size_t t = 1; t < mats.size(); ++t) {
    const auto& b = mats[t];
    const int na = static_cast<int>(acc.size()), nb = b.size();
    std::vector<std::vector<int>> next(na * nb, std::vector<int>(na * nb, 0));
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        if (acc[i][j])
          for (int p = 0; p < nb; ++p)
            for (int q = 0; q < nb; ++q) next[i * nb + p][j * nb + q] = b(p, q);
    acc.swap(next);
  }
  return TransitionMatrix(acc);
}

std::optional<std::vector<int>> tau_search(const std::vector<std::vector<bool>>& feasible) {
  const int d = static_cast<int>(feasible.size());
  for (const auto& row : feasible)
    if (static_cast<int>(row.size()) != d) throw DimensionError("tau_search: feasibility matrix must be square");
  if (!has_perfect_matching(feasible)) return std::nullopt;
  std::vector<std::vector<bool>> work = feasible;
  std::vector<int> tau(d, -1);
  for (int k = 0; k < d; ++k) {
    for (int m = 0; m < d; ++m) {
      if (!work[k][m]) continue;
      auto trial = work;
      for (int c = 0; c < d; ++c) trial[k][c] = c == m;
      for (int r = k + 1; r < d; ++r) trial[r][m] = false;
      if (has_perfect_matching(trial)) {
        tau[k] = m;
        work = std::move(trial);
        break;
      }
    }
  }
  return tau;
}

// ---------------------------------------------------------------- theorem checks

namespace {

struct RowAnalysis {
  std::vector<std::vector<double>> lower;  // certified row slack for tau(k) = m
  std::vector<std::vector<double>> upper;  // optimistic row slack
  std::vector<std::vector<bool>> certified;
  std::vector<std::vector<bool>> possible;
  std::vector<std::vector<std::optional<DegreeValue>>> degree;
  std::vector<double> stable_slack;
  std::vector<double> stable_sum;
  std::vector<double> radius;
};

RowAnalysis analyse_entry(const NetworkSpec& spec, const std::vector<int>& entry, const CheckOptions& opts,
                          const std::vector<ProductFormMap>& forms) {
  const int d = spec.d(), u = spec.dim_u, s = spec.dim_s;
  const bool type2 = spec.coupling.kind == CouplingKind::TypeII;
  const Mat& a = spec.coupling_matrix(entry);
  const DeviationModel* dev = opts.deviation;

  std::vector<double> delta(d, 0.0), row_add(d, 0.0);
  std::vector<std::optional<std::pair<Vec, Vec>>> boundary(d);
  for (int l = 0; l < d; ++l) {
    const auto& tgt = target_chart(spec, l, entry[d + l]);
    if (!dev) continue;
    const double lip = op_inf_norm(tgt.linear());
    delta[l] = lip * dev->local.at(l);
    row_add[l] = lip * dev->coupling;
    if (dev->local_map && u == 1 && s == 0) {
      const auto& src = source_chart(spec, l, entry[l]);
      const Vec lo = tgt.apply(dev->local_map(l, src.inverse(Vec::Constant(1, -1.0))));
      const Vec hi = tgt.apply(dev->local_map(l, src.inverse(Vec::Constant(1, 1.0))));
      boundary[l] = std::make_pair(lo, hi);
    }
  }

  RowAnalysis r;
  r.lower.assign(d, std::vector<double>(d));
  r.upper = r.lower;
  r.certified.assign(d, std::vector<bool>(d));
  r.possible = r.certified;
  r.degree.assign(d, std::vector<std::optional<DegreeValue>>(d));
  r.stable_slack.assign(d, kInf);
  r.stable_sum.assign(d, 0.0);
  r.radius.assign(d, 1.0);

  for (int k = 0; k < d; ++k) {
    const CenterScale c = target_center(spec, k, entry[d + k]);
    r.radius[k] = c.r;
    const Vec ref = type2 ? c.p_u : Vec::Zero(u);
    std::vector<double> fmax(d), fnom(d);
    for (int l = 0; l < d; ++l) {
      const double nominal = max_stretch(forms[l].u.scaled(a(k, l)), Vec::Zero(u)).max_abs;
      fnom[l] = nominal;
      fmax[l] = nominal + std::abs(a(k, l)) * delta[l];
    }
    const double total = std::accumulate(fmax.begin(), fmax.end(), 0.0);
    const double total_nom = std::accumulate(fnom.begin(), fnom.end(), 0.0);
    for (int m = 0; m < d; ++m) {
      TermDeviation td{delta[m], boundary[m]};
      const UnstableTerm own = unstable_term(forms[m].u, a(k, m), ref, opts.grid, td);
      r.lower[k][m] = own.min_lower - (total - fmax[m]) - row_add[k] - 1.0;
      r.upper[k][m] = own.min_upper - (total_nom - fnom[m]) - 1.0;
      r.degree[k][m] = own.degree;
      bool cert_ok = true, poss_ok = true;
      if (type2) {
        cert_ok = own.membership == Verdict::Pass && own.degree && own.degree->value != 0;
        poss_ok = own.membership != Verdict::Fail && !(own.degree && own.degree->value == 0);
      }
      r.certified[k][m] = cert_ok && r.lower[k][m] > opts.strict_margin;
      r.possible[k][m] = poss_ok && r.upper[k][m] > opts.strict_margin;
      if (!cert_ok) r.lower[k][m] = -kInf;
      if (!poss_ok) r.upper[k][m] = -kInf;
    }
    if (s > 0) {
      std::vector<double> g(d), h(d);
      for (int l = 0; l < d; ++l) {
        const auto v = forms[l].v->scaled(a(k, l));
        g[l] = max_stretch(v, Vec::Zero(s)).max_abs + std::abs(a(k, l)) * delta[l];
        h[l] = max_stretch(v, type2 ? c.p_s : Vec::Zero(s)).max_abs + std::abs(a(k, l)) * delta[l];
      }
      const double gsum = std::accumulate(g.begin(), g.end(), 0.0);
      double best = kInf;
      for (int l0 = 0; l0 < d; ++l0) best = std::min(best, h[l0] + gsum - g[l0]);
      r.stable_sum[k] = best + row_add[k];
      r.stable_slack[k] = c.r - r.stable_sum[k];
    }
  }
  return r;
}

std::vector<std::vector<int>> local_pairs(const TransitionMatrix& w) {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < w.size(); ++i)
    for (int j = 0; j < w.size(); ++j)
      if (w(i, j)) out.push_back({i, j});
  return out;
}

TheoremReport run_check(const NetworkSpec& spec, const CheckOptions& opts, Theorem which) {
  const bool type2 = which == Theorem::Two;
  if (type2 && spec.coupling.kind != CouplingKind::TypeII)
    throw PreconditionError("theorem 2 requires a Type II network with unified sets");
  if (!type2 && spec.coupling.kind != CouplingKind::TypeI) throw PreconditionError("theorem 1 requires a Type I network");

  TheoremReport rep;
  rep.theorem = which;
  if (opts.validate) {
    auto v = validate_spec(spec);
    if (!v.ok()) throw InvalidSpecError(std::move(v));
    rep.notes = v.warnings;
    for (const auto& msg : v.undecided) rep.notes.push_back("undecided: " + msg);
    if (!v.undecided.empty()) rep.verdict = Verdict::Inconclusive;
  }
  if (!type2)
    for (int k = 0; k < spec.d(); ++k)
      if (!spec.nodes[k].transition.is_permutation())
        throw PreconditionError("theorem 1 requires permutation transition matrices; W" + std::to_string(k + 1) +
                                " is not one");

  const int d = spec.d(), u = spec.dim_u;
  Verdict verdict = opts.validate && rep.verdict == Verdict::Inconclusive ? Verdict::Inconclusive : Verdict::Pass;

  if (!opts.deviation) {
    PersistenceContext local_ctx;
    local_ctx.strict_margin = opts.strict_margin;
    for (int k = 0; k < d; ++k)
      for (const auto& ij : local_pairs(spec.nodes[k].transition)) {
        const int i = ij[0], j = ij[1];
        const auto& src = spec.nodes[k].hsets[i];
        LocalResult lr{k, i, j, check_covering(src, hset_id(spec, k, j), target_center(spec, k, j), chart_form(spec, k, i, j), opts.grid, local_ctx)};
        verdict = worst(verdict, lr.outcome.verdict);
        rep.local.push_back(std::move(lr));
      }
  }

  const auto entries = kronecker_entries(spec);
  rep.entries.resize(entries.size());
  parallel_for(entries.size(), [&](std::size_t idx) {
    const auto& entry = entries[idx];
    EntryResult er;
    er.source.assign(entry.begin(), entry.begin() + d);
    er.target.assign(entry.begin() + d, entry.end());
    std::vector<ProductFormMap> forms;
    forms.reserve(d);
    for (int l = 0; l < d; ++l) forms.push_back(chart_form(spec, l, er.source[l], er.target[l]));
    const RowAnalysis ra = analyse_entry(spec, entry, opts, forms);
    const double stable = *std::min_element(ra.stable_slack.begin(), ra.stable_slack.end());
    const int stable_row = static_cast<int>(std::min_element(ra.stable_slack.begin(), ra.stable_slack.end()) - ra.stable_slack.begin());
    const Mat& a = spec.coupling_matrix(entry);

    std::optional<DegreeValue> own_degree;  // Type I degree does not depend on tau
    if (!type2) {
      int v = (u % 2 == 1 && a.determinant() < 0) ? -1 : 1;
      bool known = true;
      for (int l = 0; l < d; ++l) {
        const auto t = unstable_term(forms[l].u, 1.0, Vec::Zero(u), opts.grid);
        if (!t.degree) known = false;
        else v *= t.degree->value;
      }
      if (known) own_degree = DegreeValue{v, DegreeMethod::Composition};
    }

    std::ostringstream why;
    er.tau = tau_search(ra.certified);
    if (er.tau && stable > opts.strict_margin && (type2 || own_degree)) {
      const auto& tau = *er.tau;
      double um = kInf;
      int row = 0;
      int deg = 1;
      for (int k = 0; k < d; ++k) {
        if (ra.lower[k][tau[k]] < um) {
          um = ra.lower[k][tau[k]];
          row = k;
        }
        if (type2) deg *= ra.degree[k][tau[k]]->value;
      }
      if (type2) {
        if (u % 2 == 1) deg *= permutation_sign(tau);
      } else {
        deg = own_degree->value;
      }
      if (deg == 0) {
        er.verdict = Verdict::Fail;
        er.reason = "degree of the product map is 0";
      } else {
        er.verdict = Verdict::Pass;
        er.slack = std::min(um, stable);
        er.binding_row = um <= stable ? row : stable_row;
        CoveringCertificate cert;
        cert.source_id = product_id(spec, er.source);
        cert.target_id = product_id(spec, er.target);
        cert.degree = DegreeValue{deg, DegreeMethod::Composition};
        cert.unstable_margin = um;
        cert.stable_margin = stable;
        cert.target_radius = *std::min_element(ra.radius.begin(), ra.radius.end());
        double chart_lip = 0.0;
        for (int k = 0; k < d; ++k) chart_lip = std::max(chart_lip, op_inf_norm(target_chart(spec, k, er.target[k]).linear()));
        const double coupling_lip = op_inf_norm(a);
        const double row_l1 = a.row(er.binding_row).cwiseAbs().sum();
        cert.admissible_eps = persistence_bound(cert, chart_lip, row_l1, coupling_lip);
        er.certificate = cert;
      }
    } else if (stable <= opts.strict_margin) {
      er.verdict = Verdict::Fail;
      er.slack = stable;
      er.binding_row = stable_row;
      why << "row " << stable_row + 1 << ": stable sum " << ra.stable_sum[stable_row] << " ≥ radius " << ra.radius[stable_row];
      er.reason = why.str();
    } else {
      std::vector<int> perm;
      const double best_cert = bottleneck(ra.lower, &perm);
      std::vector<int> perm_opt;
      const double best_opt = bottleneck(ra.upper, &perm_opt);
      const bool maybe = tau_search(ra.possible).has_value();
      er.verdict = maybe ? Verdict::Inconclusive : Verdict::Fail;
      const auto& p = maybe ? perm : perm_opt;
      const auto& vals = maybe ? ra.lower : ra.upper;
      er.slack = maybe ? best_cert : best_opt;
      if (!p.empty()) {
        int row = 0;
        for (int k = 0; k < d; ++k)
          if (vals[k][p[k]] < vals[row][p[row]]) row = k;
        er.binding_row = row;
        if (std::isinf(er.slack)) {
          why << "no permutation meets the membership and degree conditions";
        } else {
          why << "row " << row + 1 << " with tau(" << row + 1 << ") = " << p[row] + 1 << ": min stretch minus foreign max stretch is "
              << vals[row][p[row]] + 1.0 << " ≤ 1 (slack " << vals[row][p[row]] << ")";
        }
      } else {
        why << "no permutation meets the membership and degree conditions";
      }
      if (!type2 && !own_degree && maybe) why.str("degree of the local chart forms not computable");
      er.reason = why.str();
    }
    rep.entries[idx] = std::move(er);
  });

  double eps = kInf;
  std::optional<std::size_t> binding;
  Verdict entries_verdict = Verdict::Pass;
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const auto& e = rep.entries[i];
    entries_verdict = worst(entries_verdict, e.verdict);
  }
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    const auto& e = rep.entries[i];
    if (entries_verdict == Verdict::Pass) {
      if (e.certificate->admissible_eps < eps) {
        eps = e.certificate->admissible_eps;
        binding = i;
      }
    } else if (e.verdict == entries_verdict) {
      if (!binding || e.slack < rep.entries[*binding].slack) binding = i;
    }
  }
  verdict = worst(verdict, entries_verdict);
  rep.verdict = verdict;
  rep.binding_entry = binding;
  rep.global_eps = entries_verdict == Verdict::Pass && !rep.entries.empty() ? eps : 0.0;
  if (verdict == Verdict::Pass) {
    if (type2) {
      rep.entropy_bound = entropy_lower_bound(spec.transitions());
    } else {
      std::vector<int> dims;
      for (const auto& n : spec.nodes) dims.push_back(n.transition.size());
      rep.period = lcm_period(dims);
    }
  }
  return rep;
}

}  // namespace

TheoremReport theorem1_check(const NetworkSpec& spec, const CheckOptions& opts) { return run_check(spec, opts, Theorem::One); }

TheoremReport theorem2_check(const NetworkSpec& spec, const CheckOptions& opts) { return run_check(spec, opts, Theorem::Two); }

// ---------------------------------------------------------------- conjugacy

ConjugacyAudit conjugacy_audit(const NetworkSpec& spec, int samples, std::uint64_t seed) {
  ConjugacyAudit out;
  const int d = spec.d(), n = spec.node_dim();
  const auto amb = spec.ambient();
  const auto entries = kronecker_entries(spec);
  std::uint64_t state = seed;
  std::mt19937_64 rng(splitmix(state));
  for (int t = 0; t < samples; ++t) {
    const auto& entry = entries[static_cast<std::size_t>(rng() % entries.size())];
    const Mat& a = spec.coupling_matrix(entry);
    Vec x(spec.dim());
    std::vector<const AffineChart*> charts(d);
    for (int k = 0; k < d; ++k) {
      x.segment(k * n, n) = source_chart(spec, k, entry[k]).inverse(cube_draw(rng, n));
      charts[k] = &target_chart(spec, k, entry[d + k]);
    }
    const Vec tx = apply_local(spec, x);
    Vec z(spec.dim());
    for (int k = 0; k < d; ++k) z.segment(k * n, n) = charts[k]->apply(Vec(tx.segment(k * n, n)));
    const auto ax = amb.try_eval(tx);
    ++out.samples;
    if (!ax) {
      out.worst_residual = kInf;
      out.worst_point = z;
      ++out.mismatches;
      continue;
    }
    Vec lhs(spec.dim());
    for (int k = 0; k < d; ++k) lhs.segment(k * n, n) = charts[k]->apply(Vec(ax->segment(k * n, n)));
    const Vec rhs = kron(a, Mat::Identity(n, n)) * z;
    const double res = inf_norm(lhs - rhs);
    if (res > tol::kConjugacy) ++out.mismatches;
    if (res > out.worst_residual || out.worst_point.size() == 0) {
      out.worst_residual = std::max(out.worst_residual, res);
      out.worst_point = z;
    }
  }
  return out;
}

}  // namespace cmn
