#include "cmn/dynamics.hpp"

#include "cmn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace cmn {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Coordinate c of a sinusoidal field on R^n, identified by (seed, stream).
Vec wave(std::uint64_t seed, std::uint64_t stream, const Vec& x, Eigen::Index out_dim) {
  Vec y(out_dim);
  for (Eigen::Index c = 0; c < out_dim; ++c) {
    std::uint64_t h = mix(seed ^ mix(stream * 1315423911ULL + static_cast<std::uint64_t>(c)));
    double arg = 2.0 * M_PI * unit(h);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      h = mix(h);
      arg += (0.5 + 1.5 * unit(h)) * x(i);
    }
    y(c) = std::sin(arg);
  }
  return y;
}

constexpr std::uint64_t kBetaStream = 0xb37aULL;

}  // namespace

Vec Perturbation::alpha(int node, const Vec& x) const { return wave(seed, static_cast<std::uint64_t>(node) + 1, x, x.size()); }

Vec Perturbation::beta(const Vec& z) const { return wave(seed, kBetaStream, z, z.size()); }

Vec perturbed_local(const NetworkSpec& spec, int node, const Vec& x, const Perturbation* pert) {
  Vec y = spec.nodes.at(node).local_map(x);
  if (pert && pert->amplitude != 0.0) y += pert->amplitude * pert->alpha(node, x);
  return y;
}

Vec step(const NetworkSpec& spec, const Vec& x, const Perturbation* pert) {
  if (x.size() != spec.dim()) throw DimensionError("step: state has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(spec.dim()));
  const int n = spec.node_dim();
  Vec t(x.size());
  for (int k = 0; k < spec.d(); ++k) t.segment(k * n, n) = perturbed_local(spec, k, Vec(x.segment(k * n, n)), pert);
  const auto amb = spec.coupling.ambient ? *spec.coupling.ambient : spec.ambient();
  Vec y = amb(t);
  if (pert && pert->amplitude != 0.0) y += pert->amplitude * pert->beta(t);
  return y;
}

std::optional<std::vector<int>> locate_hsets(const NetworkSpec& spec, const Vec& x, int* ties) {
  const int n = spec.node_dim();
  std::vector<int> idx(spec.d(), -1);
  for (int k = 0; k < spec.d(); ++k) {
    const Vec block = x.segment(k * n, n);
    const auto& hs = spec.nodes[k].hsets;
    for (int i = 0; i < static_cast<int>(hs.size()); ++i) {
      const double m = hs[i].interior_margin(block);
      if (m < -tol::kBoundary) continue;
      if (std::abs(m) <= tol::kBoundary && ties) ++*ties;
      idx[k] = i;
      break;
    }
    if (idx[k] < 0) return std::nullopt;
  }
  return idx;
}

int flat_symbol(const NetworkSpec& spec, const std::vector<int>& multi) {
  int flat = 0;
  for (int k = 0; k < spec.d(); ++k) flat = flat * spec.nodes[k].transition.size() + multi[k];
  return flat;
}

std::vector<int> Itinerary::flat(const NetworkSpec& spec) const {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(flat_symbol(spec, s));
  return out;
}

Itinerary itinerary(const NetworkSpec& spec, const Vec& x0, int n, const Perturbation* pert) {
  Itinerary it;
  Vec x = x0;
  for (int t = 0; t < n; ++t) {
    auto idx = locate_hsets(spec, x, &it.ties);
    if (!idx) {
      it.escape_step = t;
      break;
    }
    it.steps.push_back(std::move(*idx));
    if (t + 1 < n) x = step(spec, x, pert);
  }
  return it;
}

// ---------------------------------------------------------------- affine branches

namespace {

const AffinePiece* piece_on(const PiecewiseAffineMap& f, const std::vector<Vec>& pts) {
  for (const auto& cell : f.cells()) {
    bool all = true;
    for (const auto& p : pts)
      if (!contains(cell.region, p, tol::kBoundary)) {
        all = false;
        break;
      }
    if (all) return &cell.piece;
  }
  return nullptr;
}

struct Branch {
  Mat linear;
  Vec offset;
};

// The affine map z -> A(T(z)) on the product h-set with the given indices.
Branch branch_at(const NetworkSpec& spec, const std::vector<int>& idx, int step_no) {
  const int d = spec.d(), n = spec.node_dim(), dim = spec.dim();
  Mat lt = Mat::Zero(dim, dim);
  Vec ct(dim);
  std::vector<std::vector<Vec>> images(d);
  for (int k = 0; k < d; ++k) {
    const auto& h = spec.nodes[k].hsets.at(idx[k]);
    const auto verts = h.vertices();
    const AffinePiece* p = piece_on(spec.nodes[k].local_map, verts);
    if (!p) {
      std::ostringstream msg;
      msg << "step " << step_no + 1 << ": h-set " << idx[k] + 1 << " of node " << k + 1
          << " meets several affine pieces of the local map; subdivide it";
      throw Error(msg.str());
    }
    lt.block(k * n, k * n, n, n) = p->linear;
    ct.segment(k * n, n) = p->offset;
    for (const auto& v : verts) images[k].push_back(p->apply(v));
  }
  const auto amb = spec.ambient();
  const AffinePiece* pa = nullptr;
  if (amb.is_affine()) {
    pa = &amb.cells().front().piece;
    return {pa->linear * lt, pa->linear * ct + pa->offset};
  }
  std::vector<Vec> corners{Vec(0)};
  for (int k = 0; k < d; ++k) {
    std::vector<Vec> next;
    for (const auto& c : corners)
      for (const auto& v : images[k]) next.push_back(concat(c, v));
    corners.swap(next);
  }
  pa = piece_on(amb, corners);
  if (!pa) {
    std::ostringstream msg;
    msg << "step " << step_no + 1 << ": image of the product h-set meets several pieces of the coupling; subdivide it";
    throw Error(msg.str());
  }
  return {pa->linear * lt, pa->linear * ct + pa->offset};
}

double product_margin(const NetworkSpec& spec, const std::vector<int>& idx, const Vec& z) {
  const int n = spec.node_dim();
  double m = kInf;
  for (int k = 0; k < spec.d(); ++k) m = std::min(m, spec.nodes[k].hsets[idx[k]].interior_margin(Vec(z.segment(k * n, n))));
  return m;
}

void check_loop(const NetworkSpec& spec, const std::vector<std::vector<int>>& loop) {
  if (loop.empty()) throw PreconditionError("periodic_point: empty loop");
  const int d = spec.d();
  for (size_t t = 0; t < loop.size(); ++t) {
    if (static_cast<int>(loop[t].size()) != d) throw PreconditionError("periodic_point: loop entries need one index per node");
    for (int k = 0; k < d; ++k)
      if (loop[t][k] < 0 || loop[t][k] >= spec.nodes[k].transition.size())
        throw PreconditionError("periodic_point: index out of range at step " + std::to_string(t + 1));
  }
  for (size_t t = 0; t < loop.size(); ++t) {
    const auto& a = loop[t];
    const auto& b = loop[(t + 1) % loop.size()];
    for (int k = 0; k < d; ++k)
      if (!spec.nodes[k].transition(a[k], b[k])) {
        std::ostringstream msg;
        msg << "loop is not admissible: node " << k + 1 << " has no transition " << a[k] + 1 << " -> " << b[k] + 1
            << " at step " << t + 1;
        throw PreconditionError(msg.str());
      }
  }
}

Vec iterate(const NetworkSpec& spec, Vec z, int p, const Perturbation* pert) {
  for (int t = 0; t < p; ++t) z = step(spec, z, pert);
  return z;
}

}  // namespace

std::vector<std::vector<int>> canonical_loop(const NetworkSpec& spec) {
  for (int k = 0; k < spec.d(); ++k)
    if (!spec.nodes[k].transition.is_permutation())
      throw PreconditionError("canonical loop needs permutation transition matrices; W" + std::to_string(k + 1) + " is not one");
  std::vector<int> cur(spec.d(), 0);
  std::vector<std::vector<int>> loop;
  do {
    loop.push_back(cur);
    for (int k = 0; k < spec.d(); ++k) {
      const auto& w = spec.nodes[k].transition;
      for (int j = 0; j < w.size(); ++j)
        if (w(cur[k], j)) {
          cur[k] = j;
          break;
        }
    }
  } while (cur != loop.front());
  return loop;
}

PeriodicOrbitCertificate periodic_point(const NetworkSpec& spec, const std::vector<std::vector<int>>& loop,
                                        const Perturbation* pert) {
  check_loop(spec, loop);
  const int p = static_cast<int>(loop.size());
  const int dim = spec.dim();
  std::vector<Branch> branches;
  branches.reserve(p);
  for (int t = 0; t < p; ++t) branches.push_back(branch_at(spec, loop[t], t));

  Mat l = Mat::Identity(dim, dim);
  Vec c = Vec::Zero(dim);
  for (const auto& b : branches) {
    l = b.linear * l;
    c = b.linear * c + b.offset;
  }
  const Mat system = Mat::Identity(dim, dim) - l;
  if (!(std::abs(system.determinant()) >= tol::kSingularDet))
    throw Error("neutral composition: I - L is singular along the loop");
  Vec z = system.fullPivLu().solve(c);

  if (pert && pert->amplitude != 0.0) {
    const auto solver = (l - Mat::Identity(dim, dim)).fullPivLu();
    for (int it = 0; it < 10000; ++it) {
      const Vec g = iterate(spec, z, p, pert) - z;
      if (inf_norm(g) < 1e-12) break;
      z -= 0.5 * solver.solve(g);
    }
  }

  PeriodicOrbitCertificate cert;
  cert.point = z;
  cert.period = p;
  cert.loop = loop;
  Vec cur = z;
  for (int t = 0; t < p; ++t) {
    const double m = product_margin(spec, loop[t], cur);
    if (!(m > 0.0)) {
      std::ostringstream msg;
      msg << "step " << t + 1 << ": orbit point leaves its product h-set (margin " << m << ")";
      throw Error(msg.str());
    }
    cert.interior_margins.push_back(m);
    cert.orbit.push_back(cur);
    cur = step(spec, cur, pert);
  }
  cert.residual = inf_norm(cur - z);
  if (!(cert.residual < tol::kResidual)) {
    std::ostringstream msg;
    msg << "periodic point residual " << cert.residual << " exceeds " << tol::kResidual;
    throw Error(msg.str());
  }
  return cert;
}

// ---------------------------------------------------------------- entropy

namespace {

// Additive recurrence with the generalized golden ratio in `dim` dimensions.
std::vector<double> rd_alpha(int dim) {
  double phi = 2.0;
  for (int i = 0; i < 64; ++i) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
  std::vector<double> a(dim);
  for (int i = 0; i < dim; ++i) a[i] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
  return a;
}

}  // namespace

EntropyEstimate empirical_entropy_detail(const NetworkSpec& spec, int depth, std::size_t samples, std::uint64_t seed,
                                         const Perturbation* pert) {
  if (depth < 2) throw PreconditionError("empirical_entropy: depth must be at least 2");
  if (samples == 0) throw PreconditionError("empirical_entropy: no samples");
  const int d = spec.d(), n = spec.node_dim(), dim = spec.dim();
  const TransitionMatrix w = kronecker(spec.transitions());
  const int symbols = w.size();

  std::vector<std::vector<int>> multi(symbols);
  for (int s = 0; s < symbols; ++s) {
    int rest = s;
    multi[s].assign(d, 0);
    for (int k = d - 1; k >= 0; --k) {
      const int dk = spec.nodes[k].transition.size();
      multi[s][k] = rest % dk;
      rest /= dk;
    }
  }

  // Inverse affine branches where the h-set sits inside one piece.
  std::vector<std::optional<Branch>> inverse(symbols);
  for (int s = 0; s < symbols; ++s) {
    try {
      const Branch b = branch_at(spec, multi[s], 0);
      const auto lu = b.linear.fullPivLu();
      if (lu.isInvertible()) inverse[s] = Branch{lu.inverse(), -lu.inverse() * b.offset};
    } catch (const Error&) {
    }
  }

  // ways[t][s]: admissible continuations of length depth - t starting at s.
  std::vector<std::vector<double>> ways(depth, std::vector<double>(symbols, 1.0));
  for (int t = depth - 2; t >= 0; --t)
    for (int s = 0; s < symbols; ++s) {
      double sum = 0.0;
      for (int q = 0; q < symbols; ++q)
        if (w(s, q)) sum += ways[t + 1][q];
      ways[t][s] = sum;
    }

  const auto alpha = rd_alpha(dim);
  std::vector<double> offset(dim);
  {
    std::uint64_t h = mix(seed);
    for (int i = 0; i < dim; ++i) offset[i] = unit(h = mix(h));
  }

  std::vector<std::vector<int>> words(samples);
  std::vector<int> ties(samples, 0);
  parallel_for(samples, [&](std::size_t j) {
    std::mt19937_64 rng(mix(seed ^ mix(j + 1)));
    auto pick = [&](const std::vector<double>& weight, int from) {
      double total = 0.0;
      for (int q = 0; q < symbols; ++q)
        if (from < 0 || w(from, q)) total += weight[q];
      double r = unit(rng()) * total;
      int last = -1;
      for (int q = 0; q < symbols; ++q) {
        if (from >= 0 && !w(from, q)) continue;
        last = q;
        if ((r -= weight[q]) < 0.0) return q;
      }
      return last;
    };
    std::vector<int> word(depth);
    word[0] = pick(ways[0], -1);
    for (int t = 1; t < depth; ++t) word[t] = pick(ways[t], word[t - 1]);

    Vec q(dim);
    for (int i = 0; i < dim; ++i) q(i) = 2.0 * std::fmod(offset[i] + static_cast<double>(j + 1) * alpha[i], 1.0) - 1.0;
    auto place = [&](int s) {
      Vec x(dim);
      for (int k = 0; k < d; ++k) x.segment(k * n, n) = spec.nodes[k].hsets[multi[s][k]].chart.inverse(Vec(q.segment(k * n, n)));
      return x;
    };
    Vec z = place(word[depth - 1]);
    bool pulled = true;
    for (int t = depth - 2; t >= 0 && pulled; --t) {
      if (!inverse[word[t]]) {
        pulled = false;
        break;
      }
      z = inverse[word[t]]->linear * z + inverse[word[t]]->offset;
      if (product_margin(spec, multi[word[t]], z) < -tol::kBoundary) pulled = false;
    }
    if (!pulled) z = place(word[0]);

    const Itinerary it = itinerary(spec, z, depth, pert);
    ties[j] = it.ties;
    if (!it.escape_step) words[j] = it.flat(spec);
  });

  EntropyEstimate est;
  est.samples = samples;
  std::vector<std::vector<int>> kept;
  for (std::size_t j = 0; j < samples; ++j) {
    est.ties += ties[j];
    if (!words[j].empty()) kept.push_back(std::move(words[j]));
  }
  est.surviving = kept.size();
  if (kept.empty()) throw Error("no invariant set sampled");
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  est.distinct_words = kept.size();
  est.value = std::log(static_cast<double>(est.distinct_words)) / (depth - 1);
  return est;
}

double empirical_entropy(const NetworkSpec& spec, int depth, std::size_t samples, std::uint64_t seed) {
  return empirical_entropy_detail(spec, depth, samples, seed).value;
}

// ---------------------------------------------------------------- perturbation

DeviationModel deviation_of(const NetworkSpec& spec, const Perturbation& pert) {
  DeviationModel dev;
  dev.local.assign(spec.d(), std::abs(pert.amplitude));
  dev.coupling = std::abs(pert.amplitude);
  dev.local_map = [&spec, pert](int node, const Vec& x) { return perturbed_local(spec, node, x, &pert); };
  return dev;
}

TheoremReport recertify(const NetworkSpec& spec, const Perturbation& pert, const CheckOptions& opts) {
  const DeviationModel dev = deviation_of(spec, pert);
  CheckOptions o = opts;
  o.deviation = &dev;
  return spec.coupling.kind == CouplingKind::TypeII ? theorem2_check(spec, o) : theorem1_check(spec, o);
}

}  // namespace cmn
