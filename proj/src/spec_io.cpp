#include "cmn/spec_io.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace cmn::io {

SpecError::SpecError(const std::string& msg, std::string pointer, int line, int column)
    : Error([&] {
        std::ostringstream o;
        if (line > 0) o << "line " << line << ", column " << column << ": ";
        if (!pointer.empty()) o << pointer << ": ";
        o << msg;
        return o.str();
      }()),
      pointer_(std::move(pointer)),
      line_(line),
      column_(column) {}

namespace {

std::string at(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string at(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

const json& need(const json& obj, const char* key, const std::string& ptr) {
  if (!obj.is_object()) throw SpecError("expected an object", ptr);
  auto it = obj.find(key);
  if (it == obj.end()) throw SpecError(std::string("missing key \"") + key + "\"", ptr);
  return *it;
}

const json* maybe(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

template <class F>
auto located(const std::string& ptr, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SpecError&) {
    throw;
  } catch (const Error& e) {
    throw SpecError(e.what(), ptr);
  }
}

int parse_int(const json& v, const std::string& ptr) {
  if (!v.is_number_integer()) throw SpecError("expected an integer", ptr);
  return v.get<int>();
}

const json& need_array(const json& v, const std::string& ptr) {
  if (!v.is_array()) throw SpecError("expected an array", ptr);
  return v;
}

Vec parse_vec(const json& v, const std::string& ptr) {
  need_array(v, ptr);
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = parse_real(v[i], at(ptr, i));
  return out;
}

Mat parse_mat(const json& v, const std::string& ptr) {
  need_array(v, ptr);
  if (v.empty()) throw SpecError("matrix has no rows", ptr);
  const std::size_t cols = need_array(v[0], at(ptr, 0)).size();
  Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec row = parse_vec(v[i], at(ptr, i));
    if (static_cast<std::size_t>(row.size()) != cols) throw SpecError("ragged matrix rows", at(ptr, i));
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(real_to_json(v(i)));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

AffinePiece parse_piece(const json& v, const std::string& ptr, int dim_in) {
  if (v.is_array() && v.size() == 2 && !v[0].is_array()) {
    if (dim_in != 1) throw SpecError("[slope, intercept] pieces need a one-dimensional map", ptr);
    Mat l(1, 1);
    l(0, 0) = parse_real(v[0], at(ptr, 0));
    Vec c(1);
    c(0) = parse_real(v[1], at(ptr, 1));
    return {l, c};
  }
  AffinePiece p{parse_mat(need(v, "linear", ptr), at(ptr, "linear")), Vec()};
  if (const json* off = maybe(v, "offset")) p.offset = parse_vec(*off, at(ptr, "offset"));
  else p.offset = Vec::Zero(p.linear.rows());
  if (p.offset.size() != p.linear.rows()) throw SpecError("offset length differs from the row count", at(ptr, "offset"));
  return p;
}

AffineChart parse_chart(const json& v, const std::string& ptr, int u, int s) {
  const Mat l = parse_mat(need(v, "linear", ptr), at(ptr, "linear"));
  const Vec o = maybe(v, "offset") ? parse_vec(v["offset"], at(ptr, "offset")) : Vec::Zero(l.rows());
  return located(ptr, [&] { return AffineChart(u, s, l, o); });
}

json chart_json(const AffineChart& c) { return json{{"linear", mat_json(c.linear())}, {"offset", vec_json(c.offset())}}; }

HSet parse_hset(const json& v, const std::string& ptr, int u, int s) {
  HSet h{"", AffineChart::identity(u, s)};
  if (const json* id = maybe(v, "id")) {
    if (!id->is_string()) throw SpecError("id must be a string", at(ptr, "id"));
    h.id = id->get<std::string>();
  }
  const int n = u + s;
  if (const json* iv = maybe(v, "interval")) {
    if (n != 1) throw SpecError("interval h-sets need u + s = 1", at(ptr, "interval"));
    const Vec ab = parse_vec(*iv, at(ptr, "interval"));
    if (ab.size() != 2 || !(ab(0) < ab(1))) throw SpecError("interval must be [a, b] with a < b", at(ptr, "interval"));
    Mat l(1, 1);
    l(0, 0) = 2.0 / (ab(1) - ab(0));
    h.chart = located(ptr, [&] { return AffineChart(u, s, l, Vec::Constant(1, -(ab(0) + ab(1)) / (ab(1) - ab(0)))); });
  } else if (const json* bx = maybe(v, "box")) {
    const Vec lo = parse_vec(need(*bx, "lo", at(ptr, "box")), at(ptr, "box/lo"));
    const Vec hi = parse_vec(need(*bx, "hi", at(ptr, "box")), at(ptr, "box/hi"));
    if (lo.size() != n || hi.size() != n) throw SpecError("box corners need u + s coordinates", at(ptr, "box"));
    Vec diag(n), off(n);
    for (int i = 0; i < n; ++i) {
      if (!(lo(i) < hi(i))) throw SpecError("box needs lo < hi in every coordinate", at(ptr, "box"));
      diag(i) = 2.0 / (hi(i) - lo(i));
      off(i) = -(lo(i) + hi(i)) / (hi(i) - lo(i));
    }
    h.chart = located(ptr, [&] { return AffineChart(u, s, Mat(diag.asDiagonal()), off); });
  } else {
    h.chart = parse_chart(need(v, "chart", ptr), at(ptr, "chart"), u, s);
  }
  return h;
}

UnifiedSet parse_unified(const json& v, const std::string& ptr, int u, int s) {
  UnifiedSet n{AffineChart::identity(u, s), {}};
  if (const json* c = maybe(v, "chart")) n.chart = parse_chart(*c, at(ptr, "chart"), u, s);
  const json& members = need_array(need(v, "members", ptr), at(ptr, "members"));
  for (std::size_t i = 0; i < members.size(); ++i) {
    const std::string mp = at(at(ptr, "members"), i);
    const json& m = members[i];
    UnifiedMember mem;
    if (const json* id = maybe(m, "id")) mem.id = id->is_string() ? id->get<std::string>() : id->dump();
    mem.center.p_u = maybe(m, "p_u") ? parse_vec(m["p_u"], at(mp, "p_u")) : Vec::Zero(u);
    mem.center.p_s = maybe(m, "p_s") ? parse_vec(m["p_s"], at(mp, "p_s")) : Vec::Zero(s);
    mem.center.r = maybe(m, "r") ? parse_real(m["r"], at(mp, "r")) : 1.0;
    if (mem.center.p_u.size() != u || mem.center.p_s.size() != s) throw SpecError("center dimensions differ from (u, s)", mp);
    n.members.push_back(std::move(mem));
  }
  return n;
}

json real_or_inf(double v) { return real_to_json(v); }

}  // namespace

double parse_real(const json& v, const std::string& ptr) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw SpecError("expected a real (number, decimal string or \"p/q\")", ptr);
  std::string s = v.get<std::string>();
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  auto full = [&](const std::string& text, auto conv) {
    if (text.empty()) throw SpecError("malformed real \"" + s + "\"", ptr);
    char* end = nullptr;
    errno = 0;
    const auto value = conv(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) throw SpecError("malformed real \"" + s + "\"", ptr);
    return value;
  };
  const auto slash = s.find('/');
  if (slash == std::string::npos) return full(s, [](const char* c, char** e) { return std::strtod(c, e); });
  const std::string ps = s.substr(0, slash), qs = s.substr(slash + 1);
  const bool integral = ps.find_first_not_of("+-0123456789") == std::string::npos &&
                        qs.find_first_not_of("+-0123456789") == std::string::npos;
  if (integral) {
    const long long p = full(ps, [](const char* c, char** e) { return std::strtoll(c, e, 10); });
    const long long q = full(qs, [](const char* c, char** e) { return std::strtoll(c, e, 10); });
    if (q == 0) throw SpecError("zero denominator in \"" + s + "\"", ptr);
    constexpr long long exact = 1LL << 53;
    if (std::llabs(p) < exact && std::llabs(q) < exact) return static_cast<double>(p) / static_cast<double>(q);
  }
  const long double p = full(ps, [](const char* c, char** e) { return std::strtold(c, e); });
  const long double q = full(qs, [](const char* c, char** e) { return std::strtold(c, e); });
  if (q == 0) throw SpecError("zero denominator in \"" + s + "\"", ptr);
  return static_cast<double>(p / q);
}

json real_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (auto p = msg.find("parse error"); p != std::string::npos) {
      const auto colon = msg.find(": ", p);
      msg = colon == std::string::npos ? msg.substr(p) : "parse error: " + msg.substr(colon + 2);
    }
    throw SpecError(msg, "", line, col);
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open file " + path, "");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

PiecewiseAffineMap map_from_json(const json& v, const std::string& ptr) {
  if (!v.is_object()) throw SpecError("map must be an object", ptr);
  std::string type;
  if (const json* t = maybe(v, "type")) type = t->is_string() ? t->get<std::string>() : "";
  else if (v.contains("cells")) type = "polyhedral";
  else if (v.contains("pieces")) type = "interval";
  else if (v.contains("linear")) type = "affine";
  if (type == "interval") {
    std::vector<double> bps;
    if (const json* b = maybe(v, "breakpoints")) {
      need_array(*b, at(ptr, "breakpoints"));
      for (std::size_t i = 0; i < b->size(); ++i) bps.push_back(parse_real((*b)[i], at(at(ptr, "breakpoints"), i)));
    }
    const json& ps = need_array(need(v, "pieces", ptr), at(ptr, "pieces"));
    std::vector<AffinePiece> pieces;
    for (std::size_t i = 0; i < ps.size(); ++i) pieces.push_back(parse_piece(ps[i], at(at(ptr, "pieces"), i), 1));
    double lo = -kInf, hi = kInf;
    if (const json* dom = maybe(v, "domain")) {
      const Vec d = parse_vec(*dom, at(ptr, "domain"));
      if (d.size() != 2) throw SpecError("domain must be [lo, hi]", at(ptr, "domain"));
      lo = d(0);
      hi = d(1);
    }
    return located(ptr, [&] { return PiecewiseAffineMap::interval(bps, pieces, lo, hi); });
  }
  if (type == "affine") {
    const AffinePiece p = parse_piece(v, ptr, -1);
    return located(ptr, [&] { return PiecewiseAffineMap::affine(p.linear, p.offset); });
  }
  if (type == "polyhedral") {
    const json& cs = need_array(need(v, "cells", ptr), at(ptr, "cells"));
    if (cs.empty()) throw SpecError("no cells", at(ptr, "cells"));
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string cp = at(at(ptr, "cells"), i);
      Cell c;
      c.piece = parse_piece(cs[i], cp, -1);
      if (const json* reg = maybe(cs[i], "region")) {
        need_array(*reg, at(cp, "region"));
        for (std::size_t h = 0; h < reg->size(); ++h) {
          const std::string hp = at(at(cp, "region"), h);
          c.region.push_back({parse_vec(need((*reg)[h], "normal", hp), at(hp, "normal")),
                              parse_real(need((*reg)[h], "bound", hp), at(hp, "bound"))});
        }
      }
      cells.push_back(std::move(c));
    }
    const int din = static_cast<int>(cells.front().piece.linear.cols());
    const int dout = static_cast<int>(cells.front().piece.linear.rows());
    Vec lo = Vec::Constant(din, -kInf), hi = Vec::Constant(din, kInf);
    if (const json* dom = maybe(v, "domain")) {
      lo = parse_vec(need(*dom, "lo", at(ptr, "domain")), at(ptr, "domain/lo"));
      hi = parse_vec(need(*dom, "hi", at(ptr, "domain")), at(ptr, "domain/hi"));
    }
    return located(ptr, [&] { return PiecewiseAffineMap::polyhedral(din, dout, cells, lo, hi); });
  }
  throw SpecError("unknown map type \"" + type + "\" (expected interval, affine or polyhedral)", ptr);
}

json map_to_json(const PiecewiseAffineMap& f) {
  if (f.is_interval()) {
    json pieces = json::array();
    for (const auto& c : f.cells()) {
      if (f.dim_out() == 1) pieces.push_back(json::array({real_to_json(c.piece.linear(0, 0)), real_to_json(c.piece.offset(0))}));
      else pieces.push_back(json{{"linear", mat_json(c.piece.linear)}, {"offset", vec_json(c.piece.offset)}});
    }
    json bps = json::array();
    for (double b : f.breakpoints()) bps.push_back(real_to_json(b));
    json out{{"type", "interval"}, {"breakpoints", bps}, {"pieces", pieces}};
    if (std::isfinite(f.domain_lo()(0)) || std::isfinite(f.domain_hi()(0)))
      out["domain"] = json::array({real_to_json(f.domain_lo()(0)), real_to_json(f.domain_hi()(0))});
    return out;
  }
  const bool unbounded = !f.domain_lo().array().isFinite().any() && !f.domain_hi().array().isFinite().any();
  if (f.is_affine() && unbounded && f.cells().front().region.empty()) {
    const auto& p = f.cells().front().piece;
    return json{{"type", "affine"}, {"linear", mat_json(p.linear)}, {"offset", vec_json(p.offset)}};
  }
  json cells = json::array();
  for (const auto& c : f.cells()) {
    json region = json::array();
    for (const auto& h : c.region) region.push_back(json{{"normal", vec_json(h.normal)}, {"bound", real_to_json(h.bound)}});
    cells.push_back(json{{"region", region}, {"linear", mat_json(c.piece.linear)}, {"offset", vec_json(c.piece.offset)}});
  }
  return json{{"type", "polyhedral"},
              {"cells", cells},
              {"domain", json{{"lo", vec_json(f.domain_lo())}, {"hi", vec_json(f.domain_hi())}}}};
}

NetworkSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("spec document must be a JSON object", "");
  const json& ver = need(doc, "format_version", "");
  if (!ver.is_string() || ver.get<std::string>() != kFormatVersion)
    throw SpecError(std::string("unsupported format_version (expected \"") + kFormatVersion + "\")", "/format_version");

  const json& g = need(doc, "graph", "");
  NetworkSpec spec;
  spec.graph.d = parse_int(need(g, "d", "/graph"), "/graph/d");
  if (spec.graph.d < 1) throw SpecError("node count must be positive", "/graph/d");
  if (const json* edges = maybe(g, "edges")) {
    need_array(*edges, "/graph/edges");
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const std::string ep = at("/graph/edges", i);
      const json& e = (*edges)[i];
      if (!e.is_array() || e.size() != 2) throw SpecError("edge must be [from, to]", ep);
      const int a = parse_int(e[0], at(ep, 0)), b = parse_int(e[1], at(ep, 1));
      if (a < 1 || a > spec.graph.d || b < 1 || b > spec.graph.d) throw SpecError("edge names a missing node", ep);
      spec.graph.edges.push_back({a - 1, b - 1});
    }
  }

  const json& nodes = need_array(need(doc, "nodes", ""), "/nodes");
  if (static_cast<int>(nodes.size()) != spec.graph.d)
    throw SpecError("expected " + std::to_string(spec.graph.d) + " nodes, got " + std::to_string(nodes.size()), "/nodes");

  const json& c = need(doc, "coupling", "");
  const std::string kind = need(c, "kind", "/coupling").is_string() ? c["kind"].get<std::string>() : "";
  if (kind == "I" || kind == "TypeI") spec.coupling.kind = CouplingKind::TypeI;
  else if (kind == "II" || kind == "TypeII") spec.coupling.kind = CouplingKind::TypeII;
  else throw SpecError("coupling kind must be \"I\" or \"II\"", "/coupling/kind");

  const PiecewiseAffineMap first = map_from_json(need(nodes[0], "map", "/nodes/0"), "/nodes/0/map");
  spec.dim_u = first.dim_in();
  spec.dim_s = 0;
  if (const json* dims = maybe(doc, "dims")) {
    spec.dim_u = parse_int(need(*dims, "u", "/dims"), "/dims/u");
    spec.dim_s = parse_int(need(*dims, "s", "/dims"), "/dims/s");
    if (spec.dim_u < 1 || spec.dim_s < 0) throw SpecError("need u >= 1 and s >= 0", "/dims");
  }
  const int u = spec.dim_u, s = spec.dim_s;

  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string np = at("/nodes", k);
    const json& nj = nodes[k];
    PiecewiseAffineMap local = k == 0 ? first : map_from_json(need(nj, "map", np), at(np, "map"));
    if (local.dim_in() != u + s || local.dim_out() != u + s)
      throw SpecError("local map must act on R^" + std::to_string(u + s), at(np, "map"));

    const json& tj = need_array(need(nj, "transition", np), at(np, "transition"));
    std::vector<std::vector<int>> bits;
    for (std::size_t i = 0; i < tj.size(); ++i) {
      need_array(tj[i], at(at(np, "transition"), i));
      std::vector<int> row;
      for (std::size_t j = 0; j < tj[i].size(); ++j) row.push_back(parse_int(tj[i][j], at(at(at(np, "transition"), i), j)));
      bits.push_back(std::move(row));
    }
    const auto trep = validate_transition(bits);
    if (!trep.ok()) throw SpecError(trep.errors.front(), at(np, "transition"));

    std::optional<UnifiedSet> unified;
    if (const json* uj = maybe(nj, "unified")) unified = parse_unified(*uj, at(np, "unified"), u, s);

    std::vector<HSet> hsets;
    if (const json* hj = maybe(nj, "hsets")) {
      need_array(*hj, at(np, "hsets"));
      for (std::size_t i = 0; i < hj->size(); ++i) hsets.push_back(parse_hset((*hj)[i], at(at(np, "hsets"), i), u, s));
    } else if (unified) {
      for (int i = 0; i < unified->size(); ++i) {
        HSet h = located(at(np, "unified"), [&] { return unified->member_hset(i); });
        if (h.id.empty()) h.id = "M" + std::to_string(k + 1) + std::to_string(i + 1);
        hsets.push_back(std::move(h));
      }
    } else {
      throw SpecError("missing key \"hsets\" (required without a unified set)", np);
    }
    for (std::size_t i = 0; i < hsets.size(); ++i)
      if (hsets[i].id.empty()) hsets[i].id = "M" + std::to_string(k + 1) + std::to_string(i + 1);

    std::map<ChartFormKey, ProductFormMap> forms;
    if (const json* fj = maybe(nj, "chart_forms")) {
      need_array(*fj, at(np, "chart_forms"));
      for (std::size_t i = 0; i < fj->size(); ++i) {
        const std::string fp = at(at(np, "chart_forms"), i);
        const json& f = (*fj)[i];
        const int src = parse_int(need(f, "source", fp), at(fp, "source"));
        const int tgt = maybe(f, "target") ? parse_int(f["target"], at(fp, "target")) : 0;
        if (src < 1 || src > static_cast<int>(hsets.size()) || tgt < 0 || tgt > static_cast<int>(hsets.size()))
          throw SpecError("chart form index out of range", fp);
        ProductFormMap pf{map_from_json(need(f, "U", fp), at(fp, "U")), std::nullopt};
        if (const json* vj = maybe(f, "V")) pf.v = map_from_json(*vj, at(fp, "V"));
        const ChartFormKey key{src - 1, tgt - 1};
        if (forms.count(key)) throw SpecError("duplicate chart form", fp);
        forms.emplace(key, std::move(pf));
      }
    }
    spec.nodes.push_back(NodeSystem{std::move(local), std::move(hsets), TransitionMatrix(bits), std::move(unified), std::move(forms)});
  }

  spec.coupling.matrix = parse_mat(need(c, "matrix", "/coupling"), "/coupling/matrix");
  if (spec.coupling.matrix.rows() != spec.graph.d || spec.coupling.matrix.cols() != spec.graph.d)
    throw SpecError("coupling matrix must be d x d", "/coupling/matrix");
  if (const json* amb = maybe(c, "ambient")) spec.coupling.ambient = map_from_json(*amb, "/coupling/ambient");
  if (const json* pe = maybe(c, "per_entry")) {
    need_array(*pe, "/coupling/per_entry");
    for (std::size_t i = 0; i < pe->size(); ++i) {
      const std::string pp = at("/coupling/per_entry", i);
      const json& ej = need_array(need((*pe)[i], "entry", pp), at(pp, "entry"));
      std::vector<int> key;
      for (std::size_t t = 0; t < ej.size(); ++t) key.push_back(parse_int(ej[t], at(at(pp, "entry"), t)) - 1);
      spec.coupling.per_entry[key] = parse_mat(need((*pe)[i], "matrix", pp), at(pp, "matrix"));
    }
  }
  return spec;
}

json spec_to_json(const NetworkSpec& spec) {
  json edges = json::array();
  for (const auto& [a, b] : spec.graph.edges) edges.push_back(json::array({a + 1, b + 1}));
  json nodes = json::array();
  for (const auto& n : spec.nodes) {
    json hsets = json::array();
    for (const auto& h : n.hsets) hsets.push_back(json{{"id", h.id}, {"chart", chart_json(h.chart)}});
    json node{{"map", map_to_json(n.local_map)}, {"hsets", hsets}, {"transition", n.transition.rows()}};
    if (n.unified) {
      json members = json::array();
      for (const auto& m : n.unified->members)
        members.push_back(json{{"id", m.id}, {"p_u", vec_json(m.center.p_u)}, {"p_s", vec_json(m.center.p_s)}, {"r", real_or_inf(m.center.r)}});
      node["unified"] = json{{"chart", chart_json(n.unified->chart)}, {"members", members}};
    }
    if (!n.chart_forms.empty()) {
      json forms = json::array();
      for (const auto& [key, f] : n.chart_forms) {
        json fj{{"source", key.first + 1}, {"U", map_to_json(f.u)}};
        if (key.second >= 0) fj["target"] = key.second + 1;
        if (f.v) fj["V"] = map_to_json(*f.v);
        forms.push_back(std::move(fj));
      }
      node["chart_forms"] = forms;
    }
    nodes.push_back(std::move(node));
  }
  json coupling{{"kind", spec.coupling.kind == CouplingKind::TypeI ? "I" : "II"}, {"matrix", mat_json(spec.coupling.matrix)}};
  if (spec.coupling.ambient) coupling["ambient"] = map_to_json(*spec.coupling.ambient);
  if (!spec.coupling.per_entry.empty()) {
    json pe = json::array();
    for (const auto& [key, m] : spec.coupling.per_entry) {
      json e = json::array();
      for (int i : key) e.push_back(i + 1);
      pe.push_back(json{{"entry", e}, {"matrix", mat_json(m)}});
    }
    coupling["per_entry"] = pe;
  }
  return json{{"format_version", kFormatVersion},
              {"dims", json{{"u", spec.dim_u}, {"s", spec.dim_s}}},
              {"graph", json{{"d", spec.graph.d}, {"edges", edges}}},
              {"nodes", nodes},
              {"coupling", coupling}};
}

NetworkSpec load_spec(const std::string& path) { return spec_from_json(read_file(path)); }

std::string canonical_dump(const json& doc) { return doc.dump(); }

std::string digest(const json& doc) {
  const std::string text = canonical_dump(doc);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("digest: SHA-256 failed");
  std::ostringstream hex;
  hex << "sha256:" << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

json indices(const std::vector<int>& v) {
  json a = json::array();
  for (int i : v) a.push_back(i + 1);
  return a;
}

json cert_json(const std::optional<CoveringCertificate>& c) {
  if (!c) return nullptr;
  return json{{"source_id", c->source_id},
              {"target_id", c->target_id},
              {"degree", c->degree.value},
              {"degree_method", std::string(to_string(c->degree.method))},
              {"unstable_margin", real_to_json(c->unstable_margin)},
              {"stable_margin", real_to_json(c->stable_margin)},
              {"target_radius", real_to_json(c->target_radius)},
              {"admissible_eps", real_to_json(c->admissible_eps)}};
}

}  // namespace

json report_to_json(const TheoremReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back(json{{"source", indices(e.source)},
                           {"target", indices(e.target)},
                           {"verdict", std::string(to_string(e.verdict))},
                           {"tau", e.tau ? indices(*e.tau) : json(nullptr)},
                           {"slack", real_to_json(e.slack)},
                           {"binding_row", e.binding_row + 1},
                           {"reason", e.reason},
                           {"certificate", cert_json(e.certificate)}});
  }
  json local = json::array();
  for (const auto& l : r.local)
    local.push_back(json{{"node", l.node + 1},
                         {"source", l.source + 1},
                         {"target", l.target + 1},
                         {"verdict", std::string(to_string(l.outcome.verdict))},
                         {"reason", l.outcome.reason},
                         {"slack", real_to_json(l.outcome.slack)},
                         {"certificate", cert_json(l.outcome.certificate)}});
  json out{{"theorem", r.theorem == Theorem::One ? 1 : 2},
           {"verdict", std::string(to_string(r.verdict))},
           {"global_eps", real_to_json(r.global_eps)},
           {"entries", entries},
           {"local", local},
           {"notes", r.notes}};
  if (r.binding_entry) {
    const auto& b = r.entries[*r.binding_entry];
    out["binding_entry"] = json{{"source", indices(b.source)}, {"target", indices(b.target)}, {"label", entry_label(b)}};
  } else {
    out["binding_entry"] = nullptr;
  }
  if (r.theorem == Theorem::Two) out["entropy_bound"] = real_to_json(r.entropy_bound);
  else out["period"] = r.period;
  return out;
}

json orbit_to_json(const PeriodicOrbitCertificate& c) {
  json loop = json::array(), orbit = json::array(), margins = json::array();
  for (const auto& s : c.loop) loop.push_back(indices(s));
  for (const auto& p : c.orbit) orbit.push_back(vec_json(p));
  for (double m : c.interior_margins) margins.push_back(real_to_json(m));
  return json{{"point", vec_json(c.point)},
              {"period", c.period},
              {"residual", real_to_json(c.residual)},
              {"interior_margins", margins},
              {"loop", loop},
              {"orbit", orbit}};
}

json certificate_document(const std::string& spec_digest, const TheoremReport& report,
                          const std::vector<PeriodicOrbitCertificate>& orbits) {
  json o = json::array();
  for (const auto& c : orbits) o.push_back(orbit_to_json(c));
  return json{{"tool", json{{"name", kToolName}, {"version", kToolVersion}}},
              {"spec_digest", spec_digest},
              {"report", report_to_json(report)},
              {"periodic_orbits", o}};
}

}  // namespace cmn::io
