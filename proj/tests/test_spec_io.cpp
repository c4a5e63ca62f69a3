#include "support.hpp"

#include <doctest.h>

using namespace cmn;
using io::json;

namespace {

bool same_map(const PiecewiseAffineMap& a, const PiecewiseAffineMap& b) {
  if (a.dim_in() != b.dim_in() || a.dim_out() != b.dim_out() || a.breakpoints() != b.breakpoints()) return false;
  if (a.domain_lo() != b.domain_lo() || a.domain_hi() != b.domain_hi() || a.cells().size() != b.cells().size()) return false;
  for (std::size_t i = 0; i < a.cells().size(); ++i) {
    const auto &x = a.cells()[i], &y = b.cells()[i];
    if (x.piece.linear != y.piece.linear || x.piece.offset != y.piece.offset || x.region.size() != y.region.size()) return false;
    for (std::size_t h = 0; h < x.region.size(); ++h)
      if (x.region[h].normal != y.region[h].normal || x.region[h].bound != y.region[h].bound) return false;
  }
  return true;
}

bool same_chart(const AffineChart& a, const AffineChart& b) {
  return a.dim_u() == b.dim_u() && a.dim_s() == b.dim_s() && a.linear() == b.linear() && a.offset() == b.offset();
}

bool same_spec(const NetworkSpec& a, const NetworkSpec& b) {
  if (a.graph.d != b.graph.d || a.graph.edges != b.graph.edges || a.dim_u != b.dim_u || a.dim_s != b.dim_s) return false;
  if (a.coupling.kind != b.coupling.kind || a.coupling.matrix != b.coupling.matrix) return false;
  if (a.coupling.ambient.has_value() != b.coupling.ambient.has_value()) return false;
  if (a.coupling.ambient && !same_map(*a.coupling.ambient, *b.coupling.ambient)) return false;
  if (a.coupling.per_entry != b.coupling.per_entry) return false;
  for (int k = 0; k < a.d(); ++k) {
    const auto &x = a.nodes[k], &y = b.nodes[k];
    if (!same_map(x.local_map, y.local_map) || !(x.transition == y.transition) || x.hsets.size() != y.hsets.size()) return false;
    for (std::size_t i = 0; i < x.hsets.size(); ++i)
      if (x.hsets[i].id != y.hsets[i].id || !same_chart(x.hsets[i].chart, y.hsets[i].chart)) return false;
    if (x.unified.has_value() != y.unified.has_value()) return false;
    if (x.unified) {
      if (!same_chart(x.unified->chart, y.unified->chart) || x.unified->size() != y.unified->size()) return false;
      for (int i = 0; i < x.unified->size(); ++i) {
        const auto &m = x.unified->members[i], &n = y.unified->members[i];
        if (m.id != n.id || m.center.p_u != n.center.p_u || m.center.p_s != n.center.p_s || m.center.r != n.center.r) return false;
      }
    }
    if (x.chart_forms.size() != y.chart_forms.size()) return false;
    for (const auto& [key, f] : x.chart_forms) {
      auto it = y.chart_forms.find(key);
      if (it == y.chart_forms.end() || !same_map(f.u, it->second.u) || f.v.has_value() != it->second.v.has_value()) return false;
      if (f.v && !same_map(*f.v, *it->second.v)) return false;
    }
  }
  return true;
}

json example1() { return io::read_file(testing::fixture("example1.json")); }

}  // namespace

TEST_CASE("reals accept decimals, rationals and infinities") {
  CHECK(io::parse_real(json(3.5), "") == 3.5);
  CHECK(io::parse_real(json("3.5"), "") == 3.5);
  CHECK(io::parse_real(json("7/2"), "") == 3.5);
  CHECK(io::parse_real(json("-1/3"), "") == -1.0 / 3.0);
  CHECK(io::parse_real(json("1/10"), "") == 0.1);
  CHECK(io::parse_real(json("inf"), "") == kInf);
  CHECK(io::parse_real(json("-inf"), "") == -kInf);
  CHECK_THROWS_AS(io::parse_real(json("1/0"), "/x"), io::SpecError);
  CHECK_THROWS_AS(io::parse_real(json("abc"), "/x"), io::SpecError);
  CHECK_THROWS_AS(io::parse_real(json("1/2/3"), "/x"), io::SpecError);
  CHECK_THROWS_AS(io::parse_real(json(true), "/x"), io::SpecError);
}

TEST_CASE("every fixture round-trips field by field") {
  for (const char* name : {"example1.json", "example1_alpha_0.2.json", "example2.json", "theorem1_2x3.json", "example1_node1.json",
                           "example1_node2.json"}) {
    const auto spec = testing::load(name);
    const auto text = io::spec_to_json(spec).dump(2);
    const auto again = io::spec_from_json(io::parse_text(text));
    CHECK_MESSAGE(same_spec(spec, again), name);
    CHECK(io::spec_to_json(again) == io::spec_to_json(spec));
  }
}

TEST_CASE("polyhedral maps and chart forms round-trip") {
  Mat l(2, 2);
  l << 2, 0, 0, 0.5;
  std::vector<Cell> cells{{{Halfspace{testing::vec({1, 0}), 0.0}}, {l, testing::vec({1, 0})}},
                          {{Halfspace{testing::vec({-1, 0}), 0.0}}, {l, testing::vec({1, 0})}}};
  const auto f = PiecewiseAffineMap::polyhedral(2, 2, cells, testing::vec({-5, -5}), testing::vec({5, 5}));
  CHECK(same_map(io::map_from_json(io::map_to_json(f), ""), f));
  const auto g = PiecewiseAffineMap::affine(l, testing::vec({0.25, -1}));
  CHECK(same_map(io::map_from_json(io::map_to_json(g), ""), g));
  auto spec = testing::load("example1.json");
  spec.nodes[0].chart_forms.emplace(ChartFormKey{0, -1}, ProductFormMap{testing::line(3.5, 1.5), std::nullopt});
  CHECK(same_spec(io::spec_from_json(io::spec_to_json(spec)), spec));
}

TEST_CASE("syntax errors carry line and column") {
  try {
    io::parse_text("{\n  \"graph\": [1,\n  ]\n}");
    FAIL("expected a syntax error");
  } catch (const io::SpecError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() >= 3);
  }
}

TEST_CASE("semantic errors carry a JSON pointer") {
  auto check_pointer = [](json doc, const std::string& pointer) {
    try {
      io::spec_from_json(doc);
      FAIL("expected a spec error");
    } catch (const io::SpecError& e) {
      CHECK(e.pointer() == pointer);
    }
  };
  json doc = example1();
  doc["nodes"][1].erase("transition");
  check_pointer(doc, "/nodes/1");
  doc = example1();
  doc["nodes"][0]["transition"] = json::array({json::array({1, 0}), json::array({1, 0})});
  check_pointer(doc, "/nodes/0/transition");
  doc = example1();
  doc["nodes"][0]["map"]["pieces"][1][0] = "x/2";
  check_pointer(doc, "/nodes/0/map/pieces/1/0");
  doc = example1();
  doc["graph"]["edges"][0] = json::array({1, 7});
  check_pointer(doc, "/graph/edges/0");
  doc = example1();
  doc["format_version"] = "2";
  check_pointer(doc, "/format_version");
  doc = example1();
  doc["coupling"]["kind"] = "III";
  check_pointer(doc, "/coupling/kind");
}

TEST_CASE("digests identify the spec and certificates are reproducible") {
  const json doc = example1();
  CHECK(io::digest(doc) == io::digest(io::parse_text(doc.dump(4))));
  CHECK(io::digest(doc).rfind("sha256:", 0) == 0);
  CHECK(io::digest(doc).size() == 7 + 64);
  json tampered = doc;
  tampered["coupling"]["matrix"][0][1] = "1/100";
  CHECK(io::digest(tampered) != io::digest(doc));
  const auto spec = io::spec_from_json(doc);
  const auto a = io::certificate_document(io::digest(doc), theorem2_check(spec)).dump(2);
  const auto b = io::certificate_document(io::digest(doc), theorem2_check(spec)).dump(2);
  CHECK(a == b);
  const json cert = json::parse(a);
  CHECK(cert["spec_digest"] == io::digest(doc));
  CHECK(cert["report"]["verdict"] == "pass");
  CHECK(cert["report"]["entries"].size() == 9);
  CHECK(cert["report"]["global_eps"] == 0.5);
  CHECK(cert["report"]["entries"][0]["certificate"]["stable_margin"] == "inf");
}

TEST_CASE("Type II h-sets may be derived from the unified members") {
  json doc = example1();
  for (auto& node : doc["nodes"]) node.erase("hsets");
  const auto derived = io::spec_from_json(doc);
  const auto declared = io::spec_from_json(example1());
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) {
      const auto &a = derived.nodes[k].hsets[i], &b = declared.nodes[k].hsets[i];
      CHECK(a.id == b.id);
      CHECK(a.chart.apply(testing::vec({2.5}))(0) == doctest::Approx(b.chart.apply(testing::vec({2.5}))(0)));
    }
}
