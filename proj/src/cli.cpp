#include "cmn/cli.hpp"

#include "cmn/dynamics.hpp"
#include "cmn/spec_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace cmn::cli {

namespace {

struct Globals {
  double tol = tol::kStrictMargin;
  int grid = kDefaultGrid;
  std::uint64_t seed = 0;
  std::string out;
};

struct Loaded {
  io::json doc;
  NetworkSpec spec;
};

Loaded load(const std::string& path) {
  Loaded l{io::read_file(path), {}};
  l.spec = io::spec_from_json(l.doc);
  return l;
}

CheckOptions options(const Globals& g) {
  CheckOptions o;
  o.grid = g.grid;
  o.strict_margin = g.tol;
  return o;
}

Theorem default_theorem(const NetworkSpec& spec) {
  return spec.coupling.kind == CouplingKind::TypeI ? Theorem::One : Theorem::Two;
}

TheoremReport check(const NetworkSpec& spec, Theorem t, const Globals& g) {
  return t == Theorem::One ? theorem1_check(spec, options(g)) : theorem2_check(spec, options(g));
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

std::string vec_text(const Vec& v) {
  std::ostringstream o;
  o << std::setprecision(12);
  for (Eigen::Index i = 0; i < v.size(); ++i) o << (i ? " " : "") << v(i);
  return o.str();
}

void write_json(const std::string& path, const io::json& doc) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io::SpecError("cannot write " + path, "");
  f << doc.dump(2) << '\n';
  if (!f) throw io::SpecError("write failed for " + path, "");
}

void print_failures(const TheoremReport& r, std::ostream& out) {
  for (const auto& l : r.local)
    if (l.outcome.verdict != Verdict::Pass)
      out << "local node " << l.node + 1 << " " << l.source + 1 << "->" << l.target + 1 << ": "
          << to_string(l.outcome.verdict) << ": " << l.outcome.reason << '\n';
  for (const auto& e : r.entries)
    if (e.verdict != Verdict::Pass) out << "entry " << entry_label(e) << ": " << to_string(e.verdict) << ": " << e.reason << '\n';
  for (const auto& n : r.notes) out << "note: " << n << '\n';
  if (r.verdict != Verdict::Pass && r.binding_entry) out << "binding entry " << entry_label(r.entries[*r.binding_entry]) << '\n';
}

int exit_for(Verdict v) { return v == Verdict::Pass ? kPass : kFail; }

std::vector<std::vector<int>> parse_loop(const std::string& text, int d) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == ';' || c == '(' || c == ')'; }, ' ');
  std::istringstream in(s);
  std::vector<int> flat;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw PreconditionError("loop: \"" + tok + "\" is not an integer");
    flat.push_back(v - 1);
  }
  if (flat.empty() || flat.size() % static_cast<std::size_t>(d) != 0)
    throw PreconditionError("loop: need a multiple of " + std::to_string(d) + " symbols (one per node per step)");
  std::vector<std::vector<int>> loop;
  for (std::size_t t = 0; t < flat.size(); t += static_cast<std::size_t>(d))
    loop.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(t), flat.begin() + static_cast<std::ptrdiff_t>(t) + d);
  return loop;
}

int cmd_verify(const Globals& g, const std::string& path, int theorem, std::ostream& out) {
  const Loaded l = load(path);
  const Theorem t = theorem == 0 ? default_theorem(l.spec) : (theorem == 1 ? Theorem::One : Theorem::Two);
  const TheoremReport r = check(l.spec, t, g);
  std::vector<PeriodicOrbitCertificate> orbits;
  out << "theorem " << (t == Theorem::One ? 1 : 2) << '\n';
  out << "verdict " << to_string(r.verdict) << '\n';
  out << "entries " << r.entries.size() << '\n';
  if (r.verdict == Verdict::Pass) {
    if (t == Theorem::Two) out << "entropy_bound " << fmt(r.entropy_bound) << '\n';
    else out << "period " << r.period << '\n';
    out << "eps* " << std::setprecision(12) << r.global_eps << '\n';
    if (r.binding_entry) out << "binding entry " << entry_label(r.entries[*r.binding_entry]) << '\n';
    if (t == Theorem::One) {
      orbits.push_back(periodic_point(l.spec, canonical_loop(l.spec)));
      out << "periodic point " << vec_text(orbits.back().point) << " (period " << orbits.back().period << ")\n";
    }
  } else {
    print_failures(r, out);
  }
  if (!g.out.empty()) {
    write_json(g.out, io::certificate_document(io::digest(l.doc), r, orbits));
    out << "certificate " << g.out << '\n';
  }
  return exit_for(r.verdict);
}

int cmd_entropy(const Globals& g, const std::string& path, const std::vector<std::string>& empirical, std::ostream& out) {
  const Loaded l = load(path);
  const TheoremReport r = check(l.spec, default_theorem(l.spec), g);
  if (r.verdict != Verdict::Pass) {
    out << "verdict " << to_string(r.verdict) << '\n';
    print_failures(r, out);
    return kFail;
  }
  const double bound = entropy_lower_bound(l.spec.transitions());
  out << "bound " << fmt(bound) << '\n';
  if (!empirical.empty()) {
    if (empirical.size() != 3) throw PreconditionError("--empirical takes depth, samples and seed");
    const int depth = std::stoi(empirical[0]);
    const auto samples = static_cast<std::size_t>(std::stoull(empirical[1]));
    const auto seed = static_cast<std::uint64_t>(std::stoull(empirical[2]));
    const EntropyEstimate e = empirical_entropy_detail(l.spec, depth, samples, seed);
    out << "estimate " << fmt(e.value) << '\n';
    out << "gap " << fmt(e.value - bound) << '\n';
    out << "distinct_words " << e.distinct_words << " surviving " << e.surviving << " of " << e.samples << '\n';
  }
  return kPass;
}

int cmd_periodic(const Globals& g, const std::string& path, const std::string& loop_text, bool automatic,
                 std::ostream& out) {
  const Loaded l = load(path);
  if (automatic == !loop_text.empty()) throw PreconditionError("periodic: give exactly one of --loop and --auto");
  const auto loop = automatic ? canonical_loop(l.spec) : parse_loop(loop_text, l.spec.d());
  const PeriodicOrbitCertificate c = periodic_point(l.spec, loop);
  out << "period " << c.period << '\n';
  out << "point " << vec_text(c.point) << '\n';
  out << "residual " << std::scientific << std::setprecision(3) << c.residual << std::defaultfloat << '\n';
  out << "min interior margin " << std::setprecision(12)
      << *std::min_element(c.interior_margins.begin(), c.interior_margins.end()) << '\n';
  if (!g.out.empty()) {
    io::json doc{{"tool", io::json{{"name", io::kToolName}, {"version", io::kToolVersion}}},
                 {"spec_digest", io::digest(l.doc)},
                 {"periodic_orbits", io::json::array({io::orbit_to_json(c)})}};
    write_json(g.out, doc);
    out << "certificate " << g.out << '\n';
  }
  return kPass;
}

int cmd_margin(const Globals& g, const std::string& path, std::ostream& out) {
  const Loaded l = load(path);
  const TheoremReport r = check(l.spec, default_theorem(l.spec), g);
  if (r.verdict != Verdict::Pass) {
    out << "verdict " << to_string(r.verdict) << ": no margin\n";
    print_failures(r, out);
    return kFail;
  }
  out << "eps* " << std::setprecision(12) << r.global_eps << '\n';
  if (r.binding_entry) {
    const auto& e = r.entries[*r.binding_entry];
    out << "binding entry " << entry_label(e) << " (unstable margin " << e.certificate->unstable_margin << ")\n";
  }
  return kPass;
}

int cmd_simulate(const Globals& g, const std::string& path, const std::vector<std::string>& x0_text, int steps,
                 double amplitude, std::ostream& out) {
  const Loaded l = load(path);
  Vec x(static_cast<Eigen::Index>(x0_text.size()));
  for (std::size_t i = 0; i < x0_text.size(); ++i)
    x(static_cast<Eigen::Index>(i)) = io::parse_real(io::json(x0_text[i]), "--x0");
  if (x.size() != l.spec.dim())
    throw PreconditionError("--x0 needs " + std::to_string(l.spec.dim()) + " coordinates");
  const Perturbation pert{amplitude, g.seed};
  const Itinerary it = itinerary(l.spec, x, steps + 1, &pert);
  for (int t = 0; t <= steps; ++t) {
    out << t << "  " << vec_text(x);
    if (t < static_cast<int>(it.steps.size())) {
      out << "  [";
      for (std::size_t k = 0; k < it.steps[t].size(); ++k) out << (k ? "," : "") << it.steps[t][k] + 1;
      out << "]";
    } else {
      out << "  escaped";
    }
    out << '\n';
    if (t == steps || (it.escape_step && t >= *it.escape_step)) break;
    x = step(l.spec, x, &pert);
  }
  if (it.ties) out << "ties " << it.ties << '\n';
  return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covering-relation, periodic-orbit and entropy certificates for coupled map networks", "cmnverify"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.tol, "Slack an inequality needs to count as strict")->capture_default_str();
  app.add_option("--grid", g.grid, "Sampling grid for non-affine stretch bounds")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for perturbations")->capture_default_str();
  app.add_option("--out", g.out, "Write a JSON certificate here");
  app.set_version_flag("--version", io::kToolVersion);

  std::string spec;
  int theorem = 0;
  auto* verify = app.add_subcommand("verify", "Check the covering hypotheses and write a certificate");
  verify->add_option("spec", spec, "Spec file")->required();
  verify->add_option("--theorem", theorem, "1 or 2; defaults to the coupling type")->check(CLI::IsMember({1, 2}));

  std::vector<std::string> empirical;
  auto* entropy = app.add_subcommand("entropy", "Print the certified entropy lower bound");
  entropy->add_option("spec", spec, "Spec file")->required();
  entropy->add_option("--empirical", empirical, "depth samples seed")->expected(3);

  std::string loop;
  bool automatic = false;
  auto* periodic = app.add_subcommand("periodic", "Certify a periodic orbit along a loop");
  periodic->add_option("spec", spec, "Spec file")->required();
  periodic->add_option("--loop", loop, "1-based symbols, one per node per step");
  periodic->add_flag("--auto", automatic, "Use the canonical loop through the first symbols");

  auto* margin = app.add_subcommand("margin", "Print the persistence margin and its binding entry");
  margin->add_option("spec", spec, "Spec file")->required();

  std::vector<std::string> x0;
  int steps = 10;
  double amplitude = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Iterate the network and print the itinerary");
  simulate->add_option("spec", spec, "Spec file")->required();
  simulate->add_option("--x0", x0, "Initial state")->required();
  simulate->add_option("--steps", steps, "Number of steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--amplitude", amplitude, "Perturbation amplitude")->capture_default_str()->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForVersion&) {
    out << io::kToolVersion << '\n';
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "cmnverify: " << e.what() << '\n';
    return kInvalid;
  }

  try {
    if (verify->parsed()) return cmd_verify(g, spec, theorem, out);
    if (entropy->parsed()) return cmd_entropy(g, spec, empirical, out);
    if (periodic->parsed()) return cmd_periodic(g, spec, loop, automatic, out);
    if (margin->parsed()) return cmd_margin(g, spec, out);
    if (simulate->parsed()) return cmd_simulate(g, spec, x0, steps, amplitude, out);
  } catch (const io::SpecError& e) {
    err << "cmnverify: " << spec << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const InvalidSpecError& e) {
    err << "cmnverify: " << spec << ": invalid network\n";
    for (const auto& msg : e.validation().errors) err << "  " << msg << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "cmnverify: " << e.what() << '\n';
    return kFail;
  }
  return kInvalid;
}

}  // namespace cmn::cli
