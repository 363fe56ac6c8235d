#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalreach/digest.hpp"
#include "causalreach/errors.hpp"
#include "causalreach/grid_io.hpp"
#include "causalreach/manifold_io.hpp"
#include "causalreach/quotient.hpp"
#include "causalreach/registry.hpp"
#include "causalreach/separation.hpp"
#include "causalreach/topology.hpp"

namespace causalreach::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::string manifold;
  std::string manifold_file;
  double phi = 0.5;
  std::uint64_t seed = 1;
  int threads = 1;
  bool strict = false;
  std::optional<int> resolution;
  std::optional<std::uint64_t> samples;
  std::optional<double> horizon;
  std::optional<int> relay;
  std::string out = "out";
  std::string format = "json";

  // Subcommand parameters.
  std::string point, vector, direction = "fut", from, to, center, families = "alex,tau",
                                                 radii = "0.1,0.05", box;
  bool timelike = false;
  bool oracle = false;
  bool refine = false;
  double eps = 0.25;
  int probes = -1;
  int triples = 200;
  int per_point = 20;
};

std::uint64_t env_seed() {
  const char* s = std::getenv("CAUSALREACH_SEED");
  if (!s || !*s) return 1;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError(std::string("CAUSALREACH_SEED is not an integer: ") + s);
  }
}

RegistryEntry load_entry(const Options& o) {
  if (!o.manifold_file.empty()) {
    RegistryEntry e{"", "", "file", load_manifold(o.manifold_file), std::nullopt, {}, {}, {}, {},
                    {}, {}, {}};
    e.name = e.structure.name();
    e.description = "loaded from " + o.manifold_file;
    const Box& d = e.structure.domain();
    e.topology.probe_box = Box(d.center() - 0.25 * d.extent(), d.center() + 0.25 * d.extent());
    e.neighbourhood = box_neighbourhoods();
    return e;
  }
  if (o.manifold.empty()) throw ConfigError("--manifold or --manifold-file is required");
  return get_structure(o.manifold, o.phi);
}

Vec point_arg(const RegistryEntry& e, const std::string& text, const char* flag) {
  if (text.empty()) throw ConfigError(std::string(flag) + " is required");
  Vec p = parse_point(text);
  if (p.size() != e.structure.dim())
    throw ConfigError(std::string(flag) + " needs " + std::to_string(e.structure.dim()) +
                      " coordinates");
  return p;
}

std::vector<double> list_arg(const std::string& text) {
  const Vec v = parse_point(text);
  return {v.data(), v.data() + v.size()};
}

Direction direction_arg(const std::string& d) {
  if (d == "fut" || d == "future") return Direction::Future;
  if (d == "past") return Direction::Past;
  throw ConfigError("--direction must be fut or past");
}

/// "lo1,lo2,...:hi1,hi2,..."
Box box_arg(const RegistryEntry& e, const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("--box must look like lo,...:hi,...");
  const Vec lo = point_arg(e, text.substr(0, colon), "--box");
  const Vec hi = point_arg(e, text.substr(colon + 1), "--box");
  return Box(lo, hi);
}

ReachConfig reach_config(const Options& o, const RegistryEntry& e, Strictness s) {
  ReachConfig rc;
  rc.seed = o.seed;
  rc.threads = o.threads;
  rc.strictness = s;
  if (o.resolution) rc.resolution = *o.resolution;
  if (o.samples) rc.samples = *o.samples;
  if (o.horizon) rc.horizon = *o.horizon;
  if (o.relay) rc.relay_rounds = *o.relay;
  if (!o.box.empty()) rc.box = box_arg(e, o.box);
  rc.validate();
  return rc;
}

SeparationConfig separation_config(const Options& o, const RegistryEntry& e) {
  SeparationConfig sc;
  ReachConfig base = sc.reach;
  ReachConfig rc = reach_config(o, e, Strictness::Nonspacelike);
  // Keep the optimizer's own sampling defaults unless overridden.
  if (!o.samples) rc.samples = base.samples;
  if (!o.horizon) rc.horizon = base.horizon;
  if (!o.resolution) rc.resolution = base.resolution;
  sc.reach = rc;
  sc.validate();
  return sc;
}

TopologyConfig topology_config(const Options& o, const RegistryEntry& e) {
  TopologyConfig tc = TopologyConfig::from_entry(e);
  tc.seed = o.seed;
  tc.threads = o.threads;
  if (o.resolution) tc.resolution = *o.resolution;
  if (o.samples) tc.samples = *o.samples;
  if (o.horizon) tc.horizon = *o.horizon;
  if (o.relay) tc.relay_rounds = *o.relay;
  if (o.probes >= 0) tc.probes = o.probes;
  if (o.oracle) tc.closed_form = true;
  return tc;
}

ordered_json run_config(const std::string& sub, const Options& o) {
  ordered_json j;
  j["subcommand"] = sub;
  j["manifold"] = o.manifold;
  if (!o.manifold_file.empty()) j["manifold_file"] = o.manifold_file;
  if (o.manifold == "heisenberg_boost") j["phi"] = o.phi;
  j["seed"] = o.seed;
  j["threads"] = o.threads;
  j["resolution"] = o.resolution ? ordered_json(*o.resolution) : ordered_json();
  j["samples"] = o.samples ? ordered_json(*o.samples) : ordered_json();
  j["horizon"] = o.horizon ? ordered_json(*o.horizon) : ordered_json();
  j["relay"] = o.relay ? ordered_json(*o.relay) : ordered_json();
  j["format"] = o.format;
  j["strict"] = o.strict;
  ordered_json p;
  if (!o.point.empty()) p["point"] = o.point;
  if (!o.vector.empty()) p["vector"] = o.vector;
  if (sub == "reach" || sub == "outerball") p["direction"] = o.direction;
  if (sub == "reach") p["timelike"] = o.timelike;
  if (!o.from.empty()) p["from"] = o.from;
  if (!o.to.empty()) p["to"] = o.to;
  if (!o.center.empty()) p["center"] = o.center;
  if (sub == "outerball") {
    p["eps"] = o.eps;
    p["refine"] = o.refine;
  }
  if (sub == "topo") {
    p["families"] = o.families;
    p["oracle"] = o.oracle;
    p["probes"] = o.probes;
  }
  if (sub == "probe") p["radii"] = o.radii;
  if (sub == "transitivity") {
    p["triples"] = o.triples;
    p["per_point"] = o.per_point;
  }
  if (!o.box.empty()) p["box"] = o.box;
  j["parameters"] = p;
  return j;
}

/// Flattens a report into "json-pointer,value" rows.
std::string to_csv(const ordered_json& report) {
  std::ostringstream os;
  os << "key,value\n";
  const nlohmann::json flat = nlohmann::json(report).flatten();
  for (const auto& [k, v] : flat.items()) os << k << ',' << v.dump() << '\n';
  return os.str();
}

struct Result {
  ordered_json body;
  bool inconclusive = false;
};

Result cmd_classify(const Options& o, const RegistryEntry& e) {
  const Vec p = point_arg(e, o.point, "--point");
  // Frame coefficients, one per distribution vector.
  const Vec coeff = parse_point(o.vector);
  if (coeff.size() != e.structure.rank())
    throw ConfigError("--vector needs " + std::to_string(e.structure.rank()) + " coefficients");
  const CausalCharacter c = classify_vector(e.structure, p, coeff);
  Result r;
  r.body["point"] = format_point(p);
  r.body["coefficients"] = format_point(coeff);
  r.body["character"] = to_string(c.character);
  r.body["orientation"] = to_string(c.orientation);
  return r;
}

Result cmd_reach(const Options& o, const RegistryEntry& e, const fs::path& out) {
  const Vec p = point_arg(e, o.point, "--point");
  const ReachConfig rc =
      reach_config(o, e, o.timelike ? Strictness::Timelike : Strictness::Nonspacelike);
  const ReachGrid g = sample_reach_multi(e.structure, e.action_ptr(), p,
                                         direction_arg(o.direction), rc, {rc.resolution})
                          .front();
  const GridFiles files = write_grid(out, "reach", g);
  Result r;
  r.body["grid"] = grid_header(g);
  r.body["files"] = {files.header.filename().string(), files.cells_csv.filename().string()};
  r.body["slices"] = files.slices.size();
  return r;
}

Result cmd_tsep(const Options& o, const RegistryEntry& e, const fs::path& out) {
  const Vec p = point_arg(e, o.from, "--from");
  const Vec q = point_arg(e, o.to, "--to");
  const SeparationConfig sc = separation_config(o, e);
  const SeparationEstimate est = time_separation(e.structure, p, q, sc, Direction::Future,
                                                 e.action_ptr());
  Result r;
  r.body["estimate"] = est.to_json();
  if (est.curve) {
    std::ofstream csv(out / "tsep_curve.csv");
    write_curve_csv(csv, *est.curve);
    r.body["curve_csv"] = "tsep_curve.csv";
  }
  r.inconclusive = !est.reached || est.unbounded_suspected;
  return r;
}

Result cmd_outerball(const Options& o, const RegistryEntry& e, const fs::path& out) {
  const Vec c = point_arg(e, o.center, "--center");
  const SeparationConfig sc = separation_config(o, e);
  OuterBallOptions opts;
  opts.refine_frontier = o.refine;
  const ReachGrid g = outer_ball(e.structure, c, o.eps, direction_arg(o.direction), sc,
                                 e.action_ptr(), opts);
  const GridFiles files = write_grid(out, "outerball", g);
  Result r;
  r.body["grid"] = grid_header(g);
  r.body["files"] = {files.header.filename().string(), files.cells_csv.filename().string()};
  r.body["slices"] = files.slices.size();
  return r;
}

Result cmd_topo(const Options& o, const RegistryEntry& e) {
  std::vector<FamilyKind> kinds;
  std::stringstream ss(o.families);
  for (std::string item; std::getline(ss, item, ',');) kinds.push_back(family_kind_from_string(item));
  if (kinds.size() != 2) throw ConfigError("--families takes two names, e.g. alex,tau");
  const TopologyConfig tc = topology_config(o, e);
  const std::vector<Vec> anchors = probe_points(e, tc);

  std::optional<std::pair<SetFamily, SetFamily>> alexandrov;
  auto family = [&](FamilyKind k) -> SetFamily {
    if (k == FamilyKind::Alex || k == FamilyKind::AlexOpen) {
      if (!alexandrov) alexandrov = build_alexandrov_families(e, anchors, tc);
      return k == FamilyKind::Alex ? alexandrov->first : alexandrov->second;
    }
    return build_family(e, k, anchors, tc);
  };
  const SetFamily a = family(kinds[0]);
  const SetFamily b = family(kinds[1]);

  Result r;
  r.body["topology_config"] = tc.to_json();
  r.body["config_digest"] = a.config_digest;
  r.body["anchors"] = anchors.size();
  ordered_json comps = ordered_json::array();
  for (const auto& [coarse, fine] : {std::pair(&a, &b), std::pair(&b, &a)}) {
    const RefinementResult res = refinement_witness(*coarse, *fine);
    if (res.verdict() == "inconclusive") r.inconclusive = true;
    comps.push_back(res.to_json());
  }
  r.body["refinement"] = comps;
  if (!e.documented_points.empty()) {
    ordered_json seps;
    for (const SetFamily* f : {&a, &b}) {
      const SeparationMatrix m = separation_matrix(e.documented_points, *f);
      seps[std::string(to_string(f->kind))] = m.to_json();
    }
    r.body["separation"] = seps;
  }
  return r;
}

Result cmd_probe(const Options& o, const RegistryEntry& e) {
  const Vec p = point_arg(e, o.point, "--point");
  ReachConfig rc = reach_config(o, e, Strictness::Nonspacelike);
  if (!o.samples) rc.samples = 10000;
  const NeighbourhoodFamily nbhd = e.neighbourhood ? e.neighbourhood : box_neighbourhoods();
  const StrongCausalityReport rep =
      strong_causality_probe(e.structure, e.action_ptr(), nbhd, p, list_arg(o.radii), rc,
                             e.probe_curves);
  Result r;
  r.body["report"] = rep.to_json();
  r.body["verdict"] = rep.violated() ? kViolated : kNoViolation;
  return r;
}

Result cmd_ctc(const Options& o, const RegistryEntry& e) {
  ReachConfig rc = reach_config(o, e, Strictness::Timelike);
  std::vector<Vec> starts;
  if (!o.point.empty()) {
    starts.push_back(point_arg(e, o.point, "--point"));
  } else {
    if (e.action)
      for (const DocumentedLoop& l : e.action->documented_loops) starts.push_back(l.start);
    for (const Vec& p : e.documented_points) starts.push_back(p);
    if (starts.empty()) starts.push_back(e.structure.domain().center());
  }
  Result r;
  r.body["points"] = ordered_json::array();
  for (const Vec& p : starts) r.body["points"].push_back(format_point(p));
  for (const Vec& p : starts) {
    if (auto w = find_closed_causal(e.structure, e.action_ptr(), p, rc)) {
      r.body["found"] = true;
      r.body["point"] = format_point(p);
      r.body["witness"] = w->to_json();
      return r;
    }
  }
  r.body["found"] = false;
  r.body["verdict"] = kNoViolation;
  r.inconclusive = true;
  return r;
}

Result cmd_hierarchy(const Options& o, const RegistryEntry& e) {
  ReachConfig rc = reach_config(o, e, Strictness::Timelike);
  Result r;
  r.body["report"] = hierarchy_report(e, rc).to_json();
  return r;
}

Result cmd_transitivity(const Options& o, const RegistryEntry& e) {
  ReachConfig rc = reach_config(o, e, Strictness::Timelike);
  if (!o.horizon) rc.horizon = e.topology.horizon;
  const TransitivityReport rep = transitivity_check(e, rc, o.triples, o.per_point, true);
  Result r;
  r.body["report"] = rep.to_json();
  return r;
}

Result cmd_registry_list() {
  Result r;
  r.body["entries"] = ordered_json::array();
  for (const std::string& n : registry_names()) {
    const RegistryEntry e = get_structure(n);
    ordered_json j;
    j["name"] = e.name;
    j["description"] = e.description;
    j["provenance"] = e.provenance;
    j["dim"] = e.structure.dim();
    j["rank"] = e.structure.rank();
    j["quotient"] = e.action.has_value();
    j["expected"] = {{"chronological", e.expected.chronological},
                     {"strongly_causal", e.expected.strongly_causal},
                     {"chronologically_open", e.expected.chronologically_open},
                     {"topology", e.expected.topology}};
    r.body["entries"].push_back(j);
  }
  return r;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  try {
    o.seed = env_seed();
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitError;
  }

  CLI::App app{"Reachability, time separation and topology probes for sub-Lorentzian structures",
               "causalreach"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--manifold,-m", o.manifold, "Registry entry (see `registry list`)");
  app.add_option("--manifold-file", o.manifold_file, "JSON structure definition");
  app.add_option("--phi", o.phi, "Boost parameter of heisenberg_boost");
  app.add_option("--seed", o.seed, "Seed (default: CAUSALREACH_SEED or 1)");
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("--strict", o.strict, "Exit 2 when the verdict is inconclusive");
  app.add_option("--resolution", o.resolution, "Grid cells per axis");
  app.add_option("--samples", o.samples, "Sampled trajectories");
  app.add_option("--horizon", o.horizon, "Trajectory duration");
  app.add_option("--relay", o.relay, "Relay sampling rounds");
  app.add_option("--box", o.box, "Grid box lo,...:hi,...");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  auto* classify = app.add_subcommand("classify", "Causal character of a frame vector");
  classify->add_option("--point", o.point)->required();
  classify->add_option("--vector", o.vector, "Frame coefficients")->required();

  auto* reach = app.add_subcommand("reach", "Reach grid from a point");
  reach->add_option("--point", o.point)->required();
  reach->add_option("--direction", o.direction)->check(CLI::IsMember({"fut", "past"}));
  reach->add_flag("--timelike", o.timelike);

  auto* tsep = app.add_subcommand("tsep", "Time separation estimate");
  tsep->add_option("--from", o.from)->required();
  tsep->add_option("--to", o.to)->required();

  auto* ob = app.add_subcommand("outerball", "Outer ball grid");
  ob->add_option("--center", o.center)->required();
  ob->add_option("--eps", o.eps)->check(CLI::PositiveNumber);
  ob->add_option("--direction", o.direction)->check(CLI::IsMember({"fut", "past"}));
  ob->add_flag("--refine", o.refine, "Optimize frontier cells");

  auto* topo = app.add_subcommand("topo", "Refinement and separation of two set families");
  topo->add_option("--families", o.families, "Two of tau, alex, alexopen, tsep");
  topo->add_option("--probes", o.probes, "Seeded anchors");
  topo->add_flag("--oracle", o.oracle, "Closed-form Alexandrov sets when available");

  auto* probe = app.add_subcommand("probe", "Strong-causality probe");
  probe->add_option("--point", o.point)->required();
  probe->add_option("--radii", o.radii);

  auto* ctc = app.add_subcommand("ctc", "Closed causal curve search");
  ctc->add_option("--point", o.point);

  auto* hier = app.add_subcommand("hierarchy", "Causal hierarchy report");
  auto* trans = app.add_subcommand("transitivity", "Opened-relation transitivity check");
  trans->add_option("--triples", o.triples);
  trans->add_option("--per-point", o.per_point);

  auto* reg = app.add_subcommand("registry", "Registry queries");
  reg->require_subcommand(1);
  auto* reg_list = reg->add_subcommand("list", "Entries with expected verdicts");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    std::ostringstream o_, e_;
    const int code = app.exit(ex, o_, e_);
    out << o_.str();
    err << e_.str();
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    std::string name = sub->get_name();
    if (sub == reg) name = "registry list";
    const fs::path dir(o.out);
    Result res;
    if (reg_list->parsed()) {
      res = cmd_registry_list();
    } else {
      const RegistryEntry e = load_entry(o);
      const bool writes = sub == reach || sub == tsep || sub == ob;
      if (writes) fs::create_directories(dir);
      if (sub == classify) res = cmd_classify(o, e);
      else if (sub == reach) res = cmd_reach(o, e, dir);
      else if (sub == tsep) res = cmd_tsep(o, e, dir);
      else if (sub == ob) res = cmd_outerball(o, e, dir);
      else if (sub == topo) res = cmd_topo(o, e);
      else if (sub == probe) res = cmd_probe(o, e);
      else if (sub == ctc) res = cmd_ctc(o, e);
      else if (sub == hier) res = cmd_hierarchy(o, e);
      else if (sub == trans) res = cmd_transitivity(o, e);
    }
    ordered_json report;
    report["run_config"] = run_config(name, o);
    report["config_digest"] = hex_digest(report["run_config"].dump());
    report["inconclusive"] = res.inconclusive;
    report["result"] = std::move(res.body);

    const std::string text = o.format == "csv" ? to_csv(report) : report.dump(2) + "\n";
    out << text;
    if (!reg_list->parsed()) {
      fs::create_directories(dir);
      std::string stem = name;
      std::ofstream f(dir / (stem + "_report." + o.format));
      f << text;
    }
    return o.strict && res.inconclusive ? kExitInconclusive : kExitOk;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitError;
  }
}

}  // namespace causalreach::cli
