// tripscope command-line front end.
//
// Exit codes:
//   0  success
//   1  unexpected failure
//   2  usage error (unknown flag, missing required flag)
//   3  missing or unreadable file
//   4  malformed input or schema violation
//   5  analysis error (unknown gate or segment, no overlapping dates)

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <absl/time/clock.h>

#include "tripscope/fixtures.hpp"
#include "tripscope/pipeline.hpp"
#include "tripscope/service.hpp"
#include "tripscope/synth.hpp"

namespace fs = std::filesystem;
using namespace tripscope;
using nlohmann::json;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::io: return 3;
    case ErrorKind::parse:
    case ErrorKind::referential:
    case ErrorKind::geometry:
    case ErrorKind::conflict:
    case ErrorKind::mixed_station:
    case ErrorKind::invalid_argument: return 4;
    case ErrorKind::unknown_gate:
    case ErrorKind::unknown_segment:
    case ErrorKind::no_overlap: return 5;
  }
  return 1;
}

struct Options {
  std::string network, trips, gates, counts, matched, out = ".";
  std::string fixture, scenario, station, a, b, gate, config;
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double theta = -1.0;
  std::string tz;
  std::string cmv_classes = "5,6,7,8,9,10,11,12,13";
  int sign = 1;
  MatchParams match;
};

unsigned worker_count(const Options& o) {
  if (o.threads > 0) return o.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
  out << text;
}

template <class F>
void write_with(const fs::path& p, F&& f) {
  std::ostringstream ss;
  f(ss);
  write_text(p, ss.str());
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

QueryDocument load_query(const Options& o) {
  QueryDocument doc = parse_query_document(read_file(o.gates));
  if (o.theta >= 0.0) {
    if (!(o.theta > 0.0 && o.theta <= 1.0)) throw Error(ErrorKind::invalid_argument, "--theta must lie in (0, 1]");
    doc.theta = o.theta;
  }
  if (!o.tz.empty()) {
    load_zone(o.tz);
    doc.timezone = o.tz;
  }
  return doc;
}

std::set<int> parse_class_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.insert(static_cast<int>(parse_int(part, "cmv class")));
  if (out.empty()) throw Error(ErrorKind::invalid_argument, "--cmv-classes must name at least one class");
  return out;
}

/// Manifest beside every output set: what went in, with which parameters.
void write_manifest(const fs::path& dir, const std::string& command, const Options& o,
                    const std::vector<std::pair<std::string, std::string>>& inputs, const json& params) {
  json in = json::array();
  for (const auto& [role, path] : inputs) {
    if (path.empty()) continue;
    in.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(read_file(path))}});
  }
  json m = {{"tool", "tripscope"},
            {"version", TRIPSCOPE_VERSION},
            {"command", command},
            {"inputs", in},
            {"parameters", params},
            {"seed", o.seed},
            {"created", absl::FormatTime(absl::RFC3339_sec, absl::Now(), absl::UTCTimeZone())}};
  write_text(dir / "manifest.json", json_text(m));
}

json match_params_json(const MatchParams& p) {
  return report_inputs("", "", p).at("match_parameters");
}

// ---------------------------------------------------------------------------

void write_fixture(const fixtures::Fixture& fx, const fs::path& dir) {
  fs::create_directories(dir);
  write_network(fx.network, (dir / "network.geojson").string());
  const RoadNetwork net = RoadNetwork::build(fx.network);
  write_with(dir / "trips.csv", [&](std::ostream& os) { write_trips(os, fx.trips); });
  write_with(dir / "ground_truth.csv", [&](std::ostream& os) { synth::write_ground_truth(os, fx.truth, net); });
  for (const auto& [stem, doc] : fx.queries) write_text(dir / (stem + ".json"), json_text(query_to_json(doc)));
}

void write_scenario(const NetworkRecords& records, const synth::ScenarioOutput& out, const fs::path& dir,
                    const QueryDocument* gate_doc, unsigned) {
  fs::create_directories(dir);
  write_network(records, (dir / "network.geojson").string());
  const RoadNetwork net = RoadNetwork::build(records);
  write_with(dir / "trips.csv", [&](std::ostream& os) { write_trips(os, out.trips); });
  write_with(dir / "ground_truth.csv", [&](std::ostream& os) { synth::write_ground_truth(os, out.truth, net); });
  if (!out.counts.empty()) write_with(dir / "counts.csv", [&](std::ostream& os) { write_counts(os, out.counts); });
  for (const auto& s : out.station_daily)
    write_with(dir / ("daily_" + s.station_id + ".csv"), [&](std::ostream& os) { write_daily_series(os, s); });
  if (gate_doc) write_text(dir / "station_gate.json", json_text(query_to_json(*gate_doc)));
}

int cmd_synth(const Options& o) {
  const fs::path dir = o.out;
  const unsigned threads = worker_count(o);
  if (!o.scenario.empty()) {
    const json j = [&] {
      try {
        return json::parse(read_file(o.scenario));
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, std::string("scenario is not valid JSON: ") + e.what());
      }
    }();
    synth::ScenarioSpec spec = synth::scenario_from_json(j);
    spec.seed = o.seed;
    NetworkRecords records;
    const std::string src = !o.network.empty() ? o.network : j.value("network", std::string("grid5x5"));
    if (src == "grid5x5")
      records = synth::grid5x5();
    else
      records = parse_network_records(json::parse(read_file(src)));
    const RoadNetwork net = RoadNetwork::build(records);
    write_scenario(records, synth::generate(spec, net, threads), dir, nullptr, threads);
  } else if (o.fixture == "case1") {
    write_fixture(fixtures::case1_fixture(o.seed), dir);
  } else if (o.fixture == "case2") {
    write_fixture(fixtures::case2_fixture(o.seed), dir);
  } else if (o.fixture == "grid5x5") {
    const NetworkRecords rec = synth::grid5x5();
    const RoadNetwork net = RoadNetwork::build(rec);
    fixtures::Fixture fx;
    fx.network = rec;
    for (auto& lt : fixtures::lattice_trips(net, 5, 5, 500, 2, 8, {0, 0, 10.0, 5.0, 5.0}, o.seed)) {
      fx.truth.push_back({lt.trip.trip_id, "shortest", false, lt.trip.waypoints.front().t, lt.path, true});
      fx.trips.push_back(std::move(lt.trip));
    }
    write_fixture(fx, dir);
  } else if (o.fixture == "station") {
    const auto sc = fixtures::station_scenario(o.seed);
    const RoadNetwork net = RoadNetwork::build(sc.network);
    write_scenario(sc.network, synth::generate(sc.spec, net, threads), dir, &sc.gate_document, threads);
  } else if (o.fixture == "perf") {
    fixtures::Fixture fx;
    fx.network = fixtures::perf_network();
    const RoadNetwork net = RoadNetwork::build(fx.network);
    fx.trips = fixtures::perf_trips(net, 10000, o.seed);
    fx.queries.emplace_back("query", fixtures::perf_query());
    write_fixture(fx, dir);
  } else {
    throw Error(ErrorKind::invalid_argument,
                "synth needs --scenario or --fixture case1|case2|grid5x5|station|perf");
  }
  json params = {{"fixture", o.fixture}, {"scenario", o.scenario}};
  write_manifest(dir, "synth", o, {{"scenario", o.scenario}}, params);
  return 0;
}

int cmd_match(const Options& o) {
  const RoadNetwork net = load_network(o.network);
  const auto trips = parse_trips(o.trips);
  const CorpusMatch cm = match_corpus(trips, net, o.match, worker_count(o));
  const fs::path dir = o.out;
  write_with(dir / "matched.csv", [&](std::ostream& os) { write_matched(os, cm.matched, net); });
  write_with(dir / "rejected.csv", [&](std::ostream& os) {
    csv::write_record(os, {"trip_id", "reason"});
    for (const auto& r : cm.rejected) csv::write_record(os, {r.trip_id, std::string(to_string(r.reason))});
  });
  write_manifest(dir, "match", o, {{"network", o.network}, {"trips", o.trips}}, match_params_json(o.match));
  std::cerr << cm.matched.size() << " matched, " << cm.rejected.size() << " rejected\n";
  return 0;
}

int cmd_query(const Options& o) {
  const auto trips = parse_trips(o.trips);
  const QueryDocument doc = load_query(o);
  const TripSet ts = filter_trips(trips, doc.gates, doc.query, worker_count(o));
  const fs::path dir = o.out;
  write_text(dir / "tripset.json",
             json_text({{"query_id", query_id(doc)}, {"trip_count", ts.size()}, {"trips", trip_set_to_json(ts)}}));
  write_with(dir / "tripset.csv", [&](std::ostream& os) {
    csv::write_record(os, {"trip_id", "anchor", "gate", "t", "sign"});
    for (const auto& p : ts)
      for (const auto& c : p.chain)
        csv::write_record(os, {p.trip_id, format_instant(p.anchor), c.gate_id, format_instant(c.t),
                               std::to_string(c.sign)});
  });
  write_manifest(dir, "query", o, {{"trips", o.trips}, {"query", o.gates}}, {{"theta", doc.theta}});
  std::cerr << ts.size() << " trips\n";
  return 0;
}

struct Loaded {
  RoadNetwork net;
  std::vector<Trip> trips;
  QueryDocument doc;
  std::optional<std::vector<MatchedTrip>> matched;
  json inputs;
};

Loaded load_analysis(const Options& o) {
  const std::string net_text = read_file(o.network);
  const std::string trips_text = read_file(o.trips);
  std::istringstream tin(trips_text);
  Loaded l{parse_network(net_text), parse_trips(tin), load_query(o), std::nullopt, json()};
  if (!o.matched.empty()) {
    std::ifstream in(o.matched);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + o.matched + "'");
    l.matched = parse_matched(in, l.net);
  }
  l.inputs = report_inputs(sha256_hex(net_text), sha256_hex(trips_text), o.match);
  return l;
}

int cmd_fold(const Options& o) {
  const Loaded l = load_analysis(o);
  const AnalysisResult r =
      analyze(l.net, l.trips, l.doc, o.match, worker_count(o), l.matched ? &*l.matched : nullptr);
  const fs::path dir = o.out;
  write_text(dir / "routes.json", json_text({{"query_id", r.query_id},
                                              {"theta", l.doc.theta},
                                              {"route_sets", route_sets_to_json(r.route_sets, l.net)},
                                              {"empty_clips", r.empty_clips}}));
  write_manifest(dir, "fold", o,
                 {{"network", o.network}, {"trips", o.trips}, {"query", o.gates}, {"matched", o.matched}},
                 {{"theta", l.doc.theta}, {"match", match_params_json(o.match)}});
  std::cerr << r.route_sets.size() << " route sets from " << r.signatures.size() << " trips\n";
  return 0;
}

int cmd_report(const Options& o) {
  const Loaded l = load_analysis(o);
  const AnalysisResult r =
      analyze(l.net, l.trips, l.doc, o.match, worker_count(o), l.matched ? &*l.matched : nullptr);
  const fs::path dir = o.out;
  write_text(dir / "report.json", report_to_json(r, l.net, l.inputs).dump() + "\n");
  write_with(dir / "shares.csv", [&](std::ostream& os) { write_share_table(os, r.shares); });
  write_with(dir / "travel_times.csv", [&](std::ostream& os) { write_travel_times(os, r.travel_times); });
  write_with(dir / "hourly.csv", [&](std::ostream& os) { write_hourly(os, r.hourly); });
  write_manifest(dir, "report", o,
                 {{"network", o.network}, {"trips", o.trips}, {"query", o.gates}, {"matched", o.matched}},
                 {{"theta", l.doc.theta}, {"match", match_params_json(o.match)},
                  {"manifest_id", l.inputs.at("manifest_id")}});
  for (const auto& row : r.shares.rows) std::cout << row.label << "\t" << row.trips << "\t" << row.display << "\n";
  std::cout << "Total\t" << r.shares.total << "\n";
  return 0;
}

int cmd_validate(const Options& o) {
  const auto trips = parse_trips(o.trips);
  const auto counts = parse_counts(o.counts);
  const QueryDocument doc = load_query(o);
  ValidationRequest req;
  req.station_id = o.station;
  const std::string gate_id = o.gate.empty() ? doc.gates.front().gate_id : o.gate;
  auto it = std::find_if(doc.gates.begin(), doc.gates.end(), [&](const Gate& g) { return g.gate_id == gate_id; });
  if (it == doc.gates.end()) throw Error(ErrorKind::unknown_gate, "unknown gate '" + gate_id + "'");
  req.gate = *it;
  req.sign = o.sign;
  req.timezone = doc.timezone;
  req.cmv_classes = parse_class_list(o.cmv_classes);
  const ValidationResult v = validate_station(trips, counts, req, worker_count(o));
  const fs::path dir = o.out;
  write_text(dir / "validation.json", json_text(validation_to_json(v)));
  write_with(dir / "correlations.csv", [&](std::ostream& os) { write_correlations(os, v.weekly); });
  write_with(dir / "probe_daily.csv", [&](std::ostream& os) { write_daily_series(os, v.probe); });
  write_with(dir / "station_daily.csv", [&](std::ostream& os) { write_daily_series(os, v.truth); });
  write_manifest(dir, "validate", o, {{"trips", o.trips}, {"counts", o.counts}, {"gates", o.gates}},
                 {{"station", o.station}, {"gate", gate_id}, {"sign", o.sign}, {"cmv_classes", req.cmv_classes}});
  std::cout << "weeks " << v.box.n << " (undefined " << v.box.n_undefined << ", skipped "
            << v.weekly.skipped_weeks.size() << ")  median r " << format_fixed(v.box.median, 3) << "\n";
  return 0;
}

RouteShareTable shares_of_report(const std::string& path) {
  try {
    return shares_from_json(json::parse(read_file(path)).at("shares"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "'" + path + "' is not a report: " + e.what());
  }
}

int cmd_compare(const Options& o) {
  const ShareComparison c = compare_periods(shares_of_report(o.a), shares_of_report(o.b));
  const fs::path dir = o.out;
  write_text(dir / "comparison.json", json_text(comparison_to_json(c)));
  write_with(dir / "comparison.csv", [&](std::ostream& os) { write_comparison(os, c); });
  write_manifest(dir, "compare", o, {{"a", o.a}, {"b", o.b}}, json::object());
  for (const auto& r : c.rows) std::cout << r.label << "\t" << format_delta_pp(r.delta_pp) << "\n";
  return 0;
}

int cmd_serve(Options o) {
  ServiceConfig cfg;
  if (!o.config.empty()) {
    try {
      const json j = json::parse(read_file(o.config));
      cfg.network_path = j.value("network", "");
      cfg.trips_path = j.value("trips", "");
      cfg.counts_path = j.value("counts", "");
      cfg.bind = j.value("bind", cfg.bind);
      cfg.port = j.value("port", cfg.port);
      cfg.threads = j.value("threads", 0u);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, std::string("malformed service config: ") + e.what());
    }
  }
  if (!o.network.empty()) cfg.network_path = o.network;
  if (!o.trips.empty()) cfg.trips_path = o.trips;
  if (!o.counts.empty()) cfg.counts_path = o.counts;
  if (o.bind != "127.0.0.1" || cfg.bind.empty()) cfg.bind = o.bind;
  if (o.port != 8080) cfg.port = o.port;
  if (o.threads > 0 || cfg.threads == 0) cfg.threads = worker_count(o);
  cfg.match = o.match;
  if (cfg.network_path.empty() || cfg.trips_path.empty())
    throw Error(ErrorKind::invalid_argument, "serve needs a network and a trip corpus (flags or --config)");

  Service svc(cfg);
  httplib::Server srv;
  svc.attach(srv);
  std::cerr << "listening on " << cfg.bind << ":" << cfg.port << "\n";
  if (!srv.listen(cfg.bind, cfg.port)) throw Error(ErrorKind::io, "cannot bind " + cfg.bind);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe-trajectory route analytics: gate queries, route folding, detour and validation reports"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TRIPSCOPE_VERSION));
  Options o;

  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "Worker threads (default: hardware concurrency)");
  };
  auto add_match = [&](CLI::App* c) {
    c->add_option("--radius", o.match.candidate_radius_m, "Candidate search radius, meters")->capture_default_str();
    c->add_option("--sigma", o.match.emission_sigma_m, "GPS noise scale, meters")->capture_default_str();
    c->add_option("--gap-ratio", o.match.max_gap_fill_ratio, "Max network/straight distance ratio between fixes")
        ->capture_default_str();
  };
  auto add_query = [&](CLI::App* c) {
    c->add_option("--gates", o.gates, "Query document (gates, sequence, study area)")->required();
    c->add_option("--theta", o.theta, "Fold threshold, overrides the document");
    c->add_option("--tz", o.tz, "IANA time zone, overrides the document");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus or a bundled fixture");
  synth->add_option("--fixture", o.fixture, "case1 | case2 | grid5x5 | station | perf");
  synth->add_option("--scenario", o.scenario, "Scenario JSON document");
  synth->add_option("--network", o.network, "Network for --scenario (default: the scenario's own)");
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->capture_default_str();
  add_threads(synth);

  auto* match = app.add_subcommand("match", "Map-match trips to the network");
  match->add_option("--network", o.network, "Network GeoJSON")->required();
  match->add_option("--trips", o.trips, "Trip CSV")->required();
  match->add_option("--out", o.out, "Output directory")->capture_default_str();
  add_threads(match);
  add_match(match);

  auto* query = app.add_subcommand("query", "Select trips with a gate query");
  query->add_option("--trips", o.trips, "Trip CSV")->required();
  query->add_option("--out", o.out, "Output directory")->capture_default_str();
  add_query(query);
  add_threads(query);

  auto* fold = app.add_subcommand("fold", "Fold selected trips into route sets");
  auto* report = app.add_subcommand("report", "Route shares, travel times and hourly counts");
  for (auto* c : {fold, report}) {
    c->add_option("--network", o.network, "Network GeoJSON")->required();
    c->add_option("--trips", o.trips, "Trip CSV")->required();
    c->add_option("--matched", o.matched, "Matched-trip CSV from 'match' (skips matching)");
    c->add_option("--out", o.out, "Output directory")->capture_default_str();
    add_query(c);
    add_threads(c);
    add_match(c);
  }

  auto* validate = app.add_subcommand("validate", "Weekly probe-vs-station correlations");
  validate->add_option("--trips", o.trips, "Trip CSV")->required();
  validate->add_option("--counts", o.counts, "Station count records CSV")->required();
  validate->add_option("--station", o.station, "Station id")->required();
  validate->add_option("--gates", o.gates, "Document holding the station gate")->required();
  validate->add_option("--gate", o.gate, "Gate id (default: first gate)");
  validate->add_option("--sign", o.sign, "Required crossing sign")->capture_default_str();
  validate->add_option("--tz", o.tz, "IANA time zone, overrides the document");
  validate->add_option("--cmv-classes", o.cmv_classes, "Comma-separated class codes counted as CMV")
      ->capture_default_str();
  validate->add_option("--out", o.out, "Output directory")->capture_default_str();
  add_threads(validate);

  auto* compare = app.add_subcommand("compare", "Route-share deltas between two reports");
  compare->add_option("--a", o.a, "Report JSON of the first period")->required();
  compare->add_option("--b", o.b, "Report JSON of the second period")->required();
  compare->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve->add_option("--config", o.config, "Service config JSON");
  serve->add_option("--network", o.network, "Network GeoJSON");
  serve->add_option("--trips", o.trips, "Trip CSV");
  serve->add_option("--counts", o.counts, "Station count records CSV");
  serve->add_option("--bind", o.bind, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port")->capture_default_str();
  add_threads(serve);
  add_match(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    o.match.validate();
    if (*synth) return cmd_synth(o);
    if (*match) return cmd_match(o);
    if (*query) return cmd_query(o);
    if (*fold) return cmd_fold(o);
    if (*report) return cmd_report(o);
    if (*validate) return cmd_validate(o);
    if (*compare) return cmd_compare(o);
    if (*serve) return cmd_serve(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io_error): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
