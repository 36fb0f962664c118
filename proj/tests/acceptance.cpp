// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "oracles.hpp"
#include "tripscope/fixtures.hpp"
#include "tripscope/pipeline.hpp"

using namespace tripscope;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& f) {
  Outcome o;
  try {
    o = f();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RouteSet members(const std::string& label, long n) {
  RouteSet rs;
  rs.route_id = rs.label = label;
  for (long i = 0; i < n; ++i) rs.members.push_back(label + std::to_string(i));
  return rs;
}

// ---------------------------------------------------------------------------

Outcome route_share_table_case() {
  const auto t0 = Clock::now();
  const auto fx = fixtures::case1_fixture();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const AnalysisResult r = analyze(net, fx.trips, fx.queries.front().second);
  const double secs = seconds_since(t0);

  const auto want = fixtures::case1_route_counts();
  const std::vector<std::string> display{"94%", "4%", "0.9%", "0.5%", "0.5%", "0.2%"};
  bool ok = r.shares.total == 585 && r.shares.rows.size() == want.size();
  std::string got;
  for (std::size_t i = 0; ok && i < want.size(); ++i) {
    const auto& row = r.shares.rows[i];
    ok = row.label == want[i].first && row.trips == want[i].second && row.display == display[i];
  }
  for (const auto& row : r.shares.rows) got += std::to_string(row.trips) + "/" + row.display + " ";
  ok = ok && secs < 10.0;
  return {ok, got + "total " + std::to_string(r.shares.total) + fmt(", %.2f s (limit 10 s)", secs)};
}

Outcome travel_time_case() {
  const auto fx = fixtures::case2_fixture();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const std::vector<std::map<std::string, double>> want{
      {{"EB US-50", 42}, {"EB Skidmore Road", 16}, {"EB College Pkwy", 14}},
      {{"EB US-50", 25}, {"EB Skidmore Road", 22}}};
  bool ok = fx.queries.size() == want.size();
  std::string detail;
  for (std::size_t k = 0; ok && k < want.size(); ++k) {
    const auto r = analyze(net, fx.trips, fx.queries[k].second);
    ok = r.travel_times.rows.size() == want[k].size();
    for (const auto& row : r.travel_times.rows) {
      auto it = want[k].find(row.label);
      ok = ok && it != want[k].end() && std::abs(row.mean_minutes - it->second) <= 0.1;
      detail += fmt("%.2f ", row.mean_minutes);
    }
    detail += k == 0 ? "| " : "";
  }
  return {ok, detail + "min (tolerance 0.1)"};
}

Outcome period_comparison_case() {
  const std::vector<RouteSet> a{members("I-95", 62), members("US-50", 28), members("other", 10)};
  const std::vector<RouteSet> b{members("I-95", 36), members("US-50", 44), members("other", 20)};
  const auto c = compare_periods(route_share_table(a), route_share_table(b));
  std::map<std::string, std::string> d;
  std::map<std::string, double> v;
  for (const auto& r : c.rows) {
    d[r.label] = format_delta_pp(r.delta_pp);
    v[r.label] = r.delta_pp;
  }
  const bool ok = v["I-95"] == -26.0 && v["US-50"] == 16.0 && d["I-95"] == "-26 pp" && d["US-50"] == "+16 pp";
  return {ok, "I-95 " + d["I-95"] + ", US-50 " + d["US-50"]};
}

Outcome avoid_share_case() {
  const auto fx = fixtures::case1_fixture();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const AnalysisResult r = analyze(net, fx.trips, fx.queries.front().second);
  const auto s = avoid_share(r.hourly, {8, 15}, {"Eisenhower Memorial Highway, I-270", "Hyattstown South TWIS"});
  const bool ok = s.avoiding == 12 && s.total == 33 && format_percent(s.percent) == "36%";
  return {ok, std::to_string(s.avoiding) + " of " + std::to_string(s.total) + " = " + format_percent(s.percent)};
}

Outcome pearson_suite() {
  const std::vector<double> x{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1};
  bool ok = *pearson_r(x, up) == 1.0 && *pearson_r(x, down) == -1.0;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-1e3, 1e3), mix(-1.0, 1.0);
  std::uniform_int_distribution<int> len(2, 60);
  double worst_formula = 0, worst_affine = 0, worst_flip = 0;
  bool bounded = true;
  int undefined = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = len(rng);
    const double rho = mix(rng);
    std::vector<double> a(n), b(n), aff(n), neg(n);
    for (int k = 0; k < n; ++k) {
      a[k] = nd(rng) * 50 + 200;
      b[k] = rho * a[k] + nd(rng) * 30;
    }
    const double s = scale(rng), c = shift(rng);
    for (int k = 0; k < n; ++k) {
      aff[k] = s * a[k] + c;
      neg[k] = -s * a[k] + c;
    }
    const auto r = pearson_r(a, b);
    const auto o = oracle::pearson(a, b);
    if (!r || !o) {
      ok = ok && !r && !o;
      ++undefined;
      continue;
    }
    bounded = bounded && std::abs(*r) <= 1.0;
    worst_formula = std::max(worst_formula, std::abs(*r - *o));
    worst_affine = std::max(worst_affine, std::abs(*pearson_r(aff, b) - *r));
    worst_flip = std::max(worst_flip, std::abs(*pearson_r(neg, b) + *r));
  }
  ok = ok && bounded && worst_formula <= 1e-12 && worst_affine <= 1e-12 && worst_flip <= 1e-12;
  char buf[200];
  std::snprintf(buf, sizeof buf, "10^4 series: |r|<=1 %s, max dev formula %.1e affine %.1e negation %.1e (limit 1e-12)",
                bounded ? "yes" : "no", worst_formula, worst_affine, worst_flip);
  return {ok, buf};
}

Outcome validation_at_scale() {
  const auto t0 = Clock::now();
  std::string detail = "median r per seed:";
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sc = fixtures::station_scenario(seed);
    const RoadNetwork net = RoadNetwork::build(sc.network);
    const auto out = synth::generate(sc.spec, net);
    ValidationRequest req;
    req.station_id = sc.station_id;
    req.gate = sc.gate_document.gates.front();
    req.sign = 1;
    req.timezone = sc.spec.timezone;
    req.cmv_classes = {sc.spec.cmv_class_codes.begin(), sc.spec.cmv_class_codes.end()};
    const auto v = validate_station(out.trips, out.counts, req);
    ok = ok && v.box.n >= 52 && v.box.median > 0.75;
    detail += fmt(" %.3f", v.box.median) + "(" + std::to_string(v.box.n) + "w)";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 60.0;
  return {ok, detail + fmt(", %.1f s (floor 0.75, limit 60 s)", secs)};
}

Outcome gate_oracle_equivalence() {
  const RoadNetwork net = RoadNetwork::build(synth::grid5x5());
  std::vector<Trip> trips;
  for (auto& lt : fixtures::lattice_trips(net, 5, 5, 1000, 1, 8, {0, 0, 13.0, 8.0, 10.0}, 41))
    trips.push_back(std::move(lt.trip));
  const LocalFrame f({39.0, -77.0});
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> xy(-100.0, 900.0);
  std::vector<Gate> gates;
  for (int i = 0; i < 20; ++i) {
    Gate g{"g" + std::to_string(i), {}, i % 2 ? CrossingSense::right_to_left : CrossingSense::left_to_right};
    const int nv = 2 + i % 3;
    for (int k = 0; k < nv; ++k) g.line.push_back(f.unproject({xy(rng), xy(rng)}));
    gates.push_back(std::move(g));
  }
  std::size_t crossings = 0, mismatched = 0;
  for (const auto& g : gates)
    for (const auto& t : trips) {
      const auto got = detect_crossings(t, g);
      crossings += got.size();
      mismatched += got != oracle::crossings(t, g);
    }
  std::size_t selected = 0, queries = 0, bad_queries = 0;
  std::uniform_int_distribution<int> pick(0, 19), len(1, 3), coin(0, 1);
  for (int round = 0; round < 40; ++round, ++queries) {
    TripQuery q;
    for (int k = len(rng); k-- > 0;) q.gate_sequence.push_back({gates[pick(rng)].gate_id, coin(rng) ? 1 : -1});
    q.require_order = round % 5 != 4;
    if (round % 3 == 0) {
      const Instant s = trips.front().waypoints.front().t + Millis{static_cast<long long>(rng() % 5000000)};
      q.time_window = TimeWindow{s, s + Millis{2000000}};
    }
    if (round % 4 == 0)
      q.study_area = StudyArea{{f.unproject({0, 0}), f.unproject({600, 100}), f.unproject({500, 600}),
                                f.unproject({50, 500}), f.unproject({0, 0})}};
    const TripSet got = filter_trips(trips, gates, q);
    TripSet want;
    for (const auto& t : trips)
      if (auto p = oracle::evaluate(t, gates, q)) want.push_back(*p);
    selected += got.size();
    bad_queries += got != want;
  }
  const bool ok = mismatched == 0 && bad_queries == 0 && crossings > 0 && selected > 0;
  return {ok, "1000 trips x 20 gates: " + std::to_string(crossings) + " crossings, " + std::to_string(mismatched) +
                  " mismatched pairs; " + std::to_string(queries) + " queries selecting " + std::to_string(selected) +
                  " trips, " + std::to_string(bad_queries) + " differ"};
}

Outcome matcher_fidelity() {
  const RoadNetwork net = RoadNetwork::build(synth::grid5x5());
  const auto lts = fixtures::lattice_trips(net, 5, 5, 500, 2, 8, {0, 0, 12.0, 10.0, 5.0}, 101);
  std::size_t observed = 0, agree = 0, truth_total = 0, recovered = 0, rejected = 0;
  for (const auto& lt : lts) {
    const auto r = match_trip(lt.trip, net, {});
    truth_total += lt.path.size();
    if (!std::holds_alternative<MatchedTrip>(r)) {
      ++rejected;
      continue;
    }
    const auto& m = std::get<MatchedTrip>(r);
    const std::set<SegmentIndex> truth(lt.path.begin(), lt.path.end());
    std::set<SegmentIndex> got;
    for (const auto& s : m.path) {
      got.insert(s.segment);
      if (s.inferred) continue;
      ++observed;
      agree += truth.count(s.segment);
    }
    for (SegmentIndex s : truth) recovered += got.count(s);
  }
  const double frac = observed ? static_cast<double>(agree) / static_cast<double>(observed) : 0.0;
  const double recall = static_cast<double>(recovered) / static_cast<double>(truth_total);
  const bool ok = frac >= 0.99 && rejected == 0;
  return {ok, fmt("non-inferred agreement %.4f", frac) + fmt(" (floor 0.99), path recall %.4f", recall) +
                  ", rejected " + std::to_string(rejected)};
}

Outcome folding_robustness() {
  const RoadNetwork net = RoadNetwork::build(synth::grid5x5());
  std::vector<Trip> pristine;
  for (auto& lt : fixtures::lattice_trips(net, 5, 5, 500, 3, 8, {0, 0, 12.0, 10.0, 5.0}, 202))
    pristine.push_back(std::move(lt.trip));
  const auto degraded = synth::degrade(pristine, 0.3, 7);
  auto signatures = [&](const std::vector<Trip>& trips, const std::string& prefix) {
    std::map<std::string, RouteSignature> out;
    for (const auto& m : match_corpus(trips, net, {}).matched) {
      RouteSignature s{prefix + m.trip_id, {}, 0.0};
      for (const auto& step : m.path) {
        s.segs.push_back(step.segment);
        s.length_m += net.segment(step.segment).length_m;
      }
      out.emplace(m.trip_id, std::move(s));
    }
    return out;
  };
  const auto a = signatures(pristine, "P:");
  const auto b = signatures(degraded, "D:");
  std::vector<RouteSignature> all;
  for (const auto& [id, s] : a) all.push_back(s);
  for (const auto& [id, s] : b) all.push_back(s);
  std::map<std::string, std::string> set_of;
  for (const auto& rs : fold_routes(all, 0.9, net))
    for (const auto& m : rs.members) set_of[m] = rs.route_id;
  std::size_t twins = 0, together = 0;
  for (const auto& t : pristine) {
    ++twins;
    auto pa = set_of.find("P:" + t.trip_id), pb = set_of.find("D:" + t.trip_id);
    together += pa != set_of.end() && pb != set_of.end() && pa->second == pb->second;
  }
  const double frac = static_cast<double>(together) / static_cast<double>(twins);
  return {frac >= 0.95, fmt("%.4f", frac) + " of " + std::to_string(twins) + " twins share a route set at 30% drop (floor 0.95)"};
}

Outcome performance() {
  const RoadNetwork net = RoadNetwork::build(fixtures::perf_network());
  const auto trips = fixtures::perf_trips(net, 10000);
  std::size_t fixes = 0;
  for (const auto& t : trips) fixes += t.waypoints.size();
  const QueryDocument doc = fixtures::perf_query();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  auto pipeline = [&](unsigned threads, double& secs) {
    const auto t0 = Clock::now();
    const CorpusMatch cm = match_corpus(trips, net, {}, threads);
    const AnalysisResult r = analyze(net, trips, doc, {}, threads, &cm.matched);
    std::string body = report_to_json(r, net).dump();
    secs = seconds_since(t0);
    return std::make_pair(std::move(body), r.trip_set.size());
  };
  double s1 = 0, s4 = 0;
  const auto one = pipeline(1, s1);
  const auto four = pipeline(4, s4);
  const bool same = one.first == four.first;
  const bool ok = same && s1 < 60.0 && s4 < 60.0 && one.second > 0;
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "%zu trips, %zu fixes, %zu segments, %zu selected: 1 worker %.1f s, 4 workers %.1f s "
                "(%u cores, limit 60 s), outputs %s",
                trips.size(), fixes, net.segment_count(), one.second, s1, s4, hw, same ? "identical" : "DIFFER");
  return {ok, buf};
}

}  // namespace

int main() {
  report("table2-route-shares", route_share_table_case);
  report("table3-travel-times", travel_time_case);
  report("period-comparison-deltas", period_comparison_case);
  report("hourly-avoid-share", avoid_share_case);
  report("pearson-suite", pearson_suite);
  report("validation-at-scale", validation_at_scale);
  report("gate-oracle-equivalence", gate_oracle_equivalence);
  report("matcher-fidelity", matcher_fidelity);
  report("folding-robustness", folding_robustness);
  report("performance", performance);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
