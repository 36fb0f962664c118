#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "tripscope/fixtures.hpp"
#include "tripscope/pipeline.hpp"

using namespace tripscope;

namespace {

const RoadNetwork& grid() {
  static const RoadNetwork net = RoadNetwork::build(synth::grid5x5());
  return net;
}

std::vector<SegmentIndex> segs(const RoadNetwork& net, std::initializer_list<const char*> ids) {
  std::vector<SegmentIndex> out;
  for (const char* id : ids) out.push_back(net.segment_index(id));
  return out;
}

RouteSignature sig(std::string id, std::vector<SegmentIndex> s, const RoadNetwork& net) {
  RouteSignature r{std::move(id), std::move(s), 0.0};
  for (SegmentIndex x : r.segs) r.length_m += net.segment(x).length_m;
  return r;
}

RouteSet members(const std::string& label, long n) {
  RouteSet rs;
  rs.route_id = label;
  rs.label = label;
  for (long i = 0; i < n; ++i) rs.members.push_back(label + "-" + std::to_string(i));
  return rs;
}

std::vector<std::vector<SegmentIndex>> random_paths(std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<SegmentIndex>> out;
  for (auto& lt : fixtures::lattice_trips(grid(), 5, 5, n, 1, 8, {}, seed)) out.push_back(lt.path);
  return out;
}

const AnalysisResult& case1() {
  static const AnalysisResult r = [] {
    const auto fx = fixtures::case1_fixture();
    return analyze(RoadNetwork::build(fx.network), fx.trips, fx.queries.front().second);
  }();
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Signatures and similarity

TEST(Routes, SignatureClipsToCrossingSpan) {
  const auto& net = grid();
  MatchedTrip mt{"t", {}, 0.0};
  const Instant t0 = parse_instant("2022-04-11T10:00:00Z");
  const auto path = segs(net, {"h2_0:f", "h2_1:f", "h2_2:f", "h2_3:f", "v2_4:f", "v3_4:f"});
  for (std::size_t i = 0; i < path.size(); ++i)
    mt.path.push_back({path[i], t0 + Millis{static_cast<long long>(i) * 60000},
                       t0 + Millis{static_cast<long long>(i + 1) * 60000}, false});

  std::vector<GateCrossing> whole{{"t", "a", t0, 1}, {"t", "b", t0 + Millis{360000}, 1}};
  EXPECT_EQ(extract_signature(mt, whole, net)->segs, path);

  std::vector<GateCrossing> middle{{"t", "a", t0 + Millis{150000}, 1}, {"t", "b", t0 + Millis{210000}, 1}};
  const auto s = extract_signature(mt, middle, net);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->segs, segs(net, {"h2_2:f", "h2_3:f"}));
  EXPECT_DOUBLE_EQ(s->length_m, net.segment(path[2]).length_m + net.segment(path[3]).length_m);

  std::vector<GateCrossing> outside{{"t", "a", t0 + Millis{3600000}, 1}};
  EXPECT_FALSE(extract_signature(mt, outside, net));
}

TEST(Routes, SimilarityBasics) {
  const auto& net = grid();
  const auto a = segs(net, {"h2_0:f", "h2_1:f", "h2_2:f"});
  const auto b = segs(net, {"h0_0:f", "h0_1:f"});
  EXPECT_EQ(similarity(a, a, net), 1.0);
  EXPECT_EQ(similarity(a, b, net), 0.0);
  const auto dup = segs(net, {"h2_2:f", "h2_0:f", "h2_1:f", "h2_0:f"});
  EXPECT_EQ(similarity(a, dup, net), 1.0);
}

TEST(Routes, SimilarityMatchesSetAlgebraOracle) {
  const auto& net = grid();
  const auto paths = random_paths(120, 4);
  for (std::size_t i = 0; i + 1 < paths.size(); ++i) {
    const double ab = similarity(paths[i], paths[i + 1], net);
    EXPECT_NEAR(ab, oracle::weighted_jaccard(paths[i], paths[i + 1], net), 1e-12);
    EXPECT_EQ(ab, similarity(paths[i + 1], paths[i], net));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Routes, ParallelReplacementScoresHandComputedValue) {
  // Five 200 m links; the second is swapped for a 50 + 200 + 50 m bypass.
  using fixtures::detail::Planar;
  using fixtures::detail::Road;
  const std::vector<Planar> nodes{{"a0", 0, 0},   {"a1", 200, 0},  {"a2", 400, 0}, {"a3", 600, 0},
                                  {"a4", 800, 0}, {"a5", 1000, 0}, {"b1", 200, 50}, {"b2", 400, 50}};
  const RoadClass c = RoadClass::other;
  const std::vector<Road> roads{{"m0", "a0", "a1", "Main", c}, {"m1", "a1", "a2", "Main", c},
                                {"m2", "a2", "a3", "Main", c}, {"m3", "a3", "a4", "Main", c},
                                {"m4", "a4", "a5", "Main", c}, {"p0", "a1", "b1", "Side", c},
                                {"p1", "b1", "b2", "Side", c}, {"p2", "b2", "a2", "Side", c}};
  const RoadNetwork net = RoadNetwork::build(fixtures::detail::build_records({39.0, -77.0}, nodes, roads));
  const auto base = segs(net, {"m0", "m1", "m2", "m3", "m4"});
  const auto alt = segs(net, {"m0", "p0", "p1", "p2", "m2", "m3", "m4"});
  EXPECT_NEAR(similarity(base, alt, net), 800.0 / 1300.0, 1e-3);
  EXPECT_NEAR(similarity(base, alt, net), oracle::weighted_jaccard(base, alt, net), 1e-12);
}

// ---------------------------------------------------------------------------
// Labels

TEST(Routes, LabelByGreatestLength) {
  using fixtures::detail::Planar;
  using fixtures::detail::Road;
  const std::vector<Planar> nodes{{"a", 0, 0}, {"b", 600, 0}, {"c", 1000, 0}, {"d", 1400, 0}, {"e", 1800, 0}};
  const RoadClass c = RoadClass::other;
  const std::vector<Road> roads{{"x", "a", "b", "MD-27", c}, {"y", "b", "c", "MD-355", c},
                                {"z", "c", "d", "", c},      {"w", "d", "e", "", c},
                                {"u", "b", "c", "B Road", c}, {"v", "c", "d", "A Road", c}};
  const RoadNetwork net = RoadNetwork::build(fixtures::detail::build_records({39.0, -77.0}, nodes, roads));
  EXPECT_EQ(label_route(segs(net, {"x", "y"}), net), "MD-27");
  EXPECT_EQ(label_route(segs(net, {"y", "z", "w"}), net), "MD-355");  // unnamed length never wins
  EXPECT_EQ(label_route(segs(net, {"z", "w"}), net), "unnamed");
  EXPECT_EQ(label_route(segs(net, {"u", "v"}), net), "A Road");  // tie broken by name
}

TEST(Routes, GridCorridorLabelsFollowGeneratorNames) {
  synth::GridNames names;
  names.rows = {"First Ave", "Second Ave", "Third Ave"};
  names.cols = {"Oak St", "Elm St", "Ash St", "Fir St"};
  const RoadNetwork net = RoadNetwork::build(synth::grid_network(3, 4, 300.0, {39.2, -77.1}, names));
  for (int r = 0; r < 3; ++r) {
    std::vector<SegmentIndex> row;
    for (int c = 0; c < 3; ++c) row.push_back(net.segment_index("h" + std::to_string(r) + "_" + std::to_string(c) + ":f"));
    EXPECT_EQ(label_route(row, net), names.rows[static_cast<std::size_t>(r)]);
  }
}

// ---------------------------------------------------------------------------
// Folding

TEST(Routes, IdenticalSignaturesFoldIntoOneSet) {
  const auto& net = grid();
  std::vector<RouteSignature> sigs;
  for (int i = 0; i < 5; ++i) sigs.push_back(sig("t" + std::to_string(i), segs(net, {"h1_0:f", "h1_1:f"}), net));
  const auto sets = fold_routes(sigs, 0.9, net);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0].members.size(), 5u);
  for (double s : sets[0].fold_scores) EXPECT_EQ(s, 1.0);
  EXPECT_EQ(sets[0].route_id, "R1");
}

TEST(Routes, DisjointGroupsFoldSeparately) {
  const auto& net = grid();
  std::vector<RouteSignature> sigs{sig("a1", segs(net, {"h1_0:f", "h1_1:f"}), net),
                                   sig("b1", segs(net, {"h3_0:f", "h3_1:f", "h3_2:f"}), net),
                                   sig("a2", segs(net, {"h1_0:f", "h1_1:f"}), net),
                                   sig("b2", segs(net, {"h3_0:f", "h3_1:f", "h3_2:f"}), net)};
  const auto sets = fold_routes(sigs, 0.9, net);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[0].members, (std::vector<std::string>{"b1", "b2"}));  // longer first
  EXPECT_EQ(sets[1].members, (std::vector<std::string>{"a1", "a2"}));
  EXPECT_THROW(fold_routes(sigs, 0.0, net), Error);
  EXPECT_THROW(fold_routes(sigs, 1.5, net), Error);
}

TEST(Routes, FoldingPartitionsAndIgnoresInputOrder) {
  const auto& net = grid();
  const auto paths = random_paths(300, 6);
  std::vector<RouteSignature> sigs;
  for (std::size_t i = 0; i < paths.size(); ++i) sigs.push_back(sig(fixtures::detail::padded("s", i), paths[i], net));
  const auto sets = fold_routes(sigs, 0.6, net);
  std::map<std::string, int> seen;
  for (const auto& rs : sets) {
    EXPECT_EQ(rs.members.size(), rs.fold_scores.size());
    for (const auto& m : rs.members) ++seen[m];
    for (double s : rs.fold_scores) EXPECT_GE(s, 0.6);
  }
  EXPECT_EQ(seen.size(), sigs.size());
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 1) << id;

  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    auto shuffled = sigs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = fold_routes(shuffled, 0.6, net);
    ASSERT_EQ(again.size(), sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
      EXPECT_EQ(again[i].members, sets[i].members);
      EXPECT_EQ(again[i].canonical, sets[i].canonical);
    }
  }
}

TEST(Routes, ThetaOneGroupsIdenticalSegmentSets) {
  const auto& net = grid();
  const auto pool = random_paths(12, 9);
  std::mt19937_64 rng(3);
  std::vector<RouteSignature> sigs;
  std::map<std::vector<SegmentIndex>, std::set<std::string>> groups;
  for (int i = 0; i < 200; ++i) {
    const auto& p = pool[rng() % pool.size()];
    sigs.push_back(sig(fixtures::detail::padded("d", static_cast<std::size_t>(i)), p, net));
    groups[detail::segment_set(p)].insert(sigs.back().trip_id);
  }
  const auto sets = fold_routes(sigs, 1.0, net);
  ASSERT_EQ(sets.size(), groups.size());
  for (const auto& rs : sets) {
    const std::set<std::string> got(rs.members.begin(), rs.members.end());
    EXPECT_EQ(got, groups.at(detail::segment_set(rs.canonical)));
  }
}

TEST(Routes, RouteSetsRoundTripThroughJson) {
  const auto& net = grid();
  std::vector<RouteSignature> sigs;
  const auto paths = random_paths(40, 2);
  for (std::size_t i = 0; i < paths.size(); ++i) sigs.push_back(sig(fixtures::detail::padded("j", i), paths[i], net));
  const auto sets = fold_routes(sigs, 0.8, net);
  const auto j = route_sets_to_json(sets, net);
  const auto back = route_sets_from_json(nlohmann::json::parse(j.dump()), net);
  ASSERT_EQ(back.size(), sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    EXPECT_EQ(back[i].members, sets[i].members);
    EXPECT_EQ(back[i].canonical, sets[i].canonical);
    EXPECT_EQ(back[i].label, sets[i].label);
  }
}

// ---------------------------------------------------------------------------
// Shares and formatting

TEST(Analytics, PercentDisplayRule) {
  EXPECT_EQ(format_percent(100.0 * 552 / 585), "94%");
  EXPECT_EQ(format_percent(100.0 * 21 / 585), "4%");
  EXPECT_EQ(format_percent(100.0 * 5 / 585), "0.9%");
  EXPECT_EQ(format_percent(100.0 * 3 / 585), "0.5%");
  EXPECT_EQ(format_percent(100.0 * 1 / 585), "0.2%");
  EXPECT_EQ(format_percent(100.0), "100%");
  EXPECT_EQ(format_delta_pp(-26.0), "-26 pp");
  EXPECT_EQ(format_delta_pp(16.0), "+16 pp");
  EXPECT_EQ(format_delta_pp(0.0), "0.0 pp");
  EXPECT_EQ(format_delta_pp(0.4), "+0.4 pp");
}

TEST(Analytics, ShareTableEdgeCases) {
  EXPECT_EQ(route_share_table({}).total, 0);
  EXPECT_TRUE(route_share_table({}).rows.empty());
  const std::vector<RouteSet> one{members("Only Road", 7)};
  const auto t = route_share_table(one);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].display, "100%");
  const std::vector<RouteSet> tie{members("B", 2), members("A", 2), members("C", 3)};
  const auto s = route_share_table(tie);
  EXPECT_EQ(s.rows[0].label, "C");
  EXPECT_EQ(s.rows[1].label, "A");
  EXPECT_EQ(s.rows[2].label, "B");
}

TEST(Analytics, SharesMatchDirectArithmetic) {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 100; ++round) {
    std::vector<RouteSet> sets;
    long total = 0;
    const int k = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < k; ++i) {
      const long n = 1 + static_cast<long>(rng() % 500);
      total += n;
      sets.push_back(members("L" + std::to_string(i), n));
    }
    const auto t = route_share_table(sets);
    EXPECT_EQ(t.total, total);
    double sum = 0.0;
    long long count = 0;
    for (const auto& r : t.rows) {
      EXPECT_NEAR(r.percent, 100.0 * static_cast<double>(r.trips) / static_cast<double>(total), 1e-12);
      sum += r.percent / 100.0;
      count += r.trips;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(count, total);
  }
}

TEST(Analytics, PeriodComparisonDeltas) {
  const std::vector<RouteSet> a{members("I-95", 62), members("US-50", 28), members("MD-32", 10)};
  const std::vector<RouteSet> b{members("I-95", 36), members("US-50", 44), members("MD-32", 20)};
  const auto c = compare_periods(route_share_table(a), route_share_table(b));
  std::map<std::string, double> d;
  for (const auto& r : c.rows) d[r.label] = r.delta_pp;
  EXPECT_EQ(d.at("I-95"), -26.0);
  EXPECT_EQ(d.at("US-50"), 16.0);
  EXPECT_EQ(format_delta_pp(d.at("I-95")), "-26 pp");
  EXPECT_EQ(format_delta_pp(d.at("US-50")), "+16 pp");

  for (const auto& r : compare_periods(route_share_table(a), route_share_table(a)).rows) EXPECT_EQ(r.delta_pp, 0.0);

  const std::vector<RouteSet> lone{members("I-70", 5)};
  const auto m = compare_periods(route_share_table(a), route_share_table(lone));
  for (const auto& r : m.rows) {
    EXPECT_DOUBLE_EQ(r.delta_pp, r.share_b - r.share_a);
    if (r.label == "I-70") EXPECT_EQ(r.share_a, 0.0);
  }
}

// ---------------------------------------------------------------------------
// Travel times and hourly counts

TEST(Analytics, SingleTripTravelTime) {
  TripPass p{"t", parse_instant("2022-07-30T10:00:00Z"),
             {{"t", "w", parse_instant("2022-07-30T10:00:00Z"), 1}, {"t", "e", parse_instant("2022-07-30T10:25:00Z"), 1}}};
  RouteSet rs = members("Road", 0);
  rs.members = {"t"};
  const std::vector<RouteSet> sets{rs};
  const auto s = travel_time_stats({p}, sets);
  ASSERT_EQ(s.rows.size(), 1u);
  EXPECT_DOUBLE_EQ(s.rows[0].mean_minutes, 25.0);
  EXPECT_EQ(s.first_gate, "w");
  EXPECT_EQ(s.last_gate, "e");
}

TEST(Analytics, HourlyMarginalsEqualShareCounts) {
  const auto& r = case1();
  std::map<std::string, long long> col;
  for (const auto& row : r.hourly.counts)
    for (std::size_t c = 0; c < row.size(); ++c) col[r.hourly.labels[c]] += row[c];
  for (const auto& row : r.shares.rows) EXPECT_EQ(col.at(row.label), row.trips) << row.label;
  EXPECT_EQ(r.hourly.total(), r.shares.total);
}

TEST(Analytics, AllTripsInOneHourGiveOneNonzeroRow) {
  TripSet ts;
  RouteSet rs = members("Road", 0);
  for (int i = 0; i < 10; ++i) {
    const Instant t = parse_instant("2022-04-11T13:05:00Z") + Millis{i * 60000};
    ts.push_back({"t" + std::to_string(i), t, {{"t" + std::to_string(i), "g", t, 1}}});
    rs.members.push_back("t" + std::to_string(i));
  }
  const std::vector<RouteSet> sets{rs};
  const auto m = hourly_route_counts(ts, sets, "America/New_York");
  for (std::size_t b = 0; b < m.counts.size(); ++b) EXPECT_EQ(m.counts[b][0], b == 9 ? 10 : 0);
  EXPECT_THROW(hourly_route_counts(ts, sets, "America/New_York", 7), Error);
}

// ---------------------------------------------------------------------------
// Fixture reproductions

TEST(Analytics, WeighStationBypassShares) {
  const auto& r = case1();
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_TRUE(r.empty_clips.empty());
  EXPECT_EQ(r.shares.total, 585);
  const auto expect = fixtures::case1_route_counts();
  const std::vector<std::string> display{"94%", "4%", "0.9%", "0.5%", "0.5%", "0.2%"};
  ASSERT_EQ(r.shares.rows.size(), expect.size());
  std::map<std::string, std::pair<long long, std::string>> got;
  for (const auto& row : r.shares.rows) got[row.label] = {row.trips, row.display};
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(got.at(expect[i].first).first, expect[i].second);
    EXPECT_EQ(got.at(expect[i].first).second, display[i]);
  }
}

TEST(Analytics, EnforcementHoursAvoidShare) {
  const auto& r = case1();
  const auto s = avoid_share(r.hourly, {8, 15}, {"Eisenhower Memorial Highway, I-270", "Hyattstown South TWIS"});
  EXPECT_EQ(s.avoiding, 12);
  EXPECT_EQ(s.total, 33);
  EXPECT_EQ(format_percent(s.percent), "36%");
}

TEST(Analytics, CorridorTravelTimesMatchGeneratorPlan) {
  const auto fx = fixtures::case2_fixture();
  const RoadNetwork net = RoadNetwork::build(fx.network);
  const auto plan = fixtures::case2_plan();
  ASSERT_EQ(fx.queries.size(), plan.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto r = analyze(net, fx.trips, fx.queries[k].second);
    std::map<std::string, double> mean;
    std::map<std::string, long long> n;
    for (const auto& row : r.travel_times.rows) {
      mean[row.label] = row.mean_minutes;
      n[row.label] = row.n_trips;
    }
    ASSERT_EQ(mean.size(), plan[k].minutes.size()) << plan[k].date;
    for (const auto& [label, mins] : plan[k].minutes) {
      double want = 0;
      for (double m : mins) want += m / static_cast<double>(mins.size());
      EXPECT_EQ(n.at(label), static_cast<long long>(mins.size())) << label;
      EXPECT_NEAR(mean.at(label), want, 1.0 / 60.0) << label;
    }
  }
}

// ---------------------------------------------------------------------------
// Correlations

TEST(Analytics, PearsonKnownValuesAndErrors) {
  const std::vector<double> x{1, 2, 3}, up{2, 4, 6}, down{3, 2, 1}, flat{5, 5, 5};
  EXPECT_DOUBLE_EQ(*pearson_r(x, up), 1.0);
  EXPECT_DOUBLE_EQ(*pearson_r(x, down), -1.0);
  EXPECT_FALSE(pearson_r(x, flat));
  EXPECT_THROW(pearson_r(x, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(pearson_r(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST(Analytics, PearsonPropertiesAgainstTwoPassFormula) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(100.0, 30.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-50.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(7), y(7);
    for (auto& v : x) v = nd(rng);
    for (std::size_t k = 0; k < 7; ++k) y[k] = 0.5 * x[k] + nd(rng);
    const double r = *pearson_r(x, y);
    EXPECT_NEAR(r, *oracle::pearson(x, y), 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
    const double a = scale(rng), b = shift(rng);
    std::vector<double> ax(7), neg(7);
    for (std::size_t k = 0; k < 7; ++k) {
      ax[k] = a * x[k] + b;
      neg[k] = -a * x[k] + b;
    }
    EXPECT_NEAR(*pearson_r(ax, y), r, 1e-12);
    EXPECT_NEAR(*pearson_r(neg, y), -r, 1e-12);
  }
}

TEST(Analytics, WeeklyCorrelationScaleInvarianceAndConstantWeek) {
  DailyCountSeries truth{"S", "America/New_York", {}}, probe{"S", "America/New_York", {}};
  const absl::CivilDay monday(2022, 4, 11);
  for (int i = 0; i < 7; ++i) {
    const long long n = 100 + 37 * i - 5 * i * i;
    truth.days.push_back({monday + i, n * 10});
    probe.days.push_back({monday + i, n});
  }
  auto w = weekly_correlations(probe, truth);
  ASSERT_EQ(w.points.size(), 1u);
  EXPECT_NEAR(*w.points[0].r, 1.0, 1e-12);
  EXPECT_EQ(w.points[0].n_days, 7);
  EXPECT_EQ(w.points[0].week_start, monday);
  EXPECT_EQ(w.points[0].week_index, 15);

  for (auto& d : truth.days) d.count = 500;
  w = weekly_correlations(probe, truth);
  ASSERT_EQ(w.points.size(), 1u);
  EXPECT_FALSE(w.points[0].r);
  EXPECT_EQ(box_summary(w.points).n_undefined, 1u);
}

TEST(Analytics, WeeklyCorrelationSkipsIncompleteWeeksAndNeedsOverlap) {
  DailyCountSeries truth{"S", "UTC", {}}, probe{"S", "UTC", {}};
  const absl::CivilDay start(2022, 1, 5);  // Wednesday
  std::mt19937_64 rng(2);
  for (int i = 0; i < 30; ++i) {
    truth.days.push_back({start + i, static_cast<long long>(rng() % 1000)});
    probe.days.push_back({start + i, static_cast<long long>(rng() % 100)});
  }
  const auto w = weekly_correlations(probe, truth);
  // Jan 10, 17, 24 are complete; Jan 3 and Jan 31 are partial.
  EXPECT_EQ(w.points.size(), 3u);
  EXPECT_EQ(w.skipped_weeks.size(), 2u);
  for (const auto& p : w.points) EXPECT_EQ(absl::GetWeekday(p.week_start), absl::Weekday::monday);

  DailyCountSeries later{"S", "UTC", {{absl::CivilDay(2023, 1, 2), 4}}};
  try {
    weekly_correlations(later, truth);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::no_overlap);
  }
}

TEST(Analytics, IsoWeekNumbers) {
  EXPECT_EQ(iso_week(absl::CivilDay(2022, 1, 3)), 1);
  EXPECT_EQ(iso_week(absl::CivilDay(2021, 1, 4)), 1);
  EXPECT_EQ(iso_week(absl::CivilDay(2020, 12, 28)), 53);
  EXPECT_EQ(iso_week(absl::CivilDay(2022, 12, 26)), 52);
}

TEST(Analytics, BoxSummaryQuantiles) {
  std::vector<CorrelationPoint> pts;
  for (double r : {0.9, 0.5, 0.7, 0.8, 0.6}) pts.push_back({"S", 1, absl::CivilDay(2022, 1, 3), r, 7});
  pts.push_back({"S", 2, absl::CivilDay(2022, 1, 10), std::nullopt, 7});
  const auto b = box_summary(pts);
  EXPECT_EQ(b.n, 5u);
  EXPECT_EQ(b.n_undefined, 1u);
  EXPECT_DOUBLE_EQ(b.min, 0.5);
  EXPECT_DOUBLE_EQ(b.q1, 0.6);
  EXPECT_DOUBLE_EQ(b.median, 0.7);
  EXPECT_DOUBLE_EQ(b.q3, 0.8);
  EXPECT_DOUBLE_EQ(b.max, 0.9);
}

TEST(Analytics, ProbeDailyCountsFillTheSpan) {
  TripSet ts;
  for (int i = 0; i < 5; ++i) {
    const Instant t = parse_instant("2022-04-13T15:00:00Z") + Millis{i * 3600000LL};
    ts.push_back({"p" + std::to_string(i), t, {}});
  }
  const auto s = probe_daily_counts(ts, "S", "America/New_York", absl::CivilDay(2022, 4, 11), absl::CivilDay(2022, 4, 17));
  ASSERT_EQ(s.days.size(), 7u);
  EXPECT_EQ(s.days[2].count, 5);
  EXPECT_EQ(s.days[0].count, 0);
}
