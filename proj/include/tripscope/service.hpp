#pragma once

#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tripscope/pipeline.hpp"

// HTTP/JSON adapter over the analysis pipeline. Every payload is produced by
// the same library calls the CLI makes.

namespace tripscope {

struct ServiceConfig {
  std::string network_path;
  std::string trips_path;
  std::string counts_path;  // optional
  std::string bind = "127.0.0.1";
  int port = 8080;
  unsigned threads = 1;
  MatchParams match;
};

/// Hashes and parameters every report carries; identical for CLI and service.
inline nlohmann::json report_inputs(const std::string& network_sha, const std::string& trips_sha,
                                    const MatchParams& p) {
  nlohmann::json params = {{"candidate_radius_m", p.candidate_radius_m},
                           {"max_gap_fill_ratio", p.max_gap_fill_ratio},
                           {"min_waypoints", p.min_waypoints},
                           {"emission_sigma_m", p.emission_sigma_m},
                           {"max_candidates", p.max_candidates},
                           {"transition_weight", p.transition_weight}};
  nlohmann::json j = {{"network_sha256", network_sha}, {"trips_sha256", trips_sha}, {"match_parameters", params}};
  j["manifest_id"] = sha256_hex(j.dump());
  return j;
}

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse:
    case ErrorKind::invalid_argument:
    case ErrorKind::geometry: return 400;
    case ErrorKind::unknown_gate:
    case ErrorKind::unknown_segment:
    case ErrorKind::no_overlap:
    case ErrorKind::mixed_station:
    case ErrorKind::conflict:
    case ErrorKind::referential: return 422;
    case ErrorKind::io: return 500;
  }
  return 500;
}

inline nlohmann::json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

struct Reply {
  int status = 200;
  std::string body;
  bool cache_hit = false;
};

class Service {
 public:
  explicit Service(const ServiceConfig& cfg) : cfg_(cfg) {
    cfg_.match.validate();
    const std::string net_text = read_file(cfg.network_path);
    net_ = std::make_unique<RoadNetwork>(parse_network(net_text));
    const std::string trips_text = read_file(cfg.trips_path);
    std::istringstream in(trips_text);
    trips_ = parse_trips(in);
    if (!cfg.counts_path.empty()) counts_ = parse_counts(cfg.counts_path);
    inputs_ = report_inputs(sha256_hex(net_text), sha256_hex(trips_text), cfg_.match);
  }

  const RoadNetwork& network() const { return *net_; }

  Reply status() const {
    std::size_t cached;
    {
      std::lock_guard lock(mu_);
      cached = cache_.size();
    }
    nlohmann::json j = {{"status", "ok"},
                        {"version", TRIPSCOPE_VERSION},
                        {"network", {{"nodes", net_->node_count()}, {"segments", net_->segment_count()}}},
                        {"trips", trips_.size()},
                        {"count_records", counts_.size()},
                        {"inputs", inputs_},
                        {"cached_queries", cached}};
    return {200, j.dump()};
  }

  /// Runs (or replays) a query document. Concurrent requests for the same
  /// document share one computation.
  Reply query(const std::string& body) {
    return guarded([&] {
      const QueryDocument doc = parse_query_document(body);
      const std::string key = query_id(doc);
      std::shared_future<std::shared_ptr<const Stored>> fut;
      std::promise<std::shared_ptr<const Stored>> mine;
      bool owner = false;
      {
        std::lock_guard lock(mu_);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
          fut = mine.get_future().share();
          cache_.emplace(key, fut);
          owner = true;
        } else {
          fut = it->second;
        }
      }
      if (owner) {
        try {
          auto st = std::make_shared<Stored>();
          st->result = analyze(*net_, trips_, doc, cfg_.match, cfg_.threads);
          st->body = report_to_json(st->result, *net_, inputs_).dump();
          mine.set_value(st);
        } catch (...) {
          {
            std::lock_guard lock(mu_);
            cache_.erase(key);
          }
          mine.set_exception(std::current_exception());
        }
      }
      return Reply{200, fut.get()->body, !owner};
    });
  }

  /// {"a": <query id or query document>, "b": ...}
  Reply compare(const std::string& body) {
    return guarded([&] {
      const nlohmann::json j = parse_body(body);
      if (!j.is_object() || !j.contains("a") || !j.contains("b"))
        throw Error(ErrorKind::parse, "comparison needs members 'a' and 'b'");
      const auto a = resolve(j.at("a"));
      const auto b = resolve(j.at("b"));
      if (!a || !b) return Reply{404, error_body("not_found", "unknown query id").dump()};
      return Reply{200, comparison_to_json(compare_periods(a->result.shares, b->result.shares)).dump()};
    });
  }

  /// {"station_id", "gate": {"id","line","positive"}, "sign", "timezone", "cmv_classes"}
  Reply validate(const std::string& body) {
    return guarded([&] {
      const nlohmann::json j = parse_body(body);
      ValidationRequest req;
      try {
        req.station_id = j.at("station_id").get<std::string>();
        nlohmann::json wrapper = {{"gates", nlohmann::json::array({j.at("gate")})},
                                  {"sequence", {{{"gate", j.at("gate").at("id")}, {"sign", j.value("sign", 1)}}}}};
        const QueryDocument doc = query_from_json(wrapper);
        req.gate = doc.gates.front();
        req.sign = doc.query.gate_sequence.front().sign;
        req.timezone = j.value("timezone", req.timezone);
        if (j.contains("cmv_classes")) req.cmv_classes = j.at("cmv_classes").get<std::set<int>>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed validation request: ") + e.what());
      }
      return Reply{200, validation_to_json(validate_station(trips_, counts_, req, cfg_.threads)).dump()};
    });
  }

  /// bbox = "minlon,minlat,maxlon,maxlat"; empty means the whole network.
  Reply network_extract(const std::string& bbox) const {
    return guarded([&] {
      std::vector<SegmentIndex> segs;
      if (bbox.empty()) {
        for (SegmentIndex s = 0; s < net_->segment_count(); ++s) segs.push_back(s);
      } else {
        std::vector<double> v;
        std::stringstream ss(bbox);
        std::string part;
        while (std::getline(ss, part, ',')) v.push_back(parse_double(part, "bbox"));
        if (v.size() != 4 || v[0] > v[2] || v[1] > v[3])
          throw Error(ErrorKind::parse, "bbox must be minlon,minlat,maxlon,maxlat");
        segs = net_->segments_in_box({v[1], v[0]}, {v[3], v[2]});
      }
      return Reply{200, segments_to_geojson(*net_, segs).dump()};
    });
  }

  void attach(httplib::Server& srv) {
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_header("X-Cache", r.cache_hit ? "hit" : "miss");
      res.set_content(r.body, "application/json");
    };
    srv.Get("/api/v1/status", [this, send](const httplib::Request&, httplib::Response& res) { send(res, status()); });
    srv.Post("/api/v1/query",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, query(req.body)); });
    srv.Post("/api/v1/compare",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, compare(req.body)); });
    srv.Post("/api/v1/validate",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, validate(req.body)); });
    srv.Get("/api/v1/network", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, network_extract(req.has_param("bbox") ? req.get_param_value("bbox") : ""));
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) res.set_content(error_body("not_found", "no such endpoint").dump(), "application/json");
    });
  }

 private:
  struct Stored {
    AnalysisResult result;
    std::string body;
  };

  static nlohmann::json parse_body(const std::string& body) {
    try {
      return nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  template <class F>
  static Reply guarded(F&& f) {
    try {
      return f();
    } catch (const Error& e) {
      return {http_status(e.kind()), error_body(to_string(e.kind()), e.what()).dump()};
    } catch (const std::exception& e) {
      return {500, error_body("internal", e.what()).dump()};
    }
  }

  std::shared_ptr<const Stored> resolve(const nlohmann::json& ref) {
    std::string key;
    if (ref.is_string()) {
      key = ref.get<std::string>();
    } else {
      const Reply r = query(ref.dump());
      if (r.status != 200) throw Error(ErrorKind::parse, "embedded query failed: " + r.body);
      key = query_id(query_from_json(ref));
    }
    std::shared_future<std::shared_ptr<const Stored>> fut;
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it == cache_.end()) return nullptr;
      fut = it->second;
    }
    return fut.get();
  }

  ServiceConfig cfg_;
  std::unique_ptr<RoadNetwork> net_;
  std::vector<Trip> trips_;
  std::vector<CountRecord> counts_;
  nlohmann::json inputs_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const Stored>>> cache_;
};

}  // namespace tripscope
