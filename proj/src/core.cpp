#include "poolmatch/core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "poolmatch/csv.hpp"

namespace poolmatch {

const char* to_string(StopKind kind) {
  switch (kind) {
    case StopKind::pickup: return "pickup";
    case StopKind::dropoff: return "dropoff";
    case StopKind::onboard_dropoff: return "onboard_dropoff";
  }
  return "?";
}

DelayParams default_params(Seconds delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("pickup delay must be positive");
  DelayParams p;
  p.pickup_delay = delta;
  p.detour_delay = 2.0 * delta;
  p.epoch_len = 60.0;
  p.walk_speed = 1.0;
  p.max_walk = delta * p.walk_speed;
  return p;
}

const char* to_string(RewardObjective objective) {
  return objective == RewardObjective::served_count ? "served_count" : "neg_travel_time";
}

RewardObjective parse_objective(const std::string& text) {
  if (text == "served_count") return RewardObjective::served_count;
  if (text == "neg_travel_time") return RewardObjective::neg_travel_time;
  throw std::invalid_argument("unknown objective '" + text + "'");
}

Reward immediate_reward(const Combo& combo, const RoutePlan& plan, RewardObjective objective) {
  if (objective == RewardObjective::served_count) return static_cast<Reward>(combo.size());
  return -plan.total_time;
}

std::vector<Request> load_requests(std::istream& in, const RoadNetwork& net) {
  csv::Reader r(in, "id,arrival_s,pickup_node,dropoff_node");
  std::vector<Request> out;
  std::set<RequestId> seen;
  std::vector<std::string_view> f;
  while (r.row(f)) {
    if (f.size() != 4) throw ParseError("expected 4 fields", r.line());
    Request q;
    q.id = r.field<RequestId>(f[0], "id");
    q.arrival_time = r.field<double>(f[1], "arrival_s");
    auto p = r.field<std::int64_t>(f[2], "pickup_node");
    auto d = r.field<std::int64_t>(f[3], "dropoff_node");
    if (!net.find_original(p, q.pickup)) throw ParseError("unknown pickup node " + std::to_string(p), r.line());
    if (!net.find_original(d, q.dropoff)) throw ParseError("unknown dropoff node " + std::to_string(d), r.line());
    if (q.pickup == q.dropoff) throw ParseError("pickup equals dropoff", r.line());
    if (!(q.arrival_time >= 0.0)) throw ParseError("arrival_s must be non-negative", r.line());
    if (!seen.insert(q.id).second) throw ParseError("duplicate request id", r.line());
    out.push_back(q);
  }
  std::stable_sort(out.begin(), out.end(), [](const Request& a, const Request& b) {
    return a.arrival_time != b.arrival_time ? a.arrival_time < b.arrival_time : a.id < b.id;
  });
  return out;
}

std::vector<Request> load_requests_file(const std::string& path, const RoadNetwork& net) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_requests(in, net);
}

void write_requests(const std::vector<Request>& requests, const RoadNetwork& net, std::ostream& out) {
  out.precision(17);
  out << "id,arrival_s,pickup_node,dropoff_node\n";
  for (const Request& q : requests)
    out << q.id << ',' << q.arrival_time << ',' << net.original_id(q.pickup) << ','
        << net.original_id(q.dropoff) << '\n';
}

}  // namespace poolmatch
