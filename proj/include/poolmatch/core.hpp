#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "poolmatch/network.hpp"

namespace poolmatch {

using RequestId = std::int64_t;
using VehicleId = std::int64_t;
using Reward = double;

// A set of requests offered to one vehicle, kept sorted and duplicate-free.
using Combo = std::vector<RequestId>;

struct Request {
  RequestId id = 0;
  NodeId pickup = 0;
  NodeId dropoff = 0;
  Seconds arrival_time = 0.0;
};

enum class StopKind : std::uint8_t { pickup = 0, dropoff = 1, onboard_dropoff = 2 };

const char* to_string(StopKind kind);

// Which area of a routing instance a stop serves: (kind, index) into the
// instance's awaiting or onboard list.
struct AreaRef {
  StopKind kind = StopKind::pickup;
  std::uint32_t index = 0;

  auto operator<=>(const AreaRef&) const = default;
};

struct Stop {
  NodeId node = 0;
  AreaRef area;
  Seconds arrival = 0.0;  // service instant (after any wait for a walker)
  RequestId request = -1;
  Seconds deadline = kUnreachable;  // latest admissible service instant

  bool operator==(const Stop&) const = default;
};

struct RoutePlan {
  std::vector<Stop> stops;
  Seconds total_time = 0.0;  // sum of driving legs

  bool operator==(const RoutePlan&) const = default;
};

struct OnboardPassenger {
  RequestId request = 0;
  Seconds pickup_time = 0.0;
};

struct Vehicle {
  VehicleId id = 0;
  std::uint32_t capacity = 4;
  NodeId location = 0;
  Seconds available_at = 0.0;  // instant the vehicle is at `location`
  RoutePlan plan;
  std::vector<OnboardPassenger> onboard;
  std::vector<RequestId> committed;  // assigned, not yet picked up

  std::uint32_t load() const { return static_cast<std::uint32_t>(onboard.size() + committed.size()); }
};

struct DelayParams {
  Seconds pickup_delay = 300.0;  // delta
  Seconds detour_delay = 600.0;  // lambda
  Seconds epoch_len = 60.0;
  double walk_speed = 1.0;  // m/s
  Meters max_walk = 300.0;
};

// lambda = 2 delta, 60 s epochs, 1 m/s walking, walk radius = delta * speed.
DelayParams default_params(Seconds delta);

enum class RewardObjective { served_count, neg_travel_time };

const char* to_string(RewardObjective objective);
RewardObjective parse_objective(const std::string& text);

Reward immediate_reward(const Combo& combo, const RoutePlan& plan, RewardObjective objective);

// Request stream CSV: `id,arrival_s,pickup_node,dropoff_node`. Node columns
// hold source ids and are mapped through the network; rows are returned in
// arrival order (ties by id).
std::vector<Request> load_requests(std::istream& in, const RoadNetwork& net);
std::vector<Request> load_requests_file(const std::string& path, const RoadNetwork& net);
void write_requests(const std::vector<Request>& requests, const RoadNetwork& net, std::ostream& out);

}  // namespace poolmatch
