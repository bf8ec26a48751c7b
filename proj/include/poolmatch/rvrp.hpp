#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "poolmatch/areas.hpp"
#include "poolmatch/core.hpp"
#include "poolmatch/network.hpp"

namespace poolmatch::rvrp {

// What the pickup delay of a fresh request is measured from.
enum class DelayReference { route_start, request_arrival };

const char* to_string(DelayReference ref);
DelayReference parse_delay_reference(const std::string& text);

// A request the vehicle still has to pick up and deliver.
struct AwaitingRequest {
  RequestId id = 0;
  Area pickup;
  Area dropoff;
  Seconds max_pickup_delay = 0.0;  // delta_j
  Seconds max_detour = 0.0;        // lambda_j
  Seconds arrival = 0.0;           // t_j
  // Overrides the instance's delay reference; set for requests committed in
  // an earlier decision so their deadline does not move on re-planning.
  std::optional<Seconds> pickup_ref;
  // When set, the passenger walks from the original pickup node starting at
  // `arrival`, and the vehicle waits at the chosen node until they get there.
  std::optional<double> walk_speed;
};

struct OnboardRequest {
  RequestId id = 0;
  Area dropoff;
  Seconds pickup_time = 0.0;  // t_start of the passenger's ride
  Seconds max_detour = 0.0;
};

struct Instance {
  NodeId start_node = 0;
  Seconds start_time = 0.0;  // t_v
  std::vector<AwaitingRequest> awaiting;
  std::vector<OnboardRequest> onboard;
  DelayReference reference = DelayReference::route_start;
  std::uint32_t capacity = 0;  // 0 = unchecked

  std::size_t area_count() const { return 2 * awaiting.size() + onboard.size(); }
  std::size_t point_count() const;
};

// Reference instant for an awaiting request's pickup-delay bound.
Seconds pickup_reference(const Instance& inst, const AwaitingRequest& req);
// Earliest instant the passenger can be at `node` of their pickup area.
Seconds ready_time(const AwaitingRequest& req, const AreaMember& member);

// Minimum total driving time plan satisfying every routing constraint, or
// nullopt if none exists. Among equal-cost plans the one whose stop sequence
// of (area kind, area index, node id) is lexicographically smallest wins.
//
// Exact depth-first branch-and-bound over (area, node) extensions in
// lexicographic order, seeded with a greedy feasible plan. Arrival at a stop
// is max(previous + leg, walker ready time); there is no other waiting.
std::optional<RoutePlan> solve(const RoadNetwork& net, const Instance& inst);

// Exhaustive enumeration of precedence-valid orders and point choices. Test
// oracle; refuses instances with more than `max_points` area members.
std::optional<RoutePlan> solve_bruteforce(const RoadNetwork& net, const Instance& inst,
                                          std::size_t max_points = 12);

// First plan found by a nearest-first depth-first search; nullopt exactly
// when solve() would return nullopt.
std::optional<RoutePlan> solve_feasible_only(const RoadNetwork& net, const Instance& inst);

struct Violation {
  int constraint = 0;  // 1..8 as in the routing model; 0 for bookkeeping
  std::string detail;
};

// Empty iff `plan` satisfies every constraint of `inst` and its arrival
// times and total equal the recomputed values.
std::vector<Violation> validate(const RoadNetwork& net, const Instance& inst, const RoutePlan& plan);

// Rebuilds arrival times and total for a stop sequence (areas and nodes are
// taken from `stops`; arrivals are ignored).
RoutePlan retime(const RoadNetwork& net, const Instance& inst, const std::vector<Stop>& stops);

// Line-oriented dump used to reproduce failing instances:
//   rvrp-instance 1
//   start <node> <time> <route_start|request_arrival> <capacity>
//   P <req> <arrival> <delta> <ref|-> <walk_speed|-> : <node>:<walk> ...
//   E <req> <lambda> : <node>:<walk> ...
//   D <req> <pickup_time> <lambda> : <node>:<walk> ...
// P and E lines alternate per awaiting request. Dense node ids are used.
void dump_instance(const Instance& inst, std::ostream& out);
Instance parse_instance(std::istream& in);

}  // namespace poolmatch::rvrp
