#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poolmatch/core.hpp"

namespace poolmatch::assign {

struct ScoredAction {
  VehicleId vehicle = 0;
  Combo combo;
  RoutePlan plan;
  double score = 0.0;  // immediate reward + gamma * value of the post-decision state
};

struct VehicleActions {
  VehicleId vehicle = 0;
  std::vector<ScoredAction> actions;  // must contain the empty combo
};

struct JointAssignment {
  std::map<VehicleId, ScoredAction> chosen;  // exactly one entry per vehicle
  double objective = 0.0;                    // sum of chosen scores in vehicle-id order
};

struct AssignmentStats {
  std::size_t components = 0;
  std::size_t largest_component = 0;
  std::size_t nodes = 0;  // search nodes expanded
  bool optimal = true;    // false if a node limit stopped some group early
};

// Picks one action per vehicle so that no request is served twice and the
// total score is maximal. Among optimal assignments the one whose sequence of
// combos, taken in vehicle-id order and compared lexicographically, is
// smallest wins.
//
// Vehicles are split into groups that share candidate requests; each group is
// solved by depth-first branch and bound over vehicles in id order, bounding
// the rest of the group by a price (Lagrangian) relaxation of the
// one-vehicle-per-request constraints.
//
// With node_limit > 0 a group whose search expands that many nodes returns
// the best assignment found so far and stats->optimal is cleared.
JointAssignment solve_assignment(std::span<const VehicleActions> actions, std::span<const RequestId> requests,
                                 AssignmentStats* stats = nullptr, std::size_t node_limit = 0);

// Exhaustive product enumeration with the same objective and tie rule. Test
// oracle; refuses when the product of list sizes exceeds `max_product`.
JointAssignment solve_assignment_bruteforce(std::span<const VehicleActions> actions,
                                            std::span<const RequestId> requests, double max_product = 1e6);

// Empty iff `result` selects exactly one offered action per vehicle, uses no
// request twice, and reports the matching objective.
std::vector<std::string> check_assignment(std::span<const VehicleActions> actions, std::span<const RequestId> requests,
                                          const JointAssignment& result);

}  // namespace poolmatch::assign
