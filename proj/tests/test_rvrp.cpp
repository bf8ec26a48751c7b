#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "poolmatch/rvrp.hpp"

using namespace poolmatch;

namespace {

rvrp::AwaitingRequest awaiting(RequestId id, Area p, Area e, double delta, double lambda, double arrival = 0) {
  rvrp::AwaitingRequest r;
  r.id = id;
  r.pickup = std::move(p);
  r.dropoff = std::move(e);
  r.max_pickup_delay = delta;
  r.max_detour = lambda;
  r.arrival = arrival;
  return r;
}

bool names(const std::vector<rvrp::Violation>& vs, int c) {
  return std::any_of(vs.begin(), vs.end(), [&](auto& v) { return v.constraint == c; });
}

}  // namespace

TEST_CASE("single request with point areas") {
  auto net = generate_grid(5, 5, 100, 10);
  rvrp::Instance inst;
  inst.start_node = 0;
  inst.start_time = 100;
  inst.awaiting.push_back(awaiting(1, point_area(1, AreaKind::pickup, 2), point_area(1, AreaKind::dropoff, 24), 300, 600));
  auto plan = rvrp::solve(net, inst);
  REQUIRE(plan);
  REQUIRE(plan->stops.size() == 2);
  CHECK(plan->stops[0].node == 2);
  CHECK(plan->stops[1].node == 24);
  CHECK(plan->total_time == doctest::Approx(net.drive_time(0, 2) + net.drive_time(2, 24)));
  CHECK(plan->stops[0].arrival == doctest::Approx(120));
  CHECK(rvrp::validate(net, inst, *plan).empty());

  inst.awaiting[0].max_pickup_delay = 19;
  CHECK_FALSE(rvrp::solve(net, inst));
  CHECK_FALSE(rvrp::solve_feasible_only(net, inst));
  CHECK_FALSE(rvrp::solve_bruteforce(net, inst));
}

TEST_CASE("flexible pickup shortens the route") {
  auto net = generate_grid(5, 5, 100, 10);
  rvrp::Instance inst;
  inst.start_node = 0;
  Area p = point_area(1, AreaKind::pickup, 12);
  p.members = {{7, 100}, {11, 100}, {12, 0}};
  inst.awaiting.push_back(awaiting(1, p, point_area(1, AreaKind::dropoff, 4), 300, 600));
  auto plan = rvrp::solve(net, inst);
  REQUIRE(plan);
  // 0->7->4 is 60 s, through 11 or 12 costs more
  CHECK(plan->stops[0].node == 7);
  CHECK(plan->total_time == doctest::Approx(60));
}

TEST_CASE("vehicle waits for the walker") {
  auto net = generate_grid(5, 5, 100, 10);
  rvrp::Instance inst;
  inst.start_node = 1;
  inst.start_time = 0;
  Area p = point_area(1, AreaKind::pickup, 12);
  p.members = {{2, 200}, {12, 0}};
  auto r = awaiting(1, p, point_area(1, AreaKind::dropoff, 4), 300, 600, 0);
  r.walk_speed = 1.0;
  inst.awaiting.push_back(r);
  auto plan = rvrp::solve(net, inst);
  REQUIRE(plan);
  // via 2: arrive at 10 s, walker there at 200 s; via 12 arrive at 30 s
  CHECK(plan->stops[0].node == 2);
  CHECK(plan->stops[0].arrival == doctest::Approx(200));
  CHECK(plan->stops[1].arrival == doctest::Approx(220));
  CHECK(plan->total_time == doctest::Approx(30));
  CHECK(rvrp::ready_time(inst.awaiting[0], p.members[0]) == doctest::Approx(200));

  inst.awaiting[0].max_detour = 10;  // ride 2->4 takes 20 s
  plan = rvrp::solve(net, inst);
  CHECK_FALSE(plan);
}

TEST_CASE("delay reference") {
  rvrp::Instance inst;
  inst.start_time = 500;
  rvrp::AwaitingRequest r;
  r.arrival = 420;
  CHECK(rvrp::pickup_reference(inst, r) == 500);
  inst.reference = rvrp::DelayReference::request_arrival;
  CHECK(rvrp::pickup_reference(inst, r) == 420);
  r.pickup_ref = 300;
  CHECK(rvrp::pickup_reference(inst, r) == 300);
  CHECK(rvrp::parse_delay_reference("route_start") == rvrp::DelayReference::route_start);
  CHECK_THROWS(rvrp::parse_delay_reference("soon"));
}

TEST_CASE("validate names the broken constraint") {
  auto net = generate_grid(5, 5, 100, 10);
  rvrp::Instance inst;
  inst.start_node = 0;
  inst.awaiting.push_back(awaiting(1, point_area(1, AreaKind::pickup, 1), point_area(1, AreaKind::dropoff, 3), 10, 600));
  auto plan = rvrp::solve(net, inst);
  REQUIRE(plan);
  CHECK(rvrp::validate(net, inst, *plan).empty());

  std::vector<Stop> swapped{plan->stops[1], plan->stops[0]};
  CHECK(names(rvrp::validate(net, inst, rvrp::retime(net, inst, swapped)), 5));

  inst.awaiting[0].pickup = point_area(1, AreaKind::pickup, 2);  // 20 s away, bound 10
  std::vector<Stop> late{plan->stops[0], plan->stops[1]};
  late[0].node = 2;
  CHECK(names(rvrp::validate(net, inst, rvrp::retime(net, inst, late)), 6));

  auto tampered = *plan;
  tampered.total_time += 1;
  CHECK_FALSE(rvrp::validate(net, inst, tampered).empty());
  CHECK(names(rvrp::validate(net, inst, RoutePlan{}), 2));
}

TEST_CASE("onboard drop-off bound") {
  auto net = generate_grid(5, 5, 100, 10);
  rvrp::Instance inst;
  inst.start_node = 0;
  inst.start_time = 50;
  rvrp::OnboardRequest o;
  o.id = 9;
  o.dropoff = point_area(9, AreaKind::dropoff, 4);
  o.pickup_time = 0;
  o.max_detour = 90;
  inst.onboard.push_back(o);
  auto plan = rvrp::solve(net, inst);
  REQUIRE(plan);
  CHECK(plan->stops[0].area.kind == StopKind::onboard_dropoff);
  CHECK(plan->stops[0].arrival == doctest::Approx(90));
  inst.onboard[0].max_detour = 89;
  CHECK_FALSE(rvrp::solve(net, inst));
}

TEST_CASE("capacity and argument checks") {
  auto net = generate_grid(3, 3, 100, 10);
  rvrp::Instance inst;
  inst.capacity = 1;
  inst.awaiting.push_back(awaiting(1, point_area(1, AreaKind::pickup, 1), point_area(1, AreaKind::dropoff, 2), 300, 600));
  inst.awaiting.push_back(awaiting(2, point_area(2, AreaKind::pickup, 3), point_area(2, AreaKind::dropoff, 4), 300, 600));
  CHECK_THROWS_AS(rvrp::solve(net, inst), std::invalid_argument);
  inst.capacity = 0;
  inst.awaiting[1].pickup = point_area(2, AreaKind::pickup, 99);
  CHECK_THROWS_AS(rvrp::solve(net, inst), std::invalid_argument);
}

TEST_CASE("solve matches exhaustive enumeration on random instances") {
  fixture::Rng rng(2024);
  int feasible = 0;
  for (int rep = 0; rep < 300; ++rep) {
    auto net = fixture::random_network(rng, static_cast<std::size_t>(fixture::uniform_int(rng, 12, 30)));
    auto inst = fixture::random_instance(rng, net, 4, 3);
    auto got = rvrp::solve(net, inst);
    auto want = oracle::best_route(net, inst);
    REQUIRE(got.has_value() == want.has_value());
    CHECK(rvrp::solve_feasible_only(net, inst).has_value() == want.has_value());
    if (!want) continue;
    ++feasible;
    CHECK(got->total_time == doctest::Approx(want->cost));
    CHECK(oracle::plan_key(*got) == want->key);
    for (std::size_t i = 0; i < got->stops.size(); ++i) CHECK(got->stops[i].arrival == doctest::Approx(want->arrivals[i]));
    CHECK(rvrp::validate(net, inst, *got).empty());
  }
  CHECK(feasible > 60);
}

TEST_CASE("instance text round-trips") {
  fixture::Rng rng(5);
  auto net = fixture::random_network(rng, 15);
  for (int rep = 0; rep < 20; ++rep) {
    auto inst = fixture::random_instance(rng, net, 5, 3);
    std::stringstream ss;
    rvrp::dump_instance(inst, ss);
    auto back = rvrp::parse_instance(ss);
    std::stringstream again;
    rvrp::dump_instance(back, again);
    CHECK(ss.str() == again.str());
    CHECK(rvrp::solve(net, inst) == rvrp::solve(net, back));
  }
  std::istringstream junk("not an instance\n");
  CHECK_THROWS_AS(rvrp::parse_instance(junk), ParseError);
}
