#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "poolmatch/areas.hpp"
#include "poolmatch/core.hpp"
#include "poolmatch/demand.hpp"

using namespace poolmatch;

TEST_CASE("default_params") {
  auto p = default_params(300);
  CHECK(p.detour_delay == 600);
  CHECK(p.max_walk == 300);
  CHECK(p.epoch_len == 60);
  CHECK(default_params(420).max_walk == 420);
  CHECK(default_params(360).max_walk / default_params(360).pickup_delay == p.walk_speed);
  CHECK_THROWS_AS(default_params(0), std::invalid_argument);
  CHECK_THROWS_AS(default_params(-5), std::invalid_argument);
}

TEST_CASE("immediate_reward") {
  RoutePlan plan;
  plan.total_time = 700;
  CHECK(immediate_reward({}, plan, RewardObjective::served_count) == 0);
  CHECK(immediate_reward({1, 2}, plan, RewardObjective::served_count) == 2);
  CHECK(immediate_reward({1}, plan, RewardObjective::neg_travel_time) == -700);
  CHECK(parse_objective("neg_travel_time") == RewardObjective::neg_travel_time);
  CHECK_THROWS(parse_objective("profit"));
}

TEST_CASE("request files") {
  auto net = generate_grid(3, 3, 100, 10);
  std::istringstream in("id,arrival_s,pickup_node,dropoff_node\n5,30,0,8\n2,30,1,2\n7,10,3,4\n");
  auto rs = load_requests(in, net);
  REQUIRE(rs.size() == 3);
  CHECK(rs[0].id == 7);
  CHECK(rs[1].id == 2);
  CHECK(rs[2].id == 5);
  std::stringstream out;
  write_requests(rs, net, out);
  auto back = load_requests(out, net);
  CHECK(back.size() == 3);
  CHECK(back[2].dropoff == 8);

  std::istringstream same("id,arrival_s,pickup_node,dropoff_node\n1,0,4,4\n");
  CHECK_THROWS_AS(load_requests(same, net), ParseError);
  std::istringstream unknown("id,arrival_s,pickup_node,dropoff_node\n1,0,4,99\n");
  CHECK_THROWS_AS(load_requests(unknown, net), ParseError);
  std::istringstream dup("id,arrival_s,pickup_node,dropoff_node\n1,0,4,3\n1,5,2,3\n");
  CHECK_THROWS_AS(load_requests(dup, net), ParseError);
}

TEST_CASE("build_area") {
  auto net = generate_grid(7, 7, 100, 10);
  Request r{1, 24, 0, 0};
  auto p = default_params(300);
  p.max_walk = 0;
  auto a = build_area(net, r, AreaKind::pickup, p);
  REQUIRE(a.members.size() == 1);
  CHECK(a.members[0].node == 24);
  p.max_walk = 250;
  a = build_area(net, r, AreaKind::pickup, p);
  CHECK(a.members.size() == 13);  // diamond of radius 2
  CHECK(a.contains(24));
  CHECK(a.find(24)->walk == 0);
  CHECK(a.find(26)->walk == doctest::Approx(200));
  CHECK_FALSE(a.contains(27));
  CHECK(std::is_sorted(a.members.begin(), a.members.end(), [](auto& x, auto& y) { return x.node < y.node; }));
}

TEST_CASE("resolve_overlap") {
  auto net = generate_grid(9, 1 + 1, 100, 10);  // 9x2 strip
  auto p = default_params(200);
  SUBCASE("disjoint areas unchanged") {
    Request r{1, 0, 8, 0};
    auto pa = build_area(net, r, AreaKind::pickup, p), da = build_area(net, r, AreaKind::dropoff, p);
    auto [x, y] = resolve_overlap(net, pa, da);
    CHECK(x.members == pa.members);
    CHECK(y.members == da.members);
  }
  SUBCASE("shared nodes go to the nearer original, ties to pickup") {
    Request r{1, 0, 3, 0};
    auto pa = build_area(net, r, AreaKind::pickup, p), da = build_area(net, r, AreaKind::dropoff, p);
    auto [x, y] = resolve_overlap(net, pa, da);
    CHECK(x.contains(0));
    CHECK(y.contains(3));
    CHECK(x.contains(1));      // 100 vs 200
    CHECK(y.contains(2));      // 200 vs 100
    CHECK_FALSE(x.contains(2));
    CHECK(x.contains(10));     // node (1,1): 200 from pickup, 300 from dropoff
    for (auto& m : x.members) CHECK_FALSE(y.contains(m.node));
  }
  SUBCASE("equidistant node stays with pickup") {
    Request r{1, 0, 2, 0};
    auto pa = build_area(net, r, AreaKind::pickup, p), da = build_area(net, r, AreaKind::dropoff, p);
    auto [x, y] = resolve_overlap(net, pa, da);
    CHECK(x.contains(1));
    CHECK_FALSE(y.contains(1));
    CHECK(y.contains(2));
  }
  SUBCASE("coinciding originals") {
    Request r{1, 4, 4, 0};
    auto pa = build_area(net, r, AreaKind::pickup, p);
    CHECK_THROWS_AS(resolve_overlap(net, pa, pa), std::invalid_argument);
  }
}

TEST_CASE("resolve_overlap keeps originals and partitions on random networks") {
  fixture::Rng rng(11);
  for (int rep = 0; rep < 40; ++rep) {
    auto net = fixture::random_network(rng, 20);
    NodeId a = static_cast<NodeId>(fixture::uniform_int(rng, 0, 19)), b;
    do b = static_cast<NodeId>(fixture::uniform_int(rng, 0, 19));
    while (b == a);
    Request r{1, a, b, 0};
    auto params = default_params(300);
    params.max_walk = fixture::uniform(rng, 0, 400);
    auto pa = build_area(net, r, AreaKind::pickup, params), da = build_area(net, r, AreaKind::dropoff, params);
    auto [x, y] = resolve_overlap(net, pa, da);
    CHECK(x.contains(a));
    CHECK(y.contains(b));
    CHECK(x.members.size() + y.members.size() >= std::max(pa.members.size(), da.members.size()));
    for (auto& m : pa.members) CHECK((x.contains(m.node) || y.contains(m.node)));
    for (auto& m : da.members) CHECK((x.contains(m.node) || y.contains(m.node)));
    for (auto& m : x.members) {
      CHECK_FALSE(y.contains(m.node));
      if (da.contains(m.node)) CHECK(net.walk_distance(a, m.node) <= net.walk_distance(b, m.node));
    }
    for (auto& m : y.members)
      if (pa.contains(m.node)) CHECK(net.walk_distance(b, m.node) < net.walk_distance(a, m.node));
  }
}

TEST_CASE("vehicle_reachable_points") {
  auto net = generate_grid(10, 10, 100, 10);
  auto p = default_params(300);
  Request r{1, 55, 0, 0};
  auto area = build_area(net, r, AreaKind::pickup, p);
  Vehicle v;
  v.location = 55;
  auto pts = vehicle_reachable_points(net, v, area, p);
  CHECK(std::find(pts.begin(), pts.end(), 55) != pts.end());
  v.location = 0;
  p.pickup_delay = 50;
  CHECK(vehicle_reachable_points(net, v, area, p).empty());
  p.pickup_delay = 100;
  pts = vehicle_reachable_points(net, v, area, p);
  for (auto& m : area.members) {
    bool in = std::find(pts.begin(), pts.end(), m.node) != pts.end();
    CHECK(in == (net.drive_time(0, m.node) <= 100));
  }
}

TEST_CASE("generated demand") {
  auto net = generate_grid(10, 10, 100, 10);
  CHECK(gen_requests(net, 0, 20, 60, 1).requests.empty());
  auto a = gen_requests(net, 12, 20, 60, 1), b = gen_requests(net, 12, 20, 60, 1);
  REQUIRE(a.requests.size() == b.requests.size());
  CHECK(a.requests.size() > 150);
  CHECK(a.requests.size() < 330);
  for (std::size_t i = 0; i < a.requests.size(); ++i) {
    CHECK(a.requests[i].id == static_cast<RequestId>(i));
    CHECK(a.requests[i].pickup == b.requests[i].pickup);
    CHECK(a.requests[i].pickup != a.requests[i].dropoff);
    CHECK(a.requests[i].arrival_time < 20 * 60);
    if (i) CHECK(a.requests[i - 1].arrival_time <= a.requests[i].arrival_time);
  }
  auto hot = gen_requests(net, 12, 20, 60, 1, HotspotProfile::two_centers(net));
  CHECK_FALSE(hot.requests.empty());
}
