#include <doctest.h>

#include <sstream>

#include "poolmatch/demand.hpp"
#include "poolmatch/simulator.hpp"

using namespace poolmatch;
using namespace poolmatch::sim;

namespace {

Seconds no_wait(RequestId, NodeId) { return -kUnreachable; }

SimConfig small_config(std::size_t vehicles, std::size_t horizon) {
  SimConfig c;
  c.num_vehicles = vehicles;
  c.horizon = horizon;
  c.batch_size = 8;
  c.widths = {valuefn::kFeatureDim, 8, 1};
  c.record_timing = false;
  return c;
}

std::string csv_of(const Metrics& m) {
  std::ostringstream os;
  write_epoch_csv(m, os);
  return os.str();
}

}  // namespace

TEST_CASE("modes and config validation") {
  CHECK(parse_mode("pickup_only") == Mode::pickup_only);
  CHECK(std::string(to_string(Mode::dropoff_only)) == "dropoff_only");
  CHECK_THROWS_AS(parse_mode("teleport"), std::invalid_argument);
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = SimConfig{};
  c.widths = {3, 1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(substream_seed(1, Stream::requests) != substream_seed(1, Stream::vehicles));
  CHECK(substream_seed(1, Stream::requests) == substream_seed(1, Stream::requests));
}

TEST_CASE("motion: idle vehicle") {
  auto net = generate_grid(3, 3, 100, 10);
  Vehicle v;
  v.location = 4;
  auto res = simulate_motion(v, 0, 60, net, no_wait);
  CHECK(res.events.empty());
  CHECK(res.distance == 0);
  CHECK(v.location == 4);
}

TEST_CASE("motion: pickup waits for the walker, then drop-off") {
  auto net = generate_grid(5, 1 + 1, 100, 10);
  Vehicle v;
  v.location = 0;
  v.committed = {7};
  v.plan.stops = {Stop{2, {StopKind::pickup, 0}, 0, 7}, Stop{4, {StopKind::dropoff, 0}, 0, 7}};
  auto ready = [](RequestId, NodeId) { return 45.0; };
  auto res = simulate_motion(v, 0, 60, net, ready);
  REQUIRE(res.events.size() == 1);
  CHECK(res.events[0].kind == EventKind::pickup);
  CHECK(res.events[0].time == doctest::Approx(45));
  CHECK(res.max_onboard == 1);
  CHECK(v.committed.empty());
  // the edge begun at 55 s is finished; the drop-off at 65 s belongs to the next epoch
  CHECK(v.location == 4);
  CHECK(v.available_at == doctest::Approx(65));
  CHECK(res.distance == doctest::Approx(400));
  auto next = simulate_motion(v, 60, 60, net, ready);
  REQUIRE(next.events.size() == 1);
  CHECK(next.events[0].kind == EventKind::dropoff);
  CHECK(next.events[0].time == doctest::Approx(65));
  CHECK(v.onboard.empty());
  CHECK(v.plan.stops.empty());
}

TEST_CASE("motion: stops at the epoch boundary and resumes") {
  auto net = generate_grid(10, 2, 100, 10);
  Vehicle v;
  v.location = 0;
  v.onboard = {{3, 0}};
  v.plan.stops = {Stop{9, {StopKind::onboard_dropoff, 0}, 0, 3}};
  auto a = simulate_motion(v, 0, 35, net, no_wait);
  CHECK(a.events.empty());
  CHECK(v.location == 4);
  CHECK(v.available_at == doctest::Approx(40));
  auto b = simulate_motion(v, 35, 60, net, no_wait);
  REQUIRE(b.events.size() == 1);
  CHECK(b.events[0].time == doctest::Approx(90));
  CHECK(a.distance + b.distance == doctest::Approx(900));
}

TEST_CASE("motion: desynchronized plan") {
  auto net = generate_grid(3, 3, 100, 10);
  Vehicle v;
  v.location = 0;
  v.plan.stops = {Stop{2, {StopKind::pickup, 0}, 0, 5}};
  CHECK_THROWS_AS(simulate_motion(v, 0, 60, net, no_wait), std::logic_error);
}

TEST_CASE("no requests: nothing served, nothing driven") {
  auto net = generate_grid(5, 5, 100, 10);
  auto m = run(small_config(3, 5), net, RequestStream{});
  CHECK(m.served == 0);
  CHECK(m.total_drive_distance == 0);
  CHECK(m.epochs.size() == 5);
  CHECK_FALSE(m.partial);
}

TEST_CASE("one request next to one vehicle is served") {
  auto net = generate_grid(5, 5, 100, 10);
  auto cfg = small_config(1, 12);
  Simulator probe(cfg, net, RequestStream{});
  const NodeId at = probe.vehicles()[0].location;
  const NodeId to = at == 0 ? 24 : 0;
  RequestStream s;
  s.requests = {Request{1, at, to, 5}};
  for (Mode mode : {Mode::flexible, Mode::fixed}) {
    cfg.mode = mode;
    auto m = run(cfg, net, s);
    CHECK(m.ingested == 1);
    CHECK(m.served == 1);
    CHECK(m.audit.violations() == 0);
    CHECK(m.audit.checked == 1);
  }
}

TEST_CASE("requests nobody can reach are rejected") {
  auto net = generate_grid(20, 20, 100, 10);
  auto cfg = small_config(1, 10);
  cfg.params = default_params(20);
  Simulator probe(cfg, net, RequestStream{});
  const NodeId at = probe.vehicles()[0].location;
  const NodeId far = at < 200 ? 399 : 0;
  RequestStream s;
  const NodeId drop = far == 0 ? 1 : 398;
  s.requests = {Request{1, far, drop, 1}};
  auto m = run(cfg, net, s);
  CHECK(m.served == 0);
  CHECK(m.rejected == 1);
}

TEST_CASE("degenerate requests are rejected on arrival") {
  auto net = generate_grid(5, 5, 100, 10);
  RequestStream s;
  s.requests = {Request{1, 3, 3, 1}};
  auto m = run(small_config(2, 3), net, s);
  CHECK(m.rejected == 1);
  CHECK(m.epochs[0].rejected == 1);
}

TEST_CASE("stream ending early flags a partial run") {
  auto net = generate_grid(5, 5, 100, 10);
  RequestStream s = gen_requests(net, 3, 2, 60, 4);
  s.end_time = 120;
  auto m = run(small_config(2, 10), net, s);
  CHECK(m.partial);
  CHECK(m.epochs.size() < 10);
}

TEST_CASE("a short busy run: audits, conservation and determinism") {
  auto net = generate_grid(8, 8, 100, 10);
  auto cfg = small_config(6, 15);
  auto stream = gen_requests(net, 5, cfg.horizon, 60, substream_seed(cfg.seed, Stream::requests));
  auto a = run(cfg, net, stream);
  auto b = run(cfg, net, stream);
  CHECK(a.audit.violations() == 0);
  CHECK(a.served > 0);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(summary_json(cfg, a) == summary_json(cfg, b));
  double dist = 0;
  for (double d : a.vehicle_distance) dist += d;
  CHECK(dist == doctest::Approx(a.total_drive_distance));
  CHECK(csv_of(a).rfind("epoch,served,rejected,active,distance_m,assign_ms,combo_ms,rvrp_ms\n", 0) == 0);

  cfg.seed = 2;
  auto c = run(cfg, net, stream);
  CHECK(csv_of(c) != csv_of(a));
}

TEST_CASE("decide leaves the state alone and flexible dominates fixed") {
  auto net = generate_grid(8, 8, 100, 10);
  auto cfg = small_config(5, 8);
  cfg.assign_node_limit = 0;
  auto stream = gen_requests(net, 4, cfg.horizon, 60, 3);
  Simulator sim(cfg, net, stream);
  while (sim.prepare()) {
    auto before = sim.records().size();
    auto flex = sim.decide(Mode::flexible, 0.0);
    auto fixed = sim.decide(Mode::fixed, 0.0);
    CHECK(sim.records().size() == before);
    CHECK(flex.assign_stats.optimal);
    CHECK(flex.assignment.objective >= fixed.assignment.objective);
    auto again = sim.decide(Mode::flexible, 0.0);
    CHECK(again.assignment.objective == flex.assignment.objective);
    sim.step();
  }
  CHECK(sim.finished());
}

TEST_CASE("a saved value net seeds a new run") {
  auto net = generate_grid(6, 6, 100, 10);
  auto cfg = small_config(3, 4);
  valuefn::ValueNet v({valuefn::kFeatureDim, 8, 1}, 5);
  Simulator sim(cfg, net, RequestStream{}, v);
  CHECK(sim.value_net() == v);
  CHECK_THROWS_AS(Simulator(cfg, net, RequestStream{}, valuefn::ValueNet({3, 1}, 1)), std::invalid_argument);
}
