#include <doctest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "poolmatch/assignment.hpp"

using namespace poolmatch;
using namespace poolmatch::assign;

namespace {

ScoredAction act(VehicleId v, Combo c, double s) { return ScoredAction{v, std::move(c), {}, s}; }

std::vector<Combo> combos_of(const JointAssignment& a) {
  std::vector<Combo> out;
  for (auto& [v, x] : a.chosen) out.push_back(x.combo);
  return out;
}

}  // namespace

TEST_CASE("small examples") {
  std::vector<RequestId> r1{1};
  {
    std::vector<VehicleActions> a{{0, {act(0, {}, 0), act(0, {1}, 1)}}};
    auto res = solve_assignment(a, r1);
    CHECK(res.chosen.at(0).combo == Combo{1});
    CHECK(res.objective == 1);
  }
  {
    std::vector<VehicleActions> a{{0, {act(0, {}, 0), act(0, {1}, 2)}}, {1, {act(1, {}, 0), act(1, {1}, 3)}}};
    auto res = solve_assignment(a, r1);
    CHECK(res.chosen.at(0).combo.empty());
    CHECK(res.chosen.at(1).combo == Combo{1});
  }
  {
    std::vector<RequestId> r12{1, 2};
    std::vector<VehicleActions> a{{0, {act(0, {}, 0), act(0, {1, 2}, 2.5), act(0, {1}, 2.0)}},
                                  {1, {act(1, {}, 0), act(1, {2}, 1.0)}}};
    auto res = solve_assignment(a, r12);
    CHECK(res.objective == doctest::Approx(3.0));
    CHECK(res.chosen.at(0).combo == Combo{1});
    CHECK(res.chosen.at(1).combo == Combo{2});
    CHECK(check_assignment(a, r12, res).empty());
    CHECK(solve_assignment_bruteforce(a, r12).objective == doctest::Approx(3.0));
  }
  {
    std::vector<VehicleActions> a{{0, {act(0, {}, 0)}}, {1, {act(1, {}, 0)}}};
    auto res = solve_assignment_bruteforce(a, {});
    CHECK(res.objective == 0);
    CHECK(res.chosen.size() == 2);
  }
}

TEST_CASE("argument errors") {
  std::vector<RequestId> r1{1};
  std::vector<VehicleActions> no_empty{{0, {act(0, {1}, 1)}}};
  CHECK_THROWS_AS(solve_assignment(no_empty, r1), std::invalid_argument);
  std::vector<VehicleActions> unknown{{0, {act(0, {}, 0), act(0, {7}, 1)}}};
  CHECK_THROWS_AS(solve_assignment(unknown, r1), std::invalid_argument);
  std::vector<VehicleActions> twice{{0, {act(0, {}, 0)}}, {0, {act(0, {}, 0)}}};
  CHECK_THROWS_AS(solve_assignment(twice, r1), std::invalid_argument);

  fixture::Rng rng(1);
  auto big = fixture::random_actions(rng, 12, 6, 8, false);
  for (auto& v : big)
    while (v.actions.size() < 4) v.actions.push_back(act(v.vehicle, {}, -1));
  CHECK_THROWS_AS(solve_assignment_bruteforce(big, fixture::request_ids(6)), std::length_error);
}

TEST_CASE("equal to exhaustive search, tie rule included") {
  fixture::Rng rng(77);
  for (int rep = 0; rep < 300; ++rep) {
    const auto nv = static_cast<std::size_t>(fixture::uniform_int(rng, 1, 5));
    const auto nr = static_cast<std::size_t>(fixture::uniform_int(rng, 1, 6));
    auto actions = fixture::random_actions(rng, nv, nr, 8, rep % 2 == 1);
    auto ids = fixture::request_ids(nr);
    auto got = solve_assignment(actions, ids);
    auto want = oracle::best_assignment(actions);
    CHECK(got.objective == doctest::Approx(want.objective));
    CHECK(combos_of(got) == want.combos);
    CHECK(check_assignment(actions, ids, got).empty());
    auto brute = solve_assignment_bruteforce(actions, ids);
    CHECK(combos_of(brute) == want.combos);
  }
}

TEST_CASE("scaling scores keeps the choice") {
  fixture::Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    auto actions = fixture::random_actions(rng, 4, 5, 8, false);
    auto ids = fixture::request_ids(5);
    auto base = solve_assignment(actions, ids);
    for (auto& v : actions)
      for (auto& a : v.actions) a.score *= 2.5;
    CHECK(combos_of(solve_assignment(actions, ids)) == combos_of(base));
  }
}

TEST_CASE("more actions never lower the optimum") {
  fixture::Rng rng(10);
  for (int rep = 0; rep < 50; ++rep) {
    auto actions = fixture::random_actions(rng, 5, 6, 8, true);
    auto ids = fixture::request_ids(6);
    auto smaller = actions;
    for (auto& v : smaller)
      if (v.actions.size() > 1) v.actions.resize(1 + v.actions.size() / 2);
    CHECK(solve_assignment(actions, ids).objective >= solve_assignment(smaller, ids).objective - 1e-12);
  }
}

TEST_CASE("independent groups and node limits") {
  fixture::Rng rng(13);
  auto a = fixture::random_actions(rng, 30, 12, 8, true);
  auto ids = fixture::request_ids(12);
  AssignmentStats exact_stats;
  auto exact = solve_assignment(a, ids, &exact_stats);
  CHECK(exact_stats.optimal);
  CHECK(exact_stats.nodes > 0);

  AssignmentStats cut;
  auto limited = solve_assignment(a, ids, &cut, 5);
  CHECK(check_assignment(a, ids, limited).empty());
  CHECK(limited.objective <= exact.objective + 1e-9);
  CHECK(cut.nodes <= 5 * std::max<std::size_t>(cut.components, 1));

  // two vehicles that share nothing are solved apart
  std::vector<RequestId> r2{1, 2};
  std::vector<VehicleActions> split{{0, {act(0, {}, 0), act(0, {1}, 1)}}, {1, {act(1, {}, 0), act(1, {2}, 1)}}};
  AssignmentStats s;
  solve_assignment(split, r2, &s);
  CHECK(s.components == 2);
  CHECK(s.largest_component == 1);
}
