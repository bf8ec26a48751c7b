#include "poolmatch/combos.hpp"

#include <algorithm>
#include <sstream>

namespace poolmatch {

namespace {

std::string describe(const Combo& combo) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < combo.size(); ++i) os << (i ? "," : "") << combo[i];
  os << ']';
  return os.str();
}

}  // namespace

bool InfeasibleStore::blocks(const Combo& combo) const {
  return std::any_of(sets_.begin(), sets_.end(), [&](const Combo& s) {
    return std::includes(combo.begin(), combo.end(), s.begin(), s.end());
  });
}

bool InfeasibleStore::insert_minimal(const Combo& combo) {
  if (blocks(combo)) return false;
  std::erase_if(sets_, [&](const Combo& s) { return std::includes(s.begin(), s.end(), combo.begin(), combo.end()); });
  sets_.push_back(combo);
  return true;
}

bool blocked_by_store(const InfeasibleStore& store, const Combo& combo) { return store.blocks(combo); }

InfeasibleStore insert_minimal(InfeasibleStore store, const Combo& combo) {
  store.insert_minimal(combo);
  return store;
}

OracleError::OracleError(const Combo& combo, const std::string& what)
    : std::runtime_error("feasibility check failed for " + describe(combo) + ": " + what), combo_(combo) {}

ComboResult generate_feasible_combos(std::size_t max_size, std::span<const RequestId> requests,
                                     const ComboOracle& oracle, RoutePlan empty_plan) {
  std::vector<RequestId> pool(requests.begin(), requests.end());
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end())
    throw std::invalid_argument("duplicate request id in combo pool");

  ComboResult out;
  out.feasible.emplace(Combo{}, std::move(empty_plan));

  std::vector<Combo> level{Combo{}};
  for (std::size_t size = 1; size <= max_size && !level.empty(); ++size) {
    std::vector<Combo> next;
    for (const Combo& parent : level) {
      auto start = parent.empty() ? pool.begin() : std::upper_bound(pool.begin(), pool.end(), parent.back());
      for (auto it = start; it != pool.end(); ++it) {
        Combo child = parent;
        child.push_back(*it);
        if (out.store.blocks(child)) {
          ++out.stats.blocked;
          continue;
        }
        ++out.stats.oracle_calls;
        std::optional<RoutePlan> plan;
        try {
          plan = oracle(child);
        } catch (const std::exception& e) {
          throw OracleError(child, e.what());
        }
        if (!plan) {
          ++out.stats.infeasible;
          out.store.insert_minimal(child);
          continue;
        }
        out.feasible.emplace(child, std::move(*plan));
        next.push_back(std::move(child));
      }
    }
    level = std::move(next);
  }
  return out;
}

}  // namespace poolmatch
