#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "poolmatch/core.hpp"

namespace poolmatch {

// Minimal infeasible request sets found while expanding one vehicle's tree.
// No stored set is a superset of another.
class InfeasibleStore {
 public:
  // True iff some stored set is a subset of `combo` (both sorted).
  bool blocks(const Combo& combo) const;
  // Adds `combo` unless a stored subset already implies it; drops stored
  // supersets of it. Returns true if the store changed.
  bool insert_minimal(const Combo& combo);

  const std::vector<Combo>& sets() const { return sets_; }
  std::size_t size() const { return sets_.size(); }

 private:
  std::vector<Combo> sets_;
};

bool blocked_by_store(const InfeasibleStore& store, const Combo& combo);
InfeasibleStore insert_minimal(InfeasibleStore store, const Combo& combo);

using ComboOracle = std::function<std::optional<RoutePlan>(const Combo&)>;

// Raised when the feasibility oracle throws; names the combo being checked.
class OracleError : public std::runtime_error {
 public:
  OracleError(const Combo& combo, const std::string& what);
  const Combo& combo() const { return combo_; }

 private:
  Combo combo_;
};

struct ComboStats {
  std::size_t oracle_calls = 0;
  std::size_t blocked = 0;       // candidates rejected by the store, never checked
  std::size_t infeasible = 0;    // candidates the oracle rejected
};

struct ComboResult {
  std::map<Combo, RoutePlan> feasible;  // includes the empty combo
  InfeasibleStore store;
  ComboStats stats;
};

// Level-wise tree expansion. Level k extends each feasible (k-1)-combo with
// requests whose id exceeds its largest id, so every subset is seen once.
// A candidate with a stored infeasible subset is discarded without calling
// the oracle; one the oracle rejects is stored. Combos never exceed max_size.
//
// Requires a monotone oracle: every superset of an infeasible combo is
// infeasible. The result is then exactly the feasible part of the powerset.
ComboResult generate_feasible_combos(std::size_t max_size, std::span<const RequestId> requests,
                                     const ComboOracle& oracle, RoutePlan empty_plan = {});

}  // namespace poolmatch
