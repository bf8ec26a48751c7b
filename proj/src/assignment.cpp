#include "poolmatch/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace poolmatch::assign {

namespace {

class Bits {
 public:
  explicit Bits(std::size_t n = 0) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool intersects(const Bits& o) const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] & o.words_[w]) return true;
    return false;
  }
  void merge(const Bits& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
  }
  void remove(const Bits& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= ~o.words_[w];
  }
  void intersect(const Bits& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
  }
  bool test(std::size_t i) const { return words_[i >> 6] >> (i & 63) & 1; }
  const std::vector<std::uint64_t>& words() const { return words_; }

 private:
  std::vector<std::uint64_t> words_;
};

struct Option {
  const ScoredAction* action;
  Bits uses;
};

struct Prepared {
  std::vector<VehicleId> vehicles;           // ascending
  std::vector<std::vector<Option>> options;  // per vehicle, combos ascending
};

Prepared prepare(std::span<const VehicleActions> actions, std::span<const RequestId> requests) {
  std::unordered_map<RequestId, std::size_t> bit;
  for (RequestId r : requests)
    if (!bit.emplace(r, bit.size()).second) throw std::invalid_argument("duplicate request id " + std::to_string(r));

  std::vector<const VehicleActions*> order;
  for (const VehicleActions& va : actions) order.push_back(&va);
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->vehicle < b->vehicle; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i]->vehicle == order[i - 1]->vehicle)
      throw std::invalid_argument("vehicle " + std::to_string(order[i]->vehicle) + " listed twice");

  Prepared p;
  for (const VehicleActions* va : order) {
    std::vector<Option> opts;
    bool has_empty = false;
    for (const ScoredAction& a : va->actions) {
      if (!std::isfinite(a.score)) throw std::invalid_argument("non-finite action score");
      Bits uses(bit.size());
      for (RequestId r : a.combo) {
        auto it = bit.find(r);
        if (it == bit.end()) throw std::invalid_argument("action uses unknown request " + std::to_string(r));
        uses.set(it->second);
      }
      has_empty = has_empty || a.combo.empty();
      opts.push_back({&a, std::move(uses)});
    }
    if (!has_empty)
      throw std::invalid_argument("vehicle " + std::to_string(va->vehicle) + " has no empty-combo action");
    // Lexicographic combo order; among duplicate combos the better score first.
    std::stable_sort(opts.begin(), opts.end(), [](const Option& a, const Option& b) {
      if (a.action->combo != b.action->combo) return a.action->combo < b.action->combo;
      return a.action->score > b.action->score;
    });
    p.vehicles.push_back(va->vehicle);
    p.options.push_back(std::move(opts));
  }
  return p;
}

JointAssignment assemble(const Prepared& p, const std::vector<std::size_t>& pick) {
  JointAssignment out;
  for (std::size_t v = 0; v < p.vehicles.size(); ++v) {
    const ScoredAction& a = *p.options[v][pick[v]].action;
    out.objective += a.score;
    out.chosen.emplace(p.vehicles[v], a);
  }
  return out;
}

double slack(double x) { return 1e-9 * (1.0 + std::abs(x)); }

// Branch and bound over one group of vehicles (indices into Prepared), in
// vehicle order with each vehicle's actions in combo order.
//
// Bound: the constraint "each request at most once" is relaxed with
// per-request prices u >= 0. The remaining value is then at most the prices of
// the free requests later vehicles can still use plus, per remaining vehicle,
// its best compatible action net of the prices it consumes. Prices come from a
// subgradient pass at the root.
//
// Memo: what later vehicles can do depends only on which of their requests
// are taken. A prefix reaching the same taken set with no more value than an
// earlier prefix is cut; the earlier one is also lexicographically smaller.
class GroupSearch {
 public:
  GroupSearch(const Prepared& p, std::vector<std::size_t> members, std::size_t n_requests, std::size_t node_limit)
      : p_(p), members_(std::move(members)), n_bits_(n_requests), node_limit_(node_limit), used_(n_requests),
        pick_(members_.size(), 0) {
    const std::size_t n = members_.size();
    usable_.resize(n);
    request_bits_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& opts = p_.options[members_[i]];
      double idle = -INFINITY;
      for (const Option& o : opts)
        if (o.action->combo.empty()) idle = std::max(idle, o.action->score);
      request_bits_[i].resize(opts.size());
      for (std::size_t k = 0; k < opts.size(); ++k) {
        // Scoring below idling is never optimal: swapping to the empty
        // combo frees requests and gains value.
        if (opts[k].action->score < idle) continue;
        if (opts[k].action->score != std::floor(opts[k].action->score) || std::abs(opts[k].action->score) > 1e12)
          integral_ = false;
        usable_[i].push_back(k);
        for (std::size_t bit = 0; bit < n_bits_; ++bit)
          if (opts[k].uses.test(bit)) request_bits_[i][k].push_back(bit);
      }
    }
    future_.assign(n + 1, Bits(n_bits_));
    for (std::size_t d = n; d-- > 0;) {
      future_[d] = future_[d + 1];
      for (std::size_t k : usable_[d]) future_[d].merge(p_.options[members_[d]][k].uses);
    }
    price_.assign(n_bits_, 0.0);
    memo_.resize(n + 1);
  }

  std::vector<std::size_t> run(std::size_t& nodes) {
    greedy();
    improve();
    price_requests();
    const std::size_t n = members_.size();
    reduced_.resize(n);
    by_reduced_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& opts = p_.options[members_[i]];
      reduced_[i].assign(opts.size(), -INFINITY);
      for (std::size_t k : usable_[i]) reduced_[i][k] = opts[k].action->score - price_of(i, k);
      by_reduced_[i] = usable_[i];
      std::stable_sort(by_reduced_[i].begin(), by_reduced_[i].end(),
                       [&](std::size_t a, std::size_t b) { return reduced_[i][a] > reduced_[i][b]; });
    }
    root_bound_ = free_price(0) + best_reduced(0);
    if (integral_) root_bound_ = std::floor(root_bound_ + 1e-6);
    dfs(0, 0.0);
    nodes += nodes_;
    return best_pick_;
  }

  // The returned value is optimal: the search finished, or the incumbent
  // already meets the root bound (only the tie rule may be unresolved).
  bool proven() const { return !stopped_ || best_ + slack(best_) + 1e-9 * static_cast<double>(members_.size()) >= root_bound_; }

 private:
  double price_of(std::size_t i, std::size_t k) const {
    double s = 0.0;
    for (std::size_t b : request_bits_[i][k]) s += price_[b];
    return s;
  }

  const Option& option(std::size_t i, std::size_t k) const { return p_.options[members_[i]][k]; }

  // Best compatible action of vehicle i given used_; ties keep `keep`.
  std::size_t best_fit(std::size_t i, std::size_t keep) const {
    std::size_t choice = keep;
    double best = keep < p_.options[members_[i]].size() ? option(i, keep).action->score : -INFINITY;
    for (std::size_t k : usable_[i]) {
      if (option(i, k).uses.intersects(used_)) continue;
      if (option(i, k).action->score > best) {
        best = option(i, k).action->score;
        choice = k;
      }
    }
    return choice;
  }

  double total(const std::vector<std::size_t>& pick) const {
    double v = 0.0;
    for (std::size_t i = 0; i < pick.size(); ++i) v += option(i, pick[i]).action->score;
    return v;
  }

  void greedy() {
    const std::size_t none = static_cast<std::size_t>(-1);
    for (std::size_t i = 0; i < members_.size(); ++i) {
      pick_[i] = best_fit(i, none);
      used_.merge(option(i, pick_[i]).uses);
    }
    for (std::size_t i = 0; i < members_.size(); ++i) used_.remove(option(i, pick_[i]).uses);
    best_pick_ = pick_;
    best_ = total(pick_);
    heuristic_ = true;
  }

  // One-vehicle moves on the incumbent until none helps.
  void improve() {
    std::vector<std::size_t> pick = best_pick_;
    for (std::size_t i = 0; i < members_.size(); ++i) used_.merge(option(i, pick[i]).uses);
    for (int pass = 0; pass < 20; ++pass) {
      bool changed = false;
      for (std::size_t i = 0; i < members_.size(); ++i) {
        used_.remove(option(i, pick[i]).uses);
        const std::size_t k = best_fit(i, pick[i]);
        changed = changed || k != pick[i];
        pick[i] = k;
        used_.merge(option(i, pick[i]).uses);
      }
      if (!changed) break;
    }
    for (std::size_t i = 0; i < members_.size(); ++i) used_.remove(option(i, pick[i]).uses);
    const double v = total(pick);
    if (v > best_) {
      best_ = v;
      best_pick_ = pick;
    }
  }

  // Lagrangian dual value for the current prices; fills the argmax actions.
  double dual(std::vector<std::size_t>& arg) const {
    double value = 0.0;
    for (std::size_t b = 0; b < n_bits_; ++b)
      if (future_[0].test(b)) value += price_[b];
    for (std::size_t i = 0; i < members_.size(); ++i) {
      double best = -INFINITY;
      for (std::size_t k : usable_[i]) {
        const double r = option(i, k).action->score - price_of(i, k);
        if (r > best) {
          best = r;
          arg[i] = k;
        }
      }
      value += best;
    }
    return value;
  }

  void price_requests() {
    if (members_.size() < 2) return;
    std::vector<std::size_t> arg(members_.size(), 0);
    std::vector<double> best_price = price_;
    std::vector<double> g(n_bits_, 0.0);
    double best = dual(arg);
    double scale = 2.0;
    for (int it = 0, stall = 0; it < 300 && scale > 1e-4; ++it) {
      const double value = dual(arg);
      if (value < best - 1e-12) {
        best = value;
        best_price = price_;
        stall = 0;
      } else if (++stall >= 10) {
        scale *= 0.5;
        stall = 0;
      }
      if (value - best_ <= slack(best_)) break;  // bound meets the incumbent
      double norm = 0.0;
      for (std::size_t b = 0; b < n_bits_; ++b) g[b] = future_[0].test(b) ? 1.0 : 0.0;
      for (std::size_t i = 0; i < members_.size(); ++i)
        for (std::size_t b : request_bits_[i][arg[i]]) g[b] -= 1.0;
      for (std::size_t b = 0; b < n_bits_; ++b) {
        if (price_[b] <= 0.0 && g[b] > 0.0) g[b] = 0.0;
        norm += g[b] * g[b];
      }
      if (norm == 0.0) break;  // the argmax is a packing; prices are optimal
      const double step = scale * (value - best_) / norm;
      for (std::size_t b = 0; b < n_bits_; ++b) price_[b] = std::max(0.0, price_[b] - step * g[b]);
    }
    price_ = best_price;
  }

  // Prices of requests still free for vehicles from `depth` on.
  double free_price(std::size_t depth) const {
    double b = 0.0;
    for (std::size_t bit = 0; bit < n_bits_; ++bit)
      if (price_[bit] > 0.0 && future_[depth].test(bit) && !used_.test(bit)) b += price_[bit];
    return b;
  }

  // Sum over vehicles from `depth` on of the best compatible reduced score.
  double best_reduced(std::size_t depth) const {
    double b = 0.0;
    for (std::size_t i = depth; i < members_.size(); ++i) {
      for (std::size_t k : by_reduced_[i]) {
        if (!option(i, k).uses.intersects(used_)) {
          b += reduced_[i][k];
          break;
        }
      }
    }
    return b;
  }

  bool cut(double bound, std::size_t depth) const {
    if (integral_) bound = std::floor(bound + 1e-6);
    const double ceiling = bound + slack(bound) + 1e-9 * static_cast<double>(members_.size() - depth + 1);
    return heuristic_ ? ceiling < best_ : ceiling <= best_;
  }

  bool seen_better(std::size_t depth, double value) {
    Bits state = used_;
    state.intersect(future_[depth]);
    auto [it, fresh] = memo_[depth].try_emplace(state.words(), value);
    if (fresh) return false;
    if (it->second >= value) return true;
    it->second = value;
    return false;
  }

  void dfs(std::size_t depth, double value) {
    if (stopped_) return;
    if (node_limit_ && nodes_ >= node_limit_) {
      stopped_ = true;
      return;
    }
    ++nodes_;
    if (depth == members_.size()) {
      if (value > best_ || (value == best_ && heuristic_)) {
        best_ = value;
        best_pick_ = pick_;
        heuristic_ = false;
      }
      return;
    }
    const double rest = best_reduced(depth + 1);
    const double free_next = free_price(depth + 1);
    double here = -INFINITY;
    for (std::size_t k : by_reduced_[depth])
      if (!option(depth, k).uses.intersects(used_)) {
        here = reduced_[depth][k];
        break;
      }
    if (cut(value + free_price(depth) + here + rest, depth)) return;
    if (seen_better(depth, value)) return;

    for (std::size_t k : usable_[depth]) {
      const Option& o = option(depth, k);
      if (o.uses.intersects(used_)) continue;
      // later vehicles lose k's requests and their best reduced scores can only drop
      double taken = 0.0;
      for (std::size_t b : request_bits_[depth][k])
        if (future_[depth + 1].test(b)) taken += price_[b];
      if (cut(value + o.action->score + free_next - taken + rest, depth + 1)) continue;
      pick_[depth] = k;
      used_.merge(o.uses);
      dfs(depth + 1, value + o.action->score);
      used_.remove(o.uses);
    }
  }

  struct WordsHash {
    std::size_t operator()(const std::vector<std::uint64_t>& w) const {
      std::uint64_t h = 0x9e3779b97f4a7c15ull;
      for (std::uint64_t x : w) h = (h ^ x) * 0x100000001b3ull + (h >> 29);
      return static_cast<std::size_t>(h);
    }
  };

  const Prepared& p_;
  std::vector<std::size_t> members_;
  std::size_t n_bits_;
  std::size_t node_limit_;
  bool stopped_ = false;
  std::vector<std::vector<std::size_t>> usable_;                    // per member, ascending combo order
  std::vector<std::vector<std::vector<std::size_t>>> request_bits_;  // per member, per option
  std::vector<Bits> future_;                                        // requests usable from depth d on
  std::vector<double> price_;
  std::vector<std::vector<double>> reduced_;
  std::vector<std::vector<std::size_t>> by_reduced_;
  std::vector<std::unordered_map<std::vector<std::uint64_t>, double, WordsHash>> memo_;
  Bits used_;
  std::vector<std::size_t> pick_;
  std::vector<std::size_t> best_pick_;
  double best_ = -INFINITY;
  double root_bound_ = INFINITY;
  bool integral_ = true;  // all scores whole numbers: so is the optimum
  bool heuristic_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

JointAssignment solve_assignment(std::span<const VehicleActions> actions, std::span<const RequestId> requests,
                                 AssignmentStats* stats, std::size_t node_limit) {
  Prepared p = prepare(actions, requests);
  const std::size_t n = p.vehicles.size();

  // Group vehicles whose action lists touch a common request.
  std::vector<std::size_t> root(n);
  std::iota(root.begin(), root.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  std::unordered_map<RequestId, std::size_t> owner;
  for (std::size_t v = 0; v < n; ++v) {
    for (const Option& o : p.options[v]) {
      for (RequestId r : o.action->combo) {
        auto [it, fresh] = owner.emplace(r, v);
        if (!fresh) {
          auto a = find(it->second), b = find(v);
          if (a != b) root[std::max(a, b)] = std::min(a, b);
        }
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t v = 0; v < n; ++v) groups[find(v)].push_back(v);

  AssignmentStats local;
  std::vector<std::size_t> pick(n, 0);
  for (auto& [r, members] : groups) {
    local.largest_component = std::max(local.largest_component, members.size());
    GroupSearch search(p, members, requests.size(), node_limit);
    std::vector<std::size_t> chosen = search.run(local.nodes);
    local.optimal = local.optimal && search.proven();
    for (std::size_t i = 0; i < members.size(); ++i) pick[members[i]] = chosen[i];
  }
  local.components = groups.size();
  if (stats) *stats = local;
  return assemble(p, pick);
}

JointAssignment solve_assignment_bruteforce(std::span<const VehicleActions> actions,
                                            std::span<const RequestId> requests, double max_product) {
  Prepared p = prepare(actions, requests);
  const std::size_t n = p.vehicles.size();
  double product = 1.0;
  for (const auto& o : p.options) product *= static_cast<double>(o.size());
  if (product > max_product) throw std::length_error("brute-force assignment oracle: search space too large");

  std::vector<std::size_t> pick(n, 0), best_pick;
  double best = -INFINITY;
  bool have = false;
  for (;;) {
    Bits used(requests.size());
    bool ok = true;
    double value = 0.0;
    for (std::size_t v = 0; v < n && ok; ++v) {
      const Option& o = p.options[v][pick[v]];
      if (o.uses.intersects(used)) ok = false;
      used.merge(o.uses);
      value += o.action->score;
    }
    if (ok && (!have || value > best)) {
      best = value;
      best_pick = pick;
      have = true;
    }
    std::size_t v = n;
    while (v > 0 && ++pick[v - 1] == p.options[v - 1].size()) pick[--v] = 0;
    if (v == 0) break;
  }
  return assemble(p, best_pick);
}

std::vector<std::string> check_assignment(std::span<const VehicleActions> actions, std::span<const RequestId> requests,
                                          const JointAssignment& result) {
  std::vector<std::string> problems;
  std::map<RequestId, int> served;
  for (RequestId r : requests) served[r] = 0;
  double objective = 0.0;
  std::size_t vehicles = 0;
  for (const VehicleActions& va : actions) {
    ++vehicles;
    auto it = result.chosen.find(va.vehicle);
    if (it == result.chosen.end()) {
      problems.push_back("vehicle " + std::to_string(va.vehicle) + " has no action");
      continue;
    }
    bool offered = std::any_of(va.actions.begin(), va.actions.end(), [&](const ScoredAction& a) {
      return a.combo == it->second.combo && a.score == it->second.score;
    });
    if (!offered) problems.push_back("vehicle " + std::to_string(va.vehicle) + " got an action it was not offered");
    for (RequestId r : it->second.combo) {
      auto s = served.find(r);
      if (s == served.end())
        problems.push_back("unknown request " + std::to_string(r));
      else if (++s->second > 1)
        problems.push_back("request " + std::to_string(r) + " assigned more than once");
    }
  }
  for (const auto& [vid, a] : result.chosen) objective += a.score;
  if (result.chosen.size() != vehicles) problems.push_back("assignment lists vehicles that were not offered");
  if (std::abs(objective - result.objective) > slack(objective)) problems.push_back("objective does not match choices");
  return problems;
}

}  // namespace poolmatch::assign
