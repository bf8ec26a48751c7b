#include "poolmatch/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <thread>

#include "poolmatch/combos.hpp"
#include <json.hpp>

namespace poolmatch::sim {

namespace {

constexpr double kAuditTol = 1e-6;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Area trimmed(Area area, std::size_t keep) {
  if (keep == 0 || area.members.size() <= keep) return area;
  std::stable_sort(area.members.begin(), area.members.end(),
                   [](const AreaMember& a, const AreaMember& b) { return a.walk < b.walk; });
  area.members.resize(keep);
  std::sort(area.members.begin(), area.members.end(),
            [](const AreaMember& a, const AreaMember& b) { return a.node < b.node; });
  return area;
}

bool extends_pickup(Mode m) { return m == Mode::flexible || m == Mode::pickup_only; }
bool extends_dropoff(Mode m) { return m == Mode::flexible || m == Mode::dropoff_only; }

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::flexible: return "flexible";
    case Mode::fixed: return "fixed";
    case Mode::pickup_only: return "pickup_only";
    case Mode::dropoff_only: return "dropoff_only";
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  for (Mode m : {Mode::flexible, Mode::fixed, Mode::pickup_only, Mode::dropoff_only})
    if (text == to_string(m)) return m;
  throw std::invalid_argument("unknown mode '" + text + "'");
}

void SimConfig::validate() const {
  if (num_vehicles == 0) throw std::invalid_argument("num_vehicles must be positive");
  if (capacity == 0) throw std::invalid_argument("capacity must be positive");
  if (horizon == 0) throw std::invalid_argument("horizon must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(params.pickup_delay > 0.0) || !(params.detour_delay > 0.0) || !(params.epoch_len > 0.0))
    throw std::invalid_argument("delays and epoch length must be positive");
  if (!(params.walk_speed > 0.0) || !(params.max_walk >= 0.0))
    throw std::invalid_argument("walk speed must be positive and walk radius non-negative");
  if (max_candidates == 0) throw std::invalid_argument("max_candidates must be positive");
  if (batch_size == 0 || replay_capacity == 0 || target_period == 0)
    throw std::invalid_argument("batch size, replay capacity and target period must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (widths.empty() || widths.front() != valuefn::kFeatureDim || widths.back() != 1)
    throw std::invalid_argument("value net widths must start at the feature size and end in 1");
  if (workers == 0) throw std::invalid_argument("workers must be positive");
}

std::uint64_t substream_seed(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

MotionResult simulate_motion(Vehicle& vehicle, Seconds now, Seconds dt, const RoadNetwork& net,
                             const WalkerReady& ready) {
  MotionResult res;
  res.max_onboard = vehicle.onboard.size();
  const Seconds end = now + dt;
  Seconds t = std::max(now, vehicle.available_at);
  auto& stops = vehicle.plan.stops;
  std::size_t done = 0;
  while (done < stops.size()) {
    const Stop& s = stops[done];
    if (vehicle.location == s.node) {
      if (s.area.kind == StopKind::pickup) {
        auto it = std::find(vehicle.committed.begin(), vehicle.committed.end(), s.request);
        if (it == vehicle.committed.end())
          throw std::logic_error("vehicle " + std::to_string(vehicle.id) + " plans pickup of request " +
                                 std::to_string(s.request) + " it does not hold");
        const Seconds at = std::max(t, ready(s.request, s.node));
        if (at >= end) break;
        t = at;
        vehicle.committed.erase(it);
        vehicle.onboard.push_back({s.request, t});
        res.max_onboard = std::max(res.max_onboard, vehicle.onboard.size());
        res.events.push_back({EventKind::pickup, s.request, s.node, t});
      } else {
        auto it = std::find_if(vehicle.onboard.begin(), vehicle.onboard.end(),
                               [&](const OnboardPassenger& p) { return p.request == s.request; });
        if (it == vehicle.onboard.end())
          throw std::logic_error("vehicle " + std::to_string(vehicle.id) + " plans dropoff of request " +
                                 std::to_string(s.request) + " that is not on board");
        if (t >= end) break;
        vehicle.onboard.erase(it);
        res.events.push_back({EventKind::dropoff, s.request, s.node, t});
      }
      ++done;
      continue;
    }
    if (t >= end) break;
    const NodeId hop = net.next_hop(vehicle.location, s.node);
    if (hop == vehicle.location || net.drive_time(vehicle.location, s.node) == kUnreachable)
      throw std::logic_error("vehicle " + std::to_string(vehicle.id) + " cannot reach its next stop");
    const Edge& e = net.edge_between(vehicle.location, hop);
    t += e.drive_time;
    res.distance += e.length;
    vehicle.location = hop;
  }
  stops.erase(stops.begin(), stops.begin() + static_cast<std::ptrdiff_t>(done));
  vehicle.available_at = t;
  if (stops.empty()) vehicle.plan.total_time = 0.0;
  return res;
}

Simulator::Simulator(SimConfig config, const RoadNetwork& net, RequestStream stream,
                     std::optional<valuefn::ValueNet> value_net)
    : config_(std::move(config)),
      net_(net),
      stream_(std::move(stream)),
      replay_(config_.replay_capacity),
      replay_rng_(substream_seed(config_.seed, Stream::replay)) {
  config_.validate();
  if (net_.node_count() == 0) throw std::invalid_argument("empty road network");
  std::set<RequestId> ids;
  for (const Request& r : stream_.requests) {
    if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate request id " + std::to_string(r.id));
    if (!net_.valid(r.pickup) || !net_.valid(r.dropoff))
      throw std::invalid_argument("request " + std::to_string(r.id) + " uses an unknown node");
  }
  std::stable_sort(stream_.requests.begin(), stream_.requests.end(),
                   [](const Request& a, const Request& b) { return a.arrival_time < b.arrival_time; });

  std::mt19937_64 place(substream_seed(config_.seed, Stream::vehicles));
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(net_.node_count() - 1));
  for (std::size_t i = 0; i < config_.num_vehicles; ++i) {
    Vehicle v;
    v.id = static_cast<VehicleId>(i);
    v.capacity = config_.capacity;
    v.location = node(place);
    vehicles_.push_back(std::move(v));
  }
  last_features_.resize(vehicles_.size());
  metrics_.vehicle_distance.assign(vehicles_.size(), 0.0);

  features_ctx_ = valuefn::FeatureContext::from(net_, config_.params.pickup_delay);
  if (value_net) {
    if (value_net->input_dim() != valuefn::kFeatureDim)
      throw std::invalid_argument("value net input size does not match the feature size");
    value_net_ = std::move(*value_net);
  } else {
    value_net_ = valuefn::ValueNet(config_.widths, substream_seed(config_.seed, Stream::net_init));
  }
  value_net_.target_period = config_.target_period;
}

bool Simulator::finished() const { return stopped_ || epoch_ >= config_.horizon; }

std::size_t Simulator::in_flight() const {
  std::size_t n = pending_.size();
  for (const Vehicle& v : vehicles_) n += v.committed.size() + v.onboard.size();
  return n;
}

bool Simulator::prepare() {
  if (finished()) return false;
  if (prepared_) return true;
  const Seconds now = clock();
  if (stream_.end_time < now) {
    stopped_ = true;
    metrics_.partial = true;
    return false;
  }
  pending_record_ = EpochRecord{};
  pending_record_.epoch = epoch_;
  const DelayParams& p = config_.params;
  while (cursor_ < stream_.requests.size() && stream_.requests[cursor_].arrival_time < now) {
    const Request& r = stream_.requests[cursor_++];
    ++pending_record_.ingested;
    ++metrics_.ingested;
    RequestRecord rec;
    rec.request = r;
    if (r.pickup == r.dropoff) {
      // Nothing to route; counts as rejected.
      rec.status = RequestRecord::Status::rejected;
      ++pending_record_.rejected;
      ++metrics_.rejected;
      records_.emplace(r.id, std::move(rec));
      continue;
    }
    auto [pa, da] = resolve_overlap(net_, trimmed(build_area(net_, r, AreaKind::pickup, p), config_.area_points),
                                    trimmed(build_area(net_, r, AreaKind::dropoff, p), config_.area_points));
    rec.pickup_area = std::move(pa);
    rec.dropoff_area = std::move(da);
    records_.emplace(r.id, std::move(rec));
    pending_.insert(std::lower_bound(pending_.begin(), pending_.end(), r.id), r.id);
  }
  std::erase_if(pending_, [&](RequestId id) {
    RequestRecord& rec = records_.at(id);
    if (now - rec.request.arrival_time <= p.pickup_delay) return false;
    rec.status = RequestRecord::Status::rejected;
    ++pending_record_.rejected;
    ++metrics_.rejected;
    return true;
  });
  prepared_ = true;
  return true;
}

namespace {

// Per-decision view of the pending pool: areas under the decision's mode.
struct PoolEntry {
  const RequestRecord* rec;
  Area pickup, dropoff;
};

struct VehicleOutcome {
  assign::VehicleActions actions;
  std::vector<valuefn::StateFeatures> features;
  Seconds start_time = 0.0;
  std::size_t oracle_calls = 0;
  double combo_ms = 0.0, rvrp_ms = 0.0;
};

class Planner {
 public:
  Planner(const SimConfig& cfg, const RoadNetwork& net, const std::map<RequestId, RequestRecord>& records,
          const std::vector<PoolEntry>& pool, const valuefn::FeatureContext& ctx, const valuefn::ValueNet& vnet,
          double gamma, Seconds now, std::size_t epoch)
      : cfg_(cfg), net_(net), records_(records), pool_(pool), ctx_(ctx), vnet_(vnet), gamma_(gamma), now_(now),
        epoch_(epoch) {}

  VehicleOutcome plan(const Vehicle& v) const {
    VehicleOutcome out;
    const auto t0 = Clock::now();
    const DelayParams& p = cfg_.params;
    out.actions.vehicle = v.id;
    out.start_time = std::max(now_, v.available_at);

    rvrp::Instance base;
    base.start_node = v.location;
    base.start_time = out.start_time;
    base.reference = cfg_.reference;
    base.capacity = v.capacity;
    std::vector<RequestId> committed = v.committed;
    std::sort(committed.begin(), committed.end());
    for (RequestId id : committed) {
      const RequestRecord& rec = records_.at(id);
      rvrp::AwaitingRequest a;
      a.id = id;
      a.pickup = Area{id, AreaKind::pickup, rec.request.pickup, {{rec.pickup_node, rec.pickup_walk}}};
      a.dropoff = dropoff_for(rec);
      a.max_pickup_delay = p.pickup_delay;
      a.max_detour = p.detour_delay;
      a.arrival = rec.request.arrival_time;
      a.pickup_ref = rec.pickup_ref;
      a.walk_speed = p.walk_speed;
      base.awaiting.push_back(std::move(a));
    }
    std::vector<OnboardPassenger> onboard = v.onboard;
    std::sort(onboard.begin(), onboard.end(), [](auto& a, auto& b) { return a.request < b.request; });
    for (const OnboardPassenger& o : onboard) {
      const RequestRecord& rec = records_.at(o.request);
      base.onboard.push_back({o.request, dropoff_for(rec), o.pickup_time, p.detour_delay});
    }

    // The do-nothing action keeps the current stop sequence.
    RoutePlan current = rvrp::retime(net_, base, remap(v.plan.stops, base));

    const std::size_t room = v.capacity > v.load() ? v.capacity - v.load() : 0;
    std::vector<std::size_t> cand = room ? candidates(base) : std::vector<std::size_t>{};
    std::vector<RequestId> ids;
    for (std::size_t i : cand) ids.push_back(pool_[i].rec->request.id);

    double rvrp_ms = 0.0;
    auto oracle = [&](const Combo& combo) -> std::optional<RoutePlan> {
      rvrp::Instance inst = with_combo(base, combo);
      const auto s0 = Clock::now();
      auto plan = rvrp::solve(net_, inst);
      rvrp_ms += ms_since(s0);
      ++out.oracle_calls;
      return plan;
    };
    ComboResult combos = generate_feasible_combos(std::min<std::size_t>(room, ids.size()), ids, oracle, current);

    for (auto& [combo, plan] : combos.feasible) {
      valuefn::StateFeatures f = valuefn::post_decision_features(ctx_, v, combo, plan, now_, epoch_, cfg_.horizon);
      double score = immediate_reward(combo, plan, cfg_.objective);
      if (gamma_ > 0.0) score += gamma_ * vnet_.evaluate(f);
      out.actions.actions.push_back({v.id, combo, plan, score});
      out.features.push_back(std::move(f));
    }
    out.rvrp_ms = rvrp_ms;
    out.combo_ms = std::max(0.0, ms_since(t0) - rvrp_ms);
    return out;
  }

 private:
  // Requests already held by a vehicle keep the areas of the configured
  // mode, whatever mode this decision is evaluated under.
  Area dropoff_for(const RequestRecord& rec) const {
    const Mode mode = cfg_.mode;
    if (!extends_dropoff(mode)) return point_area(rec.request.id, AreaKind::dropoff, rec.request.dropoff);
    if (extends_pickup(mode)) return rec.dropoff_area;
    return resolve_overlap(net_, point_area(rec.request.id, AreaKind::pickup, rec.request.pickup),
                           trimmed(build_area(net_, rec.request, AreaKind::dropoff, cfg_.params), cfg_.area_points))
        .second;
  }

  // Stop areas are re-indexed against `inst` by request id; plans outlive
  // the instance they were solved for.
  static std::vector<Stop> remap(const std::vector<Stop>& stops, const rvrp::Instance& inst) {
    std::vector<Stop> out = stops;
    for (Stop& s : out) {
      bool found = false;
      for (std::size_t j = 0; j < inst.awaiting.size() && !found; ++j) {
        if (inst.awaiting[j].id != s.request) continue;
        s.area = {s.area.kind == StopKind::pickup ? StopKind::pickup : StopKind::dropoff, static_cast<std::uint32_t>(j)};
        found = true;
      }
      for (std::size_t k = 0; k < inst.onboard.size() && !found; ++k) {
        if (inst.onboard[k].id != s.request) continue;
        if (s.area.kind == StopKind::pickup) throw std::logic_error("pickup planned for an onboard passenger");
        s.area = {StopKind::onboard_dropoff, static_cast<std::uint32_t>(k)};
        found = true;
      }
      if (!found) throw std::logic_error("plan stop for request " + std::to_string(s.request) + " the vehicle does not hold");
    }
    return out;
  }

  rvrp::Instance with_combo(const rvrp::Instance& base, const Combo& combo) const {
    rvrp::Instance inst = base;
    for (RequestId id : combo) {
      const PoolEntry& e = *entry(id);
      rvrp::AwaitingRequest a;
      a.id = id;
      a.pickup = e.pickup;
      a.dropoff = e.dropoff;
      a.max_pickup_delay = cfg_.params.pickup_delay;
      a.max_detour = cfg_.params.detour_delay;
      a.arrival = e.rec->request.arrival_time;
      a.walk_speed = cfg_.params.walk_speed;
      inst.awaiting.push_back(std::move(a));
    }
    std::sort(inst.awaiting.begin(), inst.awaiting.end(), [](auto& a, auto& b) { return a.id < b.id; });
    return inst;
  }

  const PoolEntry* entry(RequestId id) const {
    auto it = std::lower_bound(pool_.begin(), pool_.end(), id,
                               [](const PoolEntry& e, RequestId r) { return e.rec->request.id < r; });
    return &*it;
  }

  // Pool indices this vehicle could still reach in time, most urgent first
  // by lateness at the original pickup node, capped at max_candidates.
  std::vector<std::size_t> candidates(const rvrp::Instance& base) const {
    struct Ranked {
      double lateness;
      RequestId id;
      std::size_t index;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      const PoolEntry& e = pool_[i];
      const Request& r = e.rec->request;
      const double ref = cfg_.reference == rvrp::DelayReference::route_start ? base.start_time : r.arrival_time;
      const double limit = ref + cfg_.params.pickup_delay + 1e-6;
      bool reachable = false;
      for (const AreaMember& m : e.pickup.members) {
        const double drive = net_.drive_time(base.start_node, m.node);
        const double at = std::max(base.start_time + drive, r.arrival_time + m.walk / cfg_.params.walk_speed);
        if (at <= limit) {
          reachable = true;
          break;
        }
      }
      if (!reachable) continue;
      const double lateness = base.start_time + net_.drive_time(base.start_node, r.pickup) - ref;
      ranked.push_back({lateness, r.id, i});
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const Ranked& a, const Ranked& b) { return a.lateness != b.lateness ? a.lateness < b.lateness : a.id < b.id; });
    if (ranked.size() > cfg_.max_candidates) ranked.resize(cfg_.max_candidates);
    std::vector<std::size_t> out;
    for (const Ranked& r : ranked) out.push_back(r.index);
    return out;
  }

  const SimConfig& cfg_;
  const RoadNetwork& net_;
  const std::map<RequestId, RequestRecord>& records_;
  const std::vector<PoolEntry>& pool_;
  const valuefn::FeatureContext& ctx_;
  const valuefn::ValueNet& vnet_;
  double gamma_;
  Seconds now_;
  std::size_t epoch_;
};

}  // namespace

Decision Simulator::decide(Mode mode, double gamma) const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  Decision d;
  const Seconds now = clock();

  std::vector<PoolEntry> pool;
  for (RequestId id : pending_) {
    const RequestRecord& rec = records_.at(id);
    PoolEntry e{&rec, {}, {}};
    const Request& r = rec.request;
    if (mode == Mode::flexible) {
      e.pickup = rec.pickup_area;
      e.dropoff = rec.dropoff_area;
    } else {
      Area pa = extends_pickup(mode) ? trimmed(build_area(net_, r, AreaKind::pickup, config_.params), config_.area_points)
                                     : point_area(r.id, AreaKind::pickup, r.pickup);
      Area da = extends_dropoff(mode)
                    ? trimmed(build_area(net_, r, AreaKind::dropoff, config_.params), config_.area_points)
                    : point_area(r.id, AreaKind::dropoff, r.dropoff);
      std::tie(e.pickup, e.dropoff) = resolve_overlap(net_, std::move(pa), std::move(da));
    }
    pool.push_back(std::move(e));
    d.requests.push_back(id);
  }

  Planner planner(config_, net_, records_, pool, features_ctx_, value_net_, gamma, now, epoch_);
  std::vector<VehicleOutcome> outcomes(vehicles_.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < vehicles_.size(); i += stride) outcomes[i] = planner.plan(vehicles_[i]);
  };
  const std::size_t workers = std::min(config_.workers, vehicles_.size());
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&, w] {
        try {
          work(w, workers);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (VehicleOutcome& o : outcomes) {
    d.combo_ms += o.combo_ms;
    d.rvrp_ms += o.rvrp_ms;
    d.oracle_calls += o.oracle_calls;
    d.start_time.push_back(o.start_time);
    d.actions.push_back(std::move(o.actions));
    d.features.push_back(std::move(o.features));
  }

  const auto t0 = Clock::now();
  d.assignment = assign::solve_assignment(d.actions, d.requests, &d.assign_stats, config_.assign_node_limit);
  d.assign_ms = ms_since(t0);
  return d;
}

void Simulator::train(const Decision& d) {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const assign::ScoredAction& chosen = d.assignment.chosen.at(vehicles_[i].id);
    const auto& acts = d.actions[i].actions;
    std::size_t k = 0;
    while (k < acts.size() && acts[k].combo != chosen.combo) ++k;
    const valuefn::StateFeatures& f = d.features[i].at(k);
    if (last_features_[i])
      replay_.push({*last_features_[i], immediate_reward(chosen.combo, chosen.plan, config_.objective), f});
    last_features_[i] = f;
  }
  if (!config_.training || replay_.size() < config_.batch_size) return;
  std::vector<valuefn::Experience> batch = replay_.sample(config_.batch_size, replay_rng_);
  value_net_.td_train(batch, config_.gamma, config_.learning_rate);
}

void Simulator::commit(const Decision& d) {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    Vehicle& v = vehicles_[i];
    const assign::ScoredAction& a = d.assignment.chosen.at(v.id);
    for (RequestId id : a.combo) {
      RequestRecord& rec = records_.at(id);
      rec.status = RequestRecord::Status::assigned;
      rec.vehicle = v.id;
      rec.pickup_ref = config_.reference == rvrp::DelayReference::route_start ? d.start_time[i]
                                                                              : rec.request.arrival_time;
      auto stop = std::find_if(a.plan.stops.begin(), a.plan.stops.end(), [&](const Stop& s) {
        return s.request == id && s.area.kind == StopKind::pickup;
      });
      if (stop == a.plan.stops.end()) throw std::logic_error("chosen plan lacks a pickup for request " + std::to_string(id));
      rec.pickup_node = stop->node;
      const AreaMember* m = rec.pickup_area.find(stop->node);
      rec.pickup_walk = m ? m->walk : net_.walk_distance(rec.request.pickup, stop->node);
      v.committed.push_back(id);
      pending_.erase(std::lower_bound(pending_.begin(), pending_.end(), id));
    }
    v.plan = a.plan;
  }
}

void Simulator::move(EpochRecord& rec) {
  const Seconds now = clock();
  const DelayParams& p = config_.params;
  auto ready = [&](RequestId id, NodeId node) {
    const RequestRecord& r = records_.at(id);
    const Meters walk = node == r.pickup_node ? r.pickup_walk : net_.walk_distance(r.request.pickup, node);
    return r.request.arrival_time + walk / p.walk_speed;
  };
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    Vehicle& v = vehicles_[i];
    MotionResult m = simulate_motion(v, now, p.epoch_len, net_, ready);
    if (m.max_onboard > v.capacity) ++metrics_.audit.capacity;
    rec.distance_m += m.distance;
    metrics_.vehicle_distance[i] += m.distance;
    metrics_.total_drive_distance += m.distance;
    for (const MotionEvent& e : m.events) {
      RequestRecord& r = records_.at(e.request);
      if (e.kind == EventKind::pickup) {
        r.status = RequestRecord::Status::onboard;
        r.pickup_time = e.time;
        continue;
      }
      r.status = RequestRecord::Status::served;
      r.dropoff_time = e.time;
      ++rec.served;
      ++metrics_.served;
      ++metrics_.audit.checked;
      if (r.pickup_time - r.pickup_ref > p.pickup_delay + kAuditTol) ++metrics_.audit.pickup_delay;
      if (r.dropoff_time - r.pickup_time > p.detour_delay + kAuditTol) ++metrics_.audit.detour;
    }
  }
}

std::optional<EpochRecord> Simulator::step() {
  if (!prepare()) return std::nullopt;
  EpochRecord rec = pending_record_;
  Decision d;
  try {
    d = decide(config_.mode, config_.gamma);
  } catch (const std::exception& e) {
    throw std::runtime_error("epoch " + std::to_string(epoch_) + ": " + e.what());
  }
  rec.objective = d.assignment.objective;
  rec.optimal = d.assign_stats.optimal;
  if (!rec.optimal) ++metrics_.unproven_epochs;
  for (const auto& [vid, a] : d.assignment.chosen) rec.assigned += a.combo.size();

  auto t0 = Clock::now();
  train(d);
  metrics_.train_ms += config_.record_timing ? ms_since(t0) : 0.0;
  commit(d);
  t0 = Clock::now();
  move(rec);
  metrics_.motion_ms += config_.record_timing ? ms_since(t0) : 0.0;

  if (config_.record_timing) {
    rec.assign_ms = d.assign_ms;
    rec.combo_ms = d.combo_ms;
    rec.rvrp_ms = d.rvrp_ms;
    metrics_.assign_ms += d.assign_ms;
    metrics_.combo_ms += d.combo_ms;
    metrics_.rvrp_ms += d.rvrp_ms;
  }
  rec.pending = pending_.size();
  for (const Vehicle& v : vehicles_) rec.active += v.committed.size() + v.onboard.size();
  if (metrics_.served + metrics_.rejected + in_flight() != metrics_.ingested) ++metrics_.audit.conservation;

  metrics_.epochs.push_back(rec);
  prepared_ = false;
  ++epoch_;
  return rec;
}

const Metrics& Simulator::run() {
  while (step()) {
  }
  return metrics_;
}

Metrics run(const SimConfig& config, const RoadNetwork& net, const RequestStream& stream) {
  Simulator sim(config, net, stream);
  return sim.run();
}

void write_epoch_csv(const Metrics& metrics, std::ostream& out) {
  out << "epoch,served,rejected,active,distance_m,assign_ms,combo_ms,rvrp_ms\n";
  char buf[256];
  for (const EpochRecord& r : metrics.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.3f,%.3f,%.3f,%.3f\n", r.epoch, r.served, r.rejected, r.active,
                  r.distance_m, r.assign_ms, r.combo_ms, r.rvrp_ms);
    out << buf;
  }
}

std::string summary_json(const SimConfig& c, const Metrics& m) {
  nlohmann::ordered_json j;
  j["config"] = {
      {"seed", c.seed},
      {"mode", to_string(c.mode)},
      {"num_vehicles", c.num_vehicles},
      {"capacity", c.capacity},
      {"horizon", c.horizon},
      {"delta", c.params.pickup_delay},
      {"lambda", c.params.detour_delay},
      {"epoch_len", c.params.epoch_len},
      {"walk_speed", c.params.walk_speed},
      {"max_walk", c.params.max_walk},
      {"objective", to_string(c.objective)},
      {"gamma", c.gamma},
      {"training", c.training},
      {"reference", rvrp::to_string(c.reference)},
      {"max_candidates", c.max_candidates},
      {"area_points", c.area_points},
      {"assign_node_limit", c.assign_node_limit},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"replay_capacity", c.replay_capacity},
      {"target_period", c.target_period},
      {"widths", c.widths},
      {"workers", c.workers},
  };
  j["ingested"] = m.ingested;
  j["served"] = m.served;
  j["rejected"] = m.rejected;
  j["total_drive_distance_m"] = m.total_drive_distance;
  j["average_distance_m"] = m.average_distance();
  j["epochs"] = m.epochs.size();
  j["partial"] = m.partial;
  j["unproven_epochs"] = m.unproven_epochs;
  j["audit"] = {{"conservation", m.audit.conservation},
                {"capacity", m.audit.capacity},
                {"pickup_delay", m.audit.pickup_delay},
                {"detour", m.audit.detour},
                {"checked", m.audit.checked}};
  j["wall_ms"] = {{"assign", m.assign_ms},
                  {"combo", m.combo_ms},
                  {"rvrp", m.rvrp_ms},
                  {"train", m.train_ms},
                  {"motion", m.motion_ms}};
  j["vehicle_distance_m"] = m.vehicle_distance;
  return j.dump(2);
}

}  // namespace poolmatch::sim
