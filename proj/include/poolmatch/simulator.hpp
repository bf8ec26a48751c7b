#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "poolmatch/areas.hpp"
#include "poolmatch/assignment.hpp"
#include "poolmatch/core.hpp"
#include "poolmatch/demand.hpp"
#include "poolmatch/network.hpp"
#include "poolmatch/rvrp.hpp"
#include "poolmatch/valuefn.hpp"

namespace poolmatch::sim {

// Which service points may move away from the requested node.
enum class Mode { flexible, fixed, pickup_only, dropoff_only };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct SimConfig {
  DelayParams params = default_params(300.0);
  std::size_t num_vehicles = 50;
  std::uint32_t capacity = 4;
  std::size_t horizon = 200;  // epochs
  std::uint64_t seed = 1;
  Mode mode = Mode::flexible;
  RewardObjective objective = RewardObjective::served_count;
  double gamma = 0.9;
  bool training = true;
  rvrp::DelayReference reference = rvrp::DelayReference::route_start;

  // Pending requests a vehicle looks at, nearest original pickup first.
  std::size_t max_candidates = 4;
  // Members kept per extended area, nearest on foot first (the original node
  // always stays). 0 keeps every node within the walk radius.
  std::size_t area_points = 3;
  // Search nodes per vehicle group in the joint assignment before the best
  // assignment found so far is taken. 0 searches to optimality.
  std::size_t assign_node_limit = 20000;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 10000;
  std::size_t target_period = 20;
  std::vector<std::size_t> widths = valuefn::default_widths();
  std::size_t workers = 1;
  // Wall-clock columns are written as 0 when false, making outputs
  // byte-reproducible.
  bool record_timing = true;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t ingested = 0;
  std::size_t served = 0;    // dropoffs completed this epoch
  std::size_t rejected = 0;  // requests dropped this epoch
  std::size_t assigned = 0;
  std::size_t active = 0;    // assigned, not yet delivered (end of epoch)
  std::size_t pending = 0;   // unassigned, still waiting (end of epoch)
  Meters distance_m = 0.0;
  double objective = 0.0;    // joint assignment objective
  bool optimal = true;       // assignment proven optimal
  double assign_ms = 0.0, combo_ms = 0.0, rvrp_ms = 0.0;
};

struct Audit {
  std::size_t conservation = 0;  // epochs where served+rejected+in-flight != ingested
  std::size_t capacity = 0;      // events with onboard > capacity
  std::size_t pickup_delay = 0;  // completed requests over the pickup bound
  std::size_t detour = 0;        // completed requests over the ride bound
  std::size_t checked = 0;       // completed requests audited

  std::size_t violations() const { return conservation + capacity + pickup_delay + detour; }
};

struct Metrics {
  std::size_t ingested = 0;
  std::size_t served = 0;
  std::size_t rejected = 0;
  Meters total_drive_distance = 0.0;
  std::vector<Meters> vehicle_distance;
  std::vector<EpochRecord> epochs;
  double assign_ms = 0.0, combo_ms = 0.0, rvrp_ms = 0.0, train_ms = 0.0, motion_ms = 0.0;
  bool partial = false;  // the request stream ended before the horizon
  std::size_t unproven_epochs = 0;  // assignment stopped by the node limit
  Audit audit;

  // Driving meters per served request; 0 when nothing was served.
  double average_distance() const { return served ? total_drive_distance / static_cast<double>(served) : 0.0; }
};

enum class EventKind { pickup, dropoff };

struct MotionEvent {
  EventKind kind = EventKind::pickup;
  RequestId request = 0;
  NodeId node = 0;
  Seconds time = 0.0;
};

struct MotionResult {
  std::vector<MotionEvent> events;
  Meters distance = 0.0;
  std::size_t max_onboard = 0;  // largest onboard count seen
};

// Earliest instant the passenger of `request` can be at `node`.
using WalkerReady = std::function<Seconds(RequestId request, NodeId node)>;

// Advances `vehicle` along its plan from max(now, available_at) while the
// clock is before now + dt, one edge or one stop at a time (an edge or stop
// begun before the boundary is completed). Pickups wait for the walker.
// Throws std::logic_error if the plan does not match the vehicle's duties.
MotionResult simulate_motion(Vehicle& vehicle, Seconds now, Seconds dt, const RoadNetwork& net,
                             const WalkerReady& ready);

struct RequestRecord {
  enum class Status { pending, assigned, onboard, served, rejected };

  Request request;
  Area pickup_area, dropoff_area;  // extended and made disjoint
  Status status = Status::pending;
  VehicleId vehicle = -1;
  Seconds pickup_ref = 0.0;  // fixed at first assignment
  NodeId pickup_node = 0;    // fixed at first assignment
  Meters pickup_walk = 0.0;
  Seconds pickup_time = 0.0, dropoff_time = 0.0;
};

// Everything one decision step produced, before any state changes.
struct Decision {
  std::vector<RequestId> requests;  // pending pool offered this epoch
  std::vector<assign::VehicleActions> actions;
  std::vector<std::vector<valuefn::StateFeatures>> features;  // parallel to actions[i].actions
  std::vector<Seconds> start_time;                            // per vehicle
  assign::JointAssignment assignment;
  assign::AssignmentStats assign_stats;
  std::size_t oracle_calls = 0;
  double assign_ms = 0.0, combo_ms = 0.0, rvrp_ms = 0.0;
};

class Simulator {
 public:
  // The network must outlive the simulator. Throws std::invalid_argument on
  // an invalid config or duplicate request ids.
  Simulator(SimConfig config, const RoadNetwork& net, RequestStream stream,
            std::optional<valuefn::ValueNet> value_net = std::nullopt);

  // Runs one epoch: ingest, reject, decide, train, commit, move. Returns
  // nullopt (and flags the metrics partial) when the stream does not cover
  // the epoch; also nullopt once the horizon is reached.
  std::optional<EpochRecord> step();
  // Steps until the horizon or the end of the stream.
  const Metrics& run();

  // Areas, combos, scoring and assignment for the current state under `mode`
  // and `gamma`; does not change anything. step() uses the configured values.
  Decision decide(Mode mode, double gamma) const;

  // Ingests arrivals up to the next decision instant and rejects stale
  // requests; step() calls it first. Idempotent until step() completes.
  bool prepare();

  bool finished() const;
  std::size_t epoch() const { return epoch_; }
  Seconds clock() const { return static_cast<double>(epoch_ + 1) * config_.params.epoch_len; }
  const SimConfig& config() const { return config_; }
  const Metrics& metrics() const { return metrics_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const std::map<RequestId, RequestRecord>& records() const { return records_; }
  const valuefn::ValueNet& value_net() const { return value_net_; }

 private:
  void commit(const Decision& d);
  void train(const Decision& d);
  void move(EpochRecord& rec);
  std::size_t in_flight() const;

  SimConfig config_;
  const RoadNetwork& net_;
  RequestStream stream_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
  bool prepared_ = false;
  bool stopped_ = false;
  EpochRecord pending_record_;

  std::vector<Vehicle> vehicles_;
  std::map<RequestId, RequestRecord> records_;
  std::vector<RequestId> pending_;  // ascending id

  valuefn::FeatureContext features_ctx_;
  valuefn::ValueNet value_net_;
  valuefn::ReplayBuffer replay_;
  std::mt19937_64 replay_rng_;
  std::vector<std::optional<valuefn::StateFeatures>> last_features_;  // per vehicle

  Metrics metrics_;
};

// Seed of the named random sub-stream derived from the run seed.
enum class Stream : std::uint64_t { requests = 1, vehicles = 2, net_init = 3, replay = 4 };
std::uint64_t substream_seed(std::uint64_t seed, Stream stream);

Metrics run(const SimConfig& config, const RoadNetwork& net, const RequestStream& stream);

// `epoch,served,rejected,active,distance_m,assign_ms,combo_ms,rvrp_ms`
void write_epoch_csv(const Metrics& metrics, std::ostream& out);
// Config echo plus totals, as a JSON object text.
std::string summary_json(const SimConfig& config, const Metrics& metrics);

}  // namespace poolmatch::sim
