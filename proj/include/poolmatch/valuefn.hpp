#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "poolmatch/core.hpp"
#include "poolmatch/network.hpp"

namespace poolmatch::valuefn {

inline constexpr std::size_t kFeatureDim = 7;

// Post-decision description of one vehicle, all components roughly in [0,1]:
//   0,1  x/y of the vehicle's next node, scaled to the network bounding box
//   2    time of day (epoch / horizon)
//   3    free capacity after the decision
//   4    passengers on board / capacity
//   5    mean (deadline - planned arrival) over planned stops, in units of
//        delta; 1 when the plan is empty
//   6    remaining plan duration / (2 delta capacity)
struct StateFeatures {
  std::vector<double> values = std::vector<double>(kFeatureDim, 0.0);

  std::size_t size() const { return values.size(); }
  bool operator==(const StateFeatures&) const = default;
};

struct FeatureContext {
  std::vector<double> node_x, node_y;  // indexed by NodeId
  double min_x = 0.0, max_x = 1.0, min_y = 0.0, max_y = 1.0;
  Seconds pickup_delay = 300.0;

  static FeatureContext from(const RoadNetwork& net, Seconds pickup_delay);
};

// Features of `vehicle` after committing to `combo` served by `plan`, before
// new requests arrive. `now` is the decision instant.
StateFeatures post_decision_features(const FeatureContext& ctx, const Vehicle& vehicle, const Combo& combo,
                                     const RoutePlan& plan, Seconds now, std::size_t epoch, std::size_t horizon);

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct Experience {
  StateFeatures features_post;       // chosen post-decision state at t
  Reward reward_next = 0.0;          // reward of the decision at t + 1
  StateFeatures features_post_next;  // chosen post-decision state at t + 1
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Feed-forward approximator of one vehicle's post-decision value: tanh
// hidden layers, linear output. A target copy supplies bootstrap values and is
// refreshed from the live weights every `target_period` training steps.
class ValueNet {
 public:
  ValueNet() = default;
  // widths = {in, hidden..., 1}; uniform(-1/sqrt(in), 1/sqrt(in)) weights,
  // zero biases.
  ValueNet(const std::vector<std::size_t>& widths, std::uint64_t seed);
  static ValueNet from_layers(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t parameter_count() const;

  Reward evaluate(std::span<const double> x) const;
  Reward evaluate(const StateFeatures& f) const { return evaluate(f.values); }
  Reward evaluate_target(const StateFeatures& f) const;

  // Flat parameter view: per layer, weights then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);
  // d output / d parameters at x, in the flat layout.
  std::vector<double> gradient(std::span<const double> x) const;

  // One SGD step on the mean squared TD error against
  // reward_next + gamma * target(features_post_next). Returns the pre-step
  // mean squared error.
  double td_train(std::span<const Experience> batch, double gamma, double lr);

  std::size_t target_period = 20;
  std::size_t train_steps() const { return steps_; }
  void sync_target() { target_ = layers_; }

  bool operator==(const ValueNet& other) const { return layers_ == other.layers_; }

 private:
  static double forward(const std::vector<DenseLayer>& layers, std::span<const double> x,
                        std::vector<std::vector<double>>* activations);
  void check_input(std::span<const double> x) const;

  std::vector<DenseLayer> layers_;
  std::vector<DenseLayer> target_;
  std::size_t steps_ = 0;
};

std::vector<std::size_t> default_widths();

// Sum of per-vehicle values with one shared network.
Reward joint_value(const ValueNet& net, std::span<const StateFeatures> features);

// Fixed-size FIFO of experiences with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000) : capacity_(capacity) {}
  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::vector<Experience> sample(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Experience> items_;
};

// Text checkpoint, lossless for every double:
//   poolmatch-valuenet 1
//   layers <count> target_period <n> steps <n>
//   dense <in> <out>
//   w <out*in values, row-major>
//   b <out values>
// repeated per layer. Values use shortest round-trip decimal form.
void save_checkpoint(const ValueNet& net, std::ostream& out);
ValueNet load_checkpoint(std::istream& in);
void save_checkpoint_file(const ValueNet& net, const std::string& path);
ValueNet load_checkpoint_file(const std::string& path);

}  // namespace poolmatch::valuefn
