#include "poolmatch/demand.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace poolmatch {

HotspotProfile HotspotProfile::two_centers(const RoadNetwork& net) {
  double min_x = INFINITY, max_x = -INFINITY, min_y = INFINITY, max_y = -INFINITY;
  for (const Point& p : net.points()) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double w = max_x - min_x, h = max_y - min_y;
  const double r = 0.2 * std::max(w, h);
  HotspotProfile p;
  p.hotspots.push_back({{min_x + 0.25 * w, min_y + 0.25 * h}, r, 1.0});
  p.hotspots.push_back({{min_x + 0.75 * w, min_y + 0.75 * h}, r, 1.0});
  p.background_weight = 1.0;
  return p;
}

namespace {

class NodeSampler {
 public:
  NodeSampler(const RoadNetwork& net, const HotspotProfile& profile) : n_(net.node_count()) {
    std::vector<double> weights;
    for (const Hotspot& h : profile.hotspots) {
      std::vector<NodeId> members;
      for (NodeId v = 0; v < net.node_count(); ++v) {
        const Point& p = net.point(v);
        if (std::hypot(p.x - h.center.x, p.y - h.center.y) <= h.radius) members.push_back(v);
      }
      if (members.empty() || !(h.weight > 0.0)) continue;
      pools_.push_back(std::move(members));
      weights.push_back(h.weight);
    }
    if (profile.background_weight > 0.0 || pools_.empty()) {
      pools_.emplace_back();  // empty pool = uniform over all nodes
      weights.push_back(profile.background_weight > 0.0 ? profile.background_weight : 1.0);
    }
    mix_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  }

  NodeId operator()(std::mt19937_64& rng) {
    const auto& pool = pools_[mix_(rng)];
    if (pool.empty()) return std::uniform_int_distribution<NodeId>(0, static_cast<NodeId>(n_ - 1))(rng);
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  }

 private:
  std::size_t n_;
  std::vector<std::vector<NodeId>> pools_;
  std::discrete_distribution<std::size_t> mix_;
};

}  // namespace

RequestStream gen_requests(const RoadNetwork& net, double rate, std::size_t horizon, Seconds epoch_len,
                           std::uint64_t seed, const HotspotProfile& profile) {
  if (!(rate >= 0.0)) throw std::invalid_argument("request rate must be non-negative");
  if (!(epoch_len > 0.0)) throw std::invalid_argument("epoch length must be positive");
  if (net.node_count() < 2) throw std::invalid_argument("need at least two nodes to generate requests");
  RequestStream stream;
  stream.end_time = static_cast<double>(horizon) * epoch_len;
  if (rate == 0.0) return stream;

  std::mt19937_64 rng(seed);
  NodeSampler sample(net, profile);
  std::poisson_distribution<int> count(rate);
  std::uniform_real_distribution<double> offset(0.0, epoch_len);
  RequestId next = 0;
  for (std::size_t e = 0; e < horizon; ++e) {
    const int k = count(rng);
    std::vector<Request> batch;
    for (int i = 0; i < k; ++i) {
      Request r;
      r.arrival_time = static_cast<double>(e) * epoch_len + offset(rng);
      r.pickup = sample(rng);
      do r.dropoff = sample(rng);
      while (r.dropoff == r.pickup);
      batch.push_back(r);
    }
    std::sort(batch.begin(), batch.end(), [](const Request& a, const Request& b) { return a.arrival_time < b.arrival_time; });
    for (Request& r : batch) {
      r.id = next++;
      stream.requests.push_back(r);
    }
  }
  return stream;
}

}  // namespace poolmatch
