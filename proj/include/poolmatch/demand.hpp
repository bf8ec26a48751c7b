#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "poolmatch/core.hpp"
#include "poolmatch/network.hpp"

namespace poolmatch {

struct Hotspot {
  Point center;
  Meters radius = 300.0;
  double weight = 1.0;
};

// Mixture of hotspots plus a uniform background; origins and destinations are
// drawn independently from it.
struct HotspotProfile {
  std::vector<Hotspot> hotspots;
  double background_weight = 1.0;

  static HotspotProfile uniform() { return {}; }
  // Two hotspots at opposite quarter points of the bounding box, each as
  // heavy as the background.
  static HotspotProfile two_centers(const RoadNetwork& net);
};

struct RequestStream {
  std::vector<Request> requests;  // ascending arrival time
  // Instant up to which the stream is complete; a run past it stops early.
  Seconds end_time = std::numeric_limits<double>::infinity();
};

// Poisson(rate) arrivals per epoch, uniform within the epoch; ids from 0 in
// arrival order. Pickup and dropoff are always distinct nodes.
RequestStream gen_requests(const RoadNetwork& net, double rate, std::size_t horizon, Seconds epoch_len,
                           std::uint64_t seed, const HotspotProfile& profile = HotspotProfile::uniform());

}  // namespace poolmatch
