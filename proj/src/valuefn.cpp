#include "poolmatch/valuefn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "poolmatch/kernels.hpp"

namespace poolmatch::valuefn {

FeatureContext FeatureContext::from(const RoadNetwork& net, Seconds pickup_delay) {
  FeatureContext ctx;
  ctx.pickup_delay = pickup_delay;
  if (net.node_count() == 0) return ctx;
  ctx.min_x = ctx.max_x = net.point(0).x;
  ctx.min_y = ctx.max_y = net.point(0).y;
  for (const Point& p : net.points()) {
    ctx.node_x.push_back(p.x);
    ctx.node_y.push_back(p.y);
    ctx.min_x = std::min(ctx.min_x, p.x);
    ctx.max_x = std::max(ctx.max_x, p.x);
    ctx.min_y = std::min(ctx.min_y, p.y);
    ctx.max_y = std::max(ctx.max_y, p.y);
  }
  return ctx;
}

StateFeatures post_decision_features(const FeatureContext& ctx, const Vehicle& vehicle, const Combo& combo,
                                     const RoutePlan& plan, Seconds now, std::size_t epoch, std::size_t horizon) {
  StateFeatures f;
  auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  const double cap = std::max<double>(1.0, vehicle.capacity);
  const NodeId next = plan.stops.empty() ? vehicle.location : plan.stops.front().node;
  f.values[0] = ctx.node_x.empty() ? 0.0 : scale(ctx.node_x[next], ctx.min_x, ctx.max_x);
  f.values[1] = ctx.node_y.empty() ? 0.0 : scale(ctx.node_y[next], ctx.min_y, ctx.max_y);
  f.values[2] = horizon == 0 ? 0.0 : std::clamp(static_cast<double>(epoch) / static_cast<double>(horizon), 0.0, 1.0);
  const double used = static_cast<double>(vehicle.load() + combo.size());
  f.values[3] = std::clamp((cap - used) / cap, 0.0, 1.0);
  f.values[4] = static_cast<double>(vehicle.onboard.size()) / cap;
  const double delta = ctx.pickup_delay > 0.0 ? ctx.pickup_delay : 1.0;
  if (plan.stops.empty()) {
    f.values[5] = 1.0;
    f.values[6] = 0.0;
  } else {
    double slack = 0.0;
    for (const Stop& s : plan.stops) slack += std::isfinite(s.deadline) ? (s.deadline - s.arrival) / delta : 1.0;
    f.values[5] = slack / static_cast<double>(plan.stops.size());
    f.values[6] = std::max(0.0, plan.stops.back().arrival - now) / (2.0 * delta * cap);
  }
  return f;
}

std::vector<std::size_t> default_widths() { return {kFeatureDim, 32, 32, 1}; }

ValueNet::ValueNet(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2 || widths.back() != 1) throw std::invalid_argument("value net widths must end in 1");
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l;
    l.in = widths[i];
    l.out = widths[i + 1];
    if (l.in == 0 || l.out == 0) throw std::invalid_argument("zero-width layer");
    const double a = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-a, a);
    l.weights.resize(l.in * l.out);
    for (double& w : l.weights) w = u(rng);
    l.bias.assign(l.out, 0.0);
    layers_.push_back(std::move(l));
  }
  target_ = layers_;
}

ValueNet ValueNet::from_layers(std::vector<DenseLayer> layers) {
  if (layers.empty() || layers.back().out != 1) throw std::invalid_argument("value net must end in one output");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.weights.size() != l.in * l.out || l.bias.size() != l.out)
      throw std::invalid_argument("layer " + std::to_string(i) + " tensor sizes do not match its shape");
    if (i > 0 && layers[i - 1].out != l.in) throw std::invalid_argument("layer widths do not chain");
  }
  ValueNet net;
  net.layers_ = std::move(layers);
  net.target_ = net.layers_;
  return net;
}

std::size_t ValueNet::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

void ValueNet::check_input(std::span<const double> x) const {
  if (layers_.empty()) throw std::invalid_argument("value net has no layers");
  if (x.size() != input_dim())
    throw std::invalid_argument("feature dimension " + std::to_string(x.size()) + " != network input " +
                                std::to_string(input_dim()));
}

double ValueNet::forward(const std::vector<DenseLayer>& layers, std::span<const double> x,
                         std::vector<std::vector<double>>* activations) {
  const auto& k = kernels::active();
  std::vector<double> cur(x.begin(), x.end()), next;
  if (activations) activations->assign(1, cur);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    next.resize(l.out);
    k.gemv(l.weights.data(), cur.data(), l.bias.data(), next.data(), l.out, l.in);
    if (i + 1 < layers.size())
      for (double& v : next) v = std::tanh(v);
    cur.swap(next);
    if (activations) activations->push_back(cur);
  }
  return cur[0];
}

Reward ValueNet::evaluate(std::span<const double> x) const {
  check_input(x);
  return forward(layers_, x, nullptr);
}

Reward ValueNet::evaluate_target(const StateFeatures& f) const {
  check_input(f.values);
  return forward(target_, f.values, nullptr);
}

std::vector<double> ValueNet::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const DenseLayer& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void ValueNet::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw std::invalid_argument("parameter vector size mismatch");
  std::size_t o = 0;
  for (DenseLayer& l : layers_) {
    std::copy_n(p.begin() + o, l.weights.size(), l.weights.begin());
    o += l.weights.size();
    std::copy_n(p.begin() + o, l.bias.size(), l.bias.begin());
    o += l.bias.size();
  }
}

std::vector<double> ValueNet::gradient(std::span<const double> x) const {
  check_input(x);
  const auto& k = kernels::active();
  std::vector<std::vector<double>> act;
  forward(layers_, x, &act);

  std::vector<std::size_t> offset(layers_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offset[i] = total;
    total += layers_[i].weights.size() + layers_[i].bias.size();
  }
  std::vector<double> grad(total, 0.0);

  // delta = d out / d pre-activation of layer i
  std::vector<double> delta{1.0};
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const DenseLayer& l = layers_[i];
    const std::vector<double>& input = act[i];
    double* gw = grad.data() + offset[i];
    double* gb = gw + l.weights.size();
    for (std::size_t r = 0; r < l.out; ++r) {
      k.axpy(delta[r], input.data(), gw + r * l.in, l.in);
      gb[r] = delta[r];
    }
    if (i == 0) break;
    std::vector<double> back(l.in, 0.0);
    for (std::size_t r = 0; r < l.out; ++r) k.axpy(delta[r], l.weights.data() + r * l.in, back.data(), l.in);
    // previous layer is tanh: d tanh = 1 - y^2
    for (std::size_t c = 0; c < l.in; ++c) back[c] *= 1.0 - input[c] * input[c];
    delta.swap(back);
  }
  return grad;
}

double ValueNet::td_train(std::span<const Experience> batch, double gamma, double lr) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("discount must be in [0,1)");
  const auto& k = kernels::active();
  std::vector<double> step(parameter_count(), 0.0);
  double sq = 0.0;
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = batch[i];
    double target = e.reward_next;
    if (gamma > 0.0) target += gamma * evaluate_target(e.features_post_next);
    const double pred = evaluate(e.features_post);
    const double err = pred - target;
    if (!std::isfinite(err)) {
      std::ostringstream os;
      os << "non-finite TD error at batch item " << i << " (prediction " << pred << ", target " << target << ")";
      throw TrainingError(os.str());
    }
    sq += err * err;
    if (err != 0.0) {
      std::vector<double> g = gradient(e.features_post.values);
      k.axpy(scale * err, g.data(), step.data(), g.size());
    }
  }
  for (std::size_t i = 0; i < step.size(); ++i) {
    if (!std::isfinite(step[i])) {
      std::ostringstream os;
      os << "non-finite gradient component " << i << " over batch of " << batch.size()
         << " (mean squared TD error " << sq / static_cast<double>(batch.size()) << ")";
      throw TrainingError(os.str());
    }
  }
  std::vector<double> p = parameters();
  k.axpy(-lr, step.data(), p.data(), p.size());
  set_parameters(p);
  ++steps_;
  if (target_period > 0 && steps_ % target_period == 0) sync_target();
  return sq / static_cast<double>(batch.size());
}

Reward joint_value(const ValueNet& net, std::span<const StateFeatures> features) {
  Reward total = 0.0;
  for (const StateFeatures& f : features) total += net.evaluate(f);
  return total;
}

void ReplayBuffer::push(Experience e) {
  if (capacity_ == 0) return;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
  } else {
    items_[next_] = std::move(e);
    next_ = (next_ + 1) % capacity_;
  }
}

std::vector<Experience> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
  std::vector<Experience> out;
  if (items_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
  return out;
}

namespace {

void write_values(std::ostream& out, const char* tag, const std::vector<double>& v) {
  out << tag;
  char buf[64];
  for (double x : v) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    out << ' ' << std::string_view(buf, end - buf);
  }
  out << '\n';
}

std::vector<double> read_values(std::istream& in, const char* tag, std::size_t n, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string("missing '") + tag + "' line", line_no + 1);
  ++line_no;
  std::istringstream ls(line);
  std::string t;
  ls >> t;
  if (t != tag) throw ParseError(std::string("expected '") + tag + "'", line_no);
  std::vector<double> v;
  std::string tok;
  while (ls >> tok) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw ParseError("bad number '" + tok + "'", line_no);
    v.push_back(x);
  }
  if (v.size() != n)
    throw ParseError("expected " + std::to_string(n) + " values, got " + std::to_string(v.size()), line_no);
  return v;
}

}  // namespace

void save_checkpoint(const ValueNet& net, std::ostream& out) {
  out << "poolmatch-valuenet 1\n";
  out << "layers " << net.layers().size() << " target_period " << net.target_period << " steps "
      << net.train_steps() << '\n';
  for (const DenseLayer& l : net.layers()) {
    out << "dense " << l.in << ' ' << l.out << '\n';
    write_values(out, "w", l.weights);
    write_values(out, "b", l.bias);
  }
}

ValueNet load_checkpoint(std::istream& in) {
  std::string line;
  std::size_t no = 0;
  auto next = [&](std::istringstream& ls) {
    if (!std::getline(in, line)) throw ParseError("truncated checkpoint", no + 1);
    ++no;
    ls = std::istringstream(line);
  };
  std::istringstream ls;
  next(ls);
  std::string magic;
  int version = 0;
  if (!(ls >> magic >> version) || magic != "poolmatch-valuenet" || version != 1)
    throw ParseError("not a value-net checkpoint", no);
  next(ls);
  std::string k1, k2, k3;
  std::size_t count = 0, period = 0, steps = 0;
  if (!(ls >> k1 >> count >> k2 >> period >> k3 >> steps) || k1 != "layers" || k2 != "target_period" ||
      k3 != "steps")
    throw ParseError("bad layer header", no);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < count; ++i) {
    next(ls);
    std::string tag;
    DenseLayer l;
    if (!(ls >> tag >> l.in >> l.out) || tag != "dense") throw ParseError("bad dense header", no);
    l.weights = read_values(in, "w", l.in * l.out, no);
    l.bias = read_values(in, "b", l.out, no);
    layers.push_back(std::move(l));
  }
  ValueNet net = ValueNet::from_layers(std::move(layers));
  net.target_period = period;
  // Resumed nets start with a fresh target copy; the step counter only
  // affects when the next refresh happens.
  (void)steps;
  return net;
}

void save_checkpoint_file(const ValueNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_checkpoint(net, out);
  if (!out) throw std::runtime_error("write failed for " + path);
}

ValueNet load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace poolmatch::valuefn
