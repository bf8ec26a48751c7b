#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "poolmatch/core.hpp"
#include "poolmatch/demand.hpp"
#include "poolmatch/network.hpp"
#include "poolmatch/simulator.hpp"
#include "poolmatch/valuefn.hpp"

namespace fs = std::filesystem;
using namespace poolmatch;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
  const char* env = std::getenv("POOLMATCH_LOG_LEVEL");
  if (!env) return Level::info;
  std::string s = env;
  if (s == "error") return Level::error;
  if (s == "warn") return Level::warn;
  if (s == "debug") return Level::debug;
  return Level::info;
}

void log(Level lvl, const std::string& msg) {
  static const Level threshold = log_level();
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lvl <= threshold) std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Refuses to clobber unless forced; creates parent directories.
std::ofstream open_output(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) throw UsageError(path.string() + " exists (use --force to overwrite)");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct GridSpec {
  std::size_t w = 20, h = 20;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> g.w >> x >> g.h) || x != 'x' || !in.eof()) throw UsageError("--grid expects WxH, got '" + text + "'");
  return g;
}

struct NetworkArgs {
  std::string nodes, edges, grid;
  double edge_m = 100.0, speed = 10.0;

  void add(CLI::App* app) {
    app->add_option("--nodes", nodes, "nodes CSV (id,x,y)");
    app->add_option("--edges", edges, "edges CSV (from,to,length_m,drive_time_s)");
    app->add_option("--grid", grid, "generate a WxH grid instead of loading files");
    app->add_option("--edge-m", edge_m, "grid edge length in meters")->check(CLI::PositiveNumber);
    app->add_option("--speed", speed, "grid driving speed in m/s")->check(CLI::PositiveNumber);
  }

  RoadNetwork load() const {
    if (!grid.empty()) {
      if (!nodes.empty() || !edges.empty()) throw UsageError("--grid cannot be combined with --nodes/--edges");
      GridSpec g = parse_grid(grid);
      return generate_grid(g.w, g.h, edge_m, speed);
    }
    if (nodes.empty() || edges.empty()) throw UsageError("need --nodes and --edges, or --grid");
    for (const auto& p : {nodes, edges})
      if (!fs::exists(p)) throw UsageError("no such file: " + p);
    return load_network_files(nodes, edges);
  }
};

struct SimArgs {
  NetworkArgs network;
  std::string requests;
  double rate = 30.0;
  std::string hotspots = "uniform";
  double delta = 300.0, lambda = -1.0, epoch_len = 60.0, walk_speed = 1.0, max_walk = -1.0;
  std::size_t vehicles = 50, horizon = 200, candidates = 4, area_points = 3, workers = 1, batch = 32,
              node_limit = 20000;
  std::uint32_t capacity = 4;
  std::uint64_t seed = 1;
  std::string mode = "flexible", objective = "served_count", reference = "route_start";
  double gamma = 0.9, lr = 1e-3;
  bool no_train = false, no_timing = false;
  std::string checkpoint_in;

  void add(CLI::App* app, bool with_mode = true) {
    network.add(app);
    app->add_option("--requests", requests, "request CSV; generated from --rate and the seed when absent");
    app->add_option("--rate", rate, "mean requests per epoch for generated demand")->check(CLI::NonNegativeNumber);
    app->add_option("--hotspots", hotspots, "generated demand profile")
        ->check(CLI::IsMember({"uniform", "two_centers"}));
    app->add_option("--delta", delta, "max pickup delay, seconds")->check(CLI::PositiveNumber);
    app->add_option("--lambda", lambda, "max ride time after pickup, seconds (default 2*delta)");
    app->add_option("--epoch", epoch_len, "epoch length, seconds")->check(CLI::PositiveNumber);
    app->add_option("--walk-speed", walk_speed, "walking speed, m/s")->check(CLI::PositiveNumber);
    app->add_option("--max-walk", max_walk, "walk radius, meters (default delta*walk speed)");
    app->add_option("--vehicles", vehicles, "fleet size")->check(CLI::PositiveNumber);
    app->add_option("--capacity", capacity, "seats per vehicle")->check(CLI::PositiveNumber);
    app->add_option("--horizon", horizon, "epochs to simulate")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "run seed");
    if (with_mode)
      app->add_option("--mode", mode, "service point mode")
          ->check(CLI::IsMember({"flexible", "fixed", "pickup_only", "dropoff_only"}));
    app->add_option("--objective", objective, "immediate reward")
        ->check(CLI::IsMember({"served_count", "neg_travel_time"}));
    app->add_option("--reference", reference, "pickup delay reference")
        ->check(CLI::IsMember({"route_start", "request_arrival"}));
    app->add_option("--gamma", gamma, "discount on the learned value, in [0,1)")->check(CLI::Range(0.0, 0.999999));
    app->add_option("--lr", lr, "value net learning rate")->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "training batch size")->check(CLI::PositiveNumber);
    app->add_option("--candidates", candidates, "pending requests considered per vehicle")->check(CLI::PositiveNumber);
    app->add_option("--area-points", area_points, "members kept per extended area, nearest on foot (0 = all)");
    app->add_option("--node-limit", node_limit, "assignment search nodes per vehicle group (0 = search to optimality)");
    app->add_option("--workers", workers, "threads for per-vehicle planning")->check(CLI::PositiveNumber);
    app->add_flag("--no-train", no_train, "freeze the value net");
    app->add_flag("--no-timing", no_timing, "write zeros in timing columns (byte-reproducible output)");
    app->add_option("--checkpoint-in", checkpoint_in, "start from this value net checkpoint");
  }

  sim::SimConfig config(const std::string& mode_name) const {
    try {
      return build_config(mode_name);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  sim::SimConfig build_config(const std::string& mode_name) const {
    sim::SimConfig c;
    c.params = default_params(delta);
    if (lambda >= 0.0) {
      if (lambda == 0.0) throw UsageError("--lambda must be positive");
      c.params.detour_delay = lambda;
    }
    c.params.epoch_len = epoch_len;
    c.params.walk_speed = walk_speed;
    c.params.max_walk = max_walk >= 0.0 ? max_walk : delta * walk_speed;
    c.num_vehicles = vehicles;
    c.capacity = capacity;
    c.horizon = horizon;
    c.seed = seed;
    c.mode = sim::parse_mode(mode_name);
    c.objective = parse_objective(objective);
    c.reference = rvrp::parse_delay_reference(reference);
    c.gamma = gamma;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.max_candidates = candidates;
    c.area_points = area_points;
    c.assign_node_limit = node_limit;
    c.workers = workers;
    c.training = !no_train;
    c.record_timing = !no_timing;
    c.validate();
    return c;
  }

  RequestStream stream(const RoadNetwork& net) const {
    if (!requests.empty()) {
      if (!fs::exists(requests)) throw UsageError("no such file: " + requests);
      RequestStream s;
      s.requests = load_requests_file(requests, net);
      return s;
    }
    HotspotProfile profile = hotspots == "two_centers" ? HotspotProfile::two_centers(net) : HotspotProfile::uniform();
    return gen_requests(net, rate, horizon, epoch_len, sim::substream_seed(seed, sim::Stream::requests), profile);
  }

  std::optional<valuefn::ValueNet> initial_net() const {
    if (checkpoint_in.empty()) return std::nullopt;
    return valuefn::load_checkpoint_file(checkpoint_in);
  }
};

void write_outputs(const fs::path& dir, const std::string& stem, const sim::SimConfig& c, const sim::Metrics& m,
                   bool force) {
  auto json = open_output(dir / (stem + ".json"), force);
  json << sim::summary_json(c, m) << '\n';
  auto csv = open_output(dir / (stem + "_epochs.csv"), force);
  sim::write_epoch_csv(m, csv);
}

std::string describe(const sim::Metrics& m) {
  std::ostringstream os;
  os << "served " << m.served << " rejected " << m.rejected << " ingested " << m.ingested << " avg distance "
     << std::fixed << std::setprecision(2) << m.average_distance() << " m"
     << (m.partial ? " (partial)" : "");
  return os.str();
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Ride-pool matching with flexible pickup and drop-off points"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; [section] per subcommand, flags override");
  app.allow_config_extras(CLI::config_extras_mode::error);
  bool force = false;
  app.add_flag("--force", force, "overwrite existing output files");

  // gen-network
  auto* gen_net = app.add_subcommand("gen-network", "write a grid network as nodes/edges CSV");
  std::string grid = "10x10";
  double edge_m = 100.0, speed = 10.0;
  std::string out_dir = ".";
  gen_net->add_option("--grid", grid, "WxH");
  gen_net->add_option("--edge-m", edge_m, "edge length, meters")->check(CLI::PositiveNumber);
  gen_net->add_option("--speed", speed, "driving speed, m/s")->check(CLI::PositiveNumber);
  gen_net->add_option("--out-dir", out_dir, "output directory");
  gen_net->add_flag("--force", force, "overwrite existing output files");

  // gen-requests
  auto* gen_req = app.add_subcommand("gen-requests", "write a synthetic request stream CSV");
  NetworkArgs req_net;
  req_net.add(gen_req);
  double rate = 30.0, req_epoch = 60.0;
  std::size_t req_horizon = 200;
  std::uint64_t req_seed = 1;
  std::string hotspots = "uniform", req_out = "requests.csv";
  gen_req->add_option("--rate", rate, "mean requests per epoch")->check(CLI::NonNegativeNumber);
  gen_req->add_option("--horizon", req_horizon, "epochs")->check(CLI::PositiveNumber);
  gen_req->add_option("--epoch", req_epoch, "epoch length, seconds")->check(CLI::PositiveNumber);
  gen_req->add_option("--seed", req_seed, "run seed (the request sub-stream is derived from it)");
  gen_req->add_option("--hotspots", hotspots, "profile")->check(CLI::IsMember({"uniform", "two_centers"}));
  gen_req->add_option("--out", req_out, "output CSV");
  gen_req->add_flag("--force", force, "overwrite existing output files");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run one simulation");
  SimArgs sim_args;
  sim_args.add(simulate);
  std::string sim_out = "out";
  simulate->add_option("--out-dir", sim_out, "directory for summary JSON and epoch CSV");
  simulate->add_flag("--force", force, "overwrite existing output files");

  // train
  auto* train = app.add_subcommand("train", "simulate with learning on and save the value net");
  SimArgs train_args;
  train_args.add(train);
  std::string train_out = "out", checkpoint_out;
  std::size_t passes = 1;
  train->add_option("--out-dir", train_out, "directory for summary JSON and epoch CSV");
  train->add_option("--checkpoint-out", checkpoint_out, "value net checkpoint to write")->required();
  train->add_option("--passes", passes, "consecutive runs over seeds seed..seed+passes-1")->check(CLI::PositiveNumber);
  train->add_flag("--force", force, "overwrite existing output files");

  // compare
  auto* compare = app.add_subcommand("compare", "run several modes on identical seeds and demand");
  SimArgs cmp_args;
  cmp_args.add(compare, false);
  std::vector<std::string> modes{"fixed", "flexible"};
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::size_t> horizons;
  std::string cmp_out = "out";
  compare->add_option("--modes", modes, "modes to run; the first is the baseline")
      ->check(CLI::IsMember({"flexible", "fixed", "pickup_only", "dropoff_only"}))
      ->delimiter(',');
  compare->add_option("--seeds", seeds, "seeds")->delimiter(',');
  compare->add_option("--horizons", horizons, "per-mode horizon; must all be equal")->delimiter(',');
  compare->add_option("--out-dir", cmp_out, "directory for report and per-run outputs");
  compare->add_flag("--force", force, "overwrite existing output files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_net) {
      GridSpec g = parse_grid(grid);
      RoadNetwork net = generate_grid(g.w, g.h, edge_m, speed);
      auto nodes = open_output(fs::path(out_dir) / "nodes.csv", force);
      auto edges = open_output(fs::path(out_dir) / "edges.csv", force);
      write_network(net, nodes, edges);
      log(Level::info, "wrote " + std::to_string(net.node_count()) + " nodes, " + std::to_string(net.edge_count()) +
                           " edges to " + out_dir);
      return 0;
    }
    if (*gen_req) {
      RoadNetwork net = req_net.load();
      HotspotProfile profile = hotspots == "two_centers" ? HotspotProfile::two_centers(net) : HotspotProfile::uniform();
      RequestStream s =
          gen_requests(net, rate, req_horizon, req_epoch, sim::substream_seed(req_seed, sim::Stream::requests), profile);
      auto out = open_output(req_out, force);
      write_requests(s.requests, net, out);
      log(Level::info, "wrote " + std::to_string(s.requests.size()) + " requests to " + req_out);
      return 0;
    }
    if (*simulate) {
      sim::SimConfig c = sim_args.config(sim_args.mode);
      RoadNetwork net = sim_args.network.load();
      RequestStream stream = sim_args.stream(net);
      log(Level::info, "simulating " + std::string(sim::to_string(c.mode)) + ", " + std::to_string(stream.requests.size()) +
                           " requests");
      sim::Simulator s(c, net, std::move(stream), sim_args.initial_net());
      const sim::Metrics& m = s.run();
      write_outputs(sim_out, "summary", c, m, force);
      std::cout << describe(m) << '\n';
      if (m.audit.violations()) log(Level::warn, "audit reported " + std::to_string(m.audit.violations()) + " violations");
      return 0;
    }
    if (*train) {
      if (train_args.no_train) throw UsageError("--no-train makes no sense for train");
      std::optional<valuefn::ValueNet> net_state = train_args.initial_net();
      RoadNetwork net = train_args.network.load();
      if (fs::exists(checkpoint_out) && !force) throw UsageError(checkpoint_out + " exists (use --force to overwrite)");
      sim::SimConfig c = train_args.config(train_args.mode);
      sim::Metrics last;
      for (std::size_t p = 0; p < passes; ++p) {
        SimArgs pass_args = train_args;
        pass_args.seed = train_args.seed + p;
        c.seed = pass_args.seed;
        sim::Simulator s(c, net, pass_args.stream(net), std::move(net_state));
        last = s.run();
        net_state = s.value_net();
        log(Level::info, "pass " + std::to_string(p + 1) + ": " + describe(last));
      }
      valuefn::save_checkpoint_file(*net_state, checkpoint_out);
      write_outputs(train_out, "summary", c, last, force);
      std::cout << describe(last) << '\n';
      return 0;
    }
    if (*compare) {
      if (modes.empty() || seeds.empty()) throw UsageError("need at least one mode and one seed");
      if (!horizons.empty()) {
        if (horizons.size() != modes.size()) throw UsageError("--horizons needs one value per mode");
        for (std::size_t h : horizons)
          if (h != horizons.front()) throw UsageError("modes must share one horizon");
        cmp_args.horizon = horizons.front();
      }
      RoadNetwork net = cmp_args.network.load();
      nlohmann::ordered_json report;
      report["seeds"] = seeds;
      std::vector<double> mean_served(modes.size(), 0.0), mean_dist(modes.size(), 0.0);
      for (std::uint64_t seed : seeds) {
        SimArgs a = cmp_args;
        a.seed = seed;
        RequestStream stream = a.stream(net);
        for (std::size_t i = 0; i < modes.size(); ++i) {
          sim::SimConfig c = a.config(modes[i]);
          sim::Simulator s(c, net, stream, a.initial_net());
          const sim::Metrics& m = s.run();
          write_outputs(cmp_out, modes[i] + "_seed" + std::to_string(seed), c, m, force);
          report["runs"].push_back({{"mode", modes[i]},
                                    {"seed", seed},
                                    {"served", m.served},
                                    {"average_distance_m", m.average_distance()},
                                    {"audit_violations", m.audit.violations()}});
          mean_served[i] += static_cast<double>(m.served) / static_cast<double>(seeds.size());
          mean_dist[i] += m.average_distance() / static_cast<double>(seeds.size());
          log(Level::info, modes[i] + " seed " + std::to_string(seed) + ": " + describe(m));
        }
      }
      std::cout << std::left << std::setw(14) << "mode" << std::right << std::setw(14) << "mean_served" << std::setw(16)
                << "mean_avg_dist";
      if (modes.size() > 1) std::cout << std::setw(14) << "served_%" << std::setw(12) << "dist_%";
      std::cout << '\n';
      for (std::size_t i = 0; i < modes.size(); ++i) {
        nlohmann::ordered_json row{{"mode", modes[i]}, {"mean_served", mean_served[i]}, {"mean_average_distance_m", mean_dist[i]}};
        std::cout << std::left << std::setw(14) << modes[i] << std::right << std::fixed << std::setprecision(2)
                  << std::setw(14) << mean_served[i] << std::setw(16) << mean_dist[i];
        if (modes.size() > 1) {
          const double ds = mean_served[0] > 0 ? 100.0 * (mean_served[i] - mean_served[0]) / mean_served[0] : 0.0;
          const double dd = mean_dist[0] > 0 ? 100.0 * (mean_dist[0] - mean_dist[i]) / mean_dist[0] : 0.0;
          row["served_improvement_pct"] = ds;
          row["distance_improvement_pct"] = dd;
          std::cout << std::setw(14) << ds << std::setw(12) << dd;
        }
        std::cout << '\n';
        report["summary"].push_back(row);
      }
      auto out = open_output(fs::path(cmp_out) / "compare.json", force);
      out << report.dump(2) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    log(Level::error, e.what());
    return 2;
  } catch (const std::exception& e) {
    log(Level::error, e.what());
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
