#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "teleop/errors.hpp"
#include "teleop/geometry.hpp"
#include "teleop/random.hpp"
#include "teleop/scenario.hpp"
#include "teleop/server.hpp"
#include "teleop/session.hpp"
#include "teleop/trace.hpp"
#include "teleop/trials.hpp"

namespace teleop::cli {

namespace {

using sim::OrderedJson;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "json";
};

std::uint64_t resolve_seed(const Globals& g) {
  if (g.seed) return *g.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

OrderedJson manifest(const std::string& subcommand, const std::vector<std::string>& inputs,
                     std::optional<std::uint64_t> seed, const Globals& g) {
  OrderedJson m;
  m["format_version"] = sim::kTraceFormatVersion;
  m["subcommand"] = subcommand;
  m["inputs"] = inputs;
  if (seed) m["seed"] = *seed;
  m["output"] = g.out.empty() ? "-" : g.out;
  return m;
}

/// Writes to --out when given, else to `out`.
class Output {
 public:
  Output(const Globals& g, std::ostream& out) {
    if (g.out.empty()) {
      stream_ = &out;
    } else {
      file_.open(g.out);
      if (!file_) throw Error(ErrorCode::Io, "cannot open " + g.out + " for writing");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::string fixed(double v, int precision = 9) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

OrderedJson gaussian_json(const error_model::GaussianSpec& g) {
  OrderedJson j;
  j["mean"] = g.mean;
  j["sigma"] = g.sigma;
  return j;
}

int cmd_enlarge(const Globals& g, const std::string& file, std::optional<double> p,
                std::ostream& out) {
  const auto spec = scenario::parse_sensor_spec(scenario::read_json_file(file));
  const auto b = scenario::compute_budget(spec, p);
  Output o(g, out);
  if (g.format == "table") {
    *o << std::left << std::setw(22) << "term" << "value\n"
       << std::setw(22) << "camera_mean_m" << fixed(b.camera.mean) << '\n'
       << std::setw(22) << "camera_sigma_m" << fixed(b.camera.sigma) << '\n'
       << std::setw(22) << "ee_mean_m" << fixed(b.end_effector.mean) << '\n'
       << std::setw(22) << "ee_sigma_m" << fixed(b.end_effector.sigma) << '\n'
       << std::setw(22) << "delay_displacement_m" << fixed(b.delay_displacement) << '\n'
       << std::setw(22) << "probability" << fixed(b.probability) << '\n'
       << std::setw(22) << "quantile_m" << fixed(b.quantile) << '\n'
       << std::setw(22) << "enlargement_m" << fixed(b.enlargement_distance) << '\n';
    return kExitOk;
  }
  OrderedJson j;
  j["manifest"] = manifest("enlarge", {file}, std::nullopt, g);
  j["budget"]["camera"] = gaussian_json(b.camera);
  j["budget"]["end_effector"] = gaussian_json(b.end_effector);
  j["budget"]["delay_displacement"] = b.delay_displacement;
  j["budget"]["probability"] = b.probability;
  j["budget"]["quantile"] = b.quantile;
  j["budget"]["enlargement_distance"] = b.enlargement_distance;
  *o << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_overlap(const Globals& g, const std::string& file, std::optional<std::uint64_t> oracle,
                double max_z, std::ostream& out, std::ostream& err) {
  const auto scene = scenario::parse_scene(scenario::read_json_file(file));
  const std::optional<std::uint64_t> seed =
      oracle ? std::optional<std::uint64_t>(resolve_seed(g)) : std::nullopt;
  OrderedJson rows = OrderedJson::array();
  bool diverged = false;
  for (std::size_t s = 0; s < scene.spheres.size(); ++s) {
    for (std::size_t o = 0; o < scene.obstacles.size(); ++o) {
      const auto& sphere = scene.spheres[s];
      const auto& obstacle = scene.obstacles[o];
      OrderedJson row;
      row["sphere"] = s;
      row["obstacle"] = o;
      row["kind"] = obstacle.kind() == geometry::ObstacleKind::Box ? "box" : "tetrahedron";
      const auto analytic = geometry::overlap_analytic(sphere, obstacle);
      row["volume"] = analytic.volume;
      if (oracle) {
        const std::uint64_t pair_seed = derive_key(*seed, s * scene.obstacles.size() + o);
        const auto mc = geometry::overlap_oracle(sphere, obstacle, *oracle, pair_seed);
        row["mc_volume"] = mc.volume;
        row["mc_standard_error"] = mc.standard_error;
        const double diff = analytic.volume - mc.volume;
        const double z = mc.standard_error > 0.0 ? diff / mc.standard_error
                                                 : (std::abs(diff) <= 1e-12 * sphere.volume() ? 0.0 : INFINITY);
        row["z"] = std::isfinite(z) ? OrderedJson(z) : OrderedJson(nullptr);
        if (!(std::abs(z) <= max_z)) diverged = true;
      }
      rows.push_back(std::move(row));
    }
  }
  Output os(g, out);
  if (g.format == "table") {
    *os << std::left << std::setw(8) << "sphere" << std::setw(10) << "obstacle" << std::setw(13)
        << "kind" << std::setw(18) << "volume_m3";
    if (oracle) *os << std::setw(18) << "mc_m3" << std::setw(14) << "se_m3" << "z";
    *os << '\n';
    for (const auto& r : rows) {
      *os << std::setw(8) << r["sphere"].get<std::size_t>() << std::setw(10)
          << r["obstacle"].get<std::size_t>() << std::setw(13) << r["kind"].get<std::string>()
          << std::setw(18) << fixed(r["volume"].get<double>(), 12);
      if (oracle) {
        *os << std::setw(18) << fixed(r["mc_volume"].get<double>(), 12) << std::setw(14)
            << fixed(r["mc_standard_error"].get<double>(), 4)
            << (r["z"].is_null() ? std::string("inf") : fixed(r["z"].get<double>(), 3));
      }
      *os << '\n';
    }
  } else {
    OrderedJson j;
    OrderedJson m = manifest("overlap", {file}, seed, g);
    if (oracle) m["oracle_samples"] = *oracle;
    j["manifest"] = std::move(m);
    j["pairs"] = std::move(rows);
    *os << j.dump(2) << '\n';
  }
  if (diverged) {
    err << "analytic volume differs from the Monte Carlo estimate by more than " << max_z
        << " standard errors\n";
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_trials(const Globals& g, const std::string& file, std::uint64_t n,
               std::optional<double> p, const std::string& policy_name,
               const std::string& input_trace, const std::string& trace_out,
               std::uint64_t trace_episode, unsigned threads, bool no_errors, std::ostream& out,
               std::ostream& err) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "--n must be >= 1");
  const auto sc = scenario::parse_scenario(scenario::read_json_file(file));
  const sim::Policy policy = sim::policy_from_string(policy_name);
  std::optional<sim::InputTrace> trace;
  if (policy == sim::Policy::OperatorTrace) {
    if (input_trace.empty()) throw Error(ErrorCode::InvalidArgument, "operator_trace needs --input-trace");
    trace = sim::load_input_trace(input_trace);
  }
  const std::uint64_t seed = resolve_seed(g);
  sim::TrialOptions options;
  options.n = n;
  options.policy = policy;
  options.seed = seed;
  options.probability = p;
  options.trace = trace ? &*trace : nullptr;
  options.inject_errors = !no_errors;
  options.threads = threads;

  std::vector<std::string> inputs{file};
  if (!input_trace.empty()) inputs.push_back(input_trace);

  const auto t0 = std::chrono::steady_clock::now();
  const auto summary = sim::run_trials(sc, options);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!trace_out.empty()) {
    if (trace_episode >= n) throw Error(ErrorCode::InvalidArgument, "--trace-episode must be < --n");
    std::ofstream tf(trace_out);
    if (!tf) throw Error(ErrorCode::Io, "cannot open " + trace_out + " for writing");
    sim::RunManifest m;
    m.subcommand = "trials";
    m.inputs = inputs;
    m.seed = seed;
    m.output = trace_out;
    m.episode = trace_episode;
    m.policy = std::string(sim::to_string(policy));
    m.probability = summary.probability;
    m.enlargement = summary.enlargement;
    m.inject_errors = !no_errors;
    m.scenario = sc.source;
    m.start_translation = sim::episode_start(sc, seed, trace_episode);
    sim::TraceWriter writer(tf);
    writer.begin(m);
    sim::EpisodeSpec spec{policy, options.trace, summary.enlargement, !no_errors, seed, trace_episode};
    sim::run_episode(sc, spec, [&](const sim::SimTickRecord& rec) { writer.write(rec); });
    writer.end();
  }

  Output o(g, out);
  if (g.format == "table") {
    *o << std::left << std::setw(20) << "n" << summary.n << '\n'
       << std::setw(20) << "policy" << sim::to_string(summary.policy) << '\n'
       << std::setw(20) << "seed" << summary.seed << '\n'
       << std::setw(20) << "probability" << fixed(summary.probability) << '\n'
       << std::setw(20) << "enlargement_m" << fixed(summary.enlargement) << '\n'
       << std::setw(20) << "contacts" << summary.contacts << '\n'
       << std::setw(20) << "contact_rate" << fixed(summary.contact_rate) << '\n'
       << std::setw(20) << "stopped" << summary.stopped << '\n'
       << std::setw(20) << "mean_min_clearance" << fixed(summary.mean_min_clearance) << '\n'
       << std::setw(20) << "min_min_clearance" << fixed(summary.min_min_clearance) << '\n'
       << std::setw(20) << "mean_duration_s" << fixed(summary.mean_duration_s) << '\n'
       << std::setw(20) << "wall_time_s" << fixed(wall, 4) << '\n';
  } else {
    OrderedJson j;
    j["manifest"] = manifest("trials", inputs, seed, g);
    j["manifest"]["n"] = n;
    j["manifest"]["policy"] = std::string(sim::to_string(policy));
    if (p) j["manifest"]["probability"] = *p;
    j["manifest"]["inject_errors"] = !no_errors;
    if (!trace_out.empty()) j["manifest"]["trace"] = trace_out;
    j["summary"] = sim::summary_to_json(summary);
    *o << j.dump(2) << '\n';
    err << "wall_time_s " << fixed(wall, 4) << '\n';
  }
  return kExitOk;
}

int cmd_replay(const std::string& file, std::ostream& out) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file);
  const auto r = sim::replay(in);
  if (r.identical) {
    out << "identical (" << r.records << " records)\n";
    return kExitOk;
  }
  out << "divergent at tick " << *r.divergent_tick << ": " << r.detail << '\n';
  return kExitDivergence;
}

struct ServeArgs {
  std::string scenario;
  std::uint16_t port = 8765;
  std::string address = "127.0.0.1";
  std::string record;
  std::optional<double> p;
  bool no_errors = false;
};

int serve(const ServeArgs& a, std::optional<std::uint64_t> seed_opt, std::ostream& out) {
  const auto sc = scenario::parse_scenario(scenario::read_json_file(a.scenario));
  std::ofstream record;
  protocol::SessionOptions options;
  options.seed = seed_opt.value_or(0);
  if (!seed_opt) {
    std::random_device rd;
    options.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  options.inject_errors = !a.no_errors;
  options.probability = a.p;
  options.inputs = {a.scenario};
  if (!a.record.empty()) {
    record.open(a.record);
    if (!record) throw Error(ErrorCode::Io, "cannot open " + a.record + " for writing");
    options.record = &record;
  }
  protocol::Session session(sc, options);
  protocol::Server server(session, {a.address, a.port, true});
  server.start();
  out << "listening on ws://" << a.address << ':' << server.port() << " (seed " << options.seed
      << ", enlargement " << fixed(session.enlargement()) << " m)\n";
  out.flush();
  server.wait();
  session.close_record();
  return kExitOk;
}

void add_serve_options(CLI::App& cmd, ServeArgs& a, bool positional) {
  if (positional) {
    cmd.add_option("scenario", a.scenario, "Scenario JSON file")->required();
  } else {
    cmd.add_option("--scenario", a.scenario, "Scenario JSON file")->required();
  }
  cmd.add_option("--port", a.port, "TCP port (0 picks a free one)");
  cmd.add_option("--address", a.address, "Bind address");
  cmd.add_option("--record", a.record, "Write a JSONL trace of every episode");
  cmd.add_option("--p", a.p, "Non-contact probability for the enlargement")->check(CLI::Range(0.0, 1.0));
  cmd.add_flag("--no-errors", a.no_errors, "Do not inject estimation errors");
}

int guarded(std::ostream& err, const std::function<int()>& f) {
  try {
    return f();
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
}

int parse(CLI::App& app, std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return -1;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return -1;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sphere-proxy overlap, enlargement budget and teleoperation trial tools", "teleop"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for randomized commands (recorded in the manifest)");
  app.add_option("--out", g.out, "Write the result to this file instead of stdout");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  app.fallthrough();

  std::string enlarge_file;
  std::optional<double> enlarge_p;
  auto* enlarge = app.add_subcommand("enlarge", "Enlargement distance for a sensor spec");
  enlarge->add_option("spec", enlarge_file, "Sensor spec JSON file")->required();
  enlarge->add_option("--p", enlarge_p, "Required non-contact probability (overrides the sensor spec)");

  std::string overlap_file;
  std::optional<std::uint64_t> oracle;
  double max_z = 5.0;
  auto* overlap = app.add_subcommand("overlap", "Overlap volume for every sphere-obstacle pair");
  overlap->add_option("scene", overlap_file, "Scene JSON file")->required();
  overlap->add_option("--oracle", oracle, "Add a Monte Carlo estimate with this many samples");
  overlap->add_option("--max-z", max_z, "Exit 1 when |analytic - MC| exceeds this many standard errors");

  std::string trials_file, policy = "stop_on_overlap", input_trace, trace_out;
  std::uint64_t n = 1, trace_episode = 0;
  std::optional<double> trials_p;
  unsigned threads = 0;
  bool no_errors = false;
  auto* trials = app.add_subcommand("trials", "Randomized approach episodes and contact statistics");
  trials->add_option("scenario", trials_file, "Scenario JSON file")->required();
  trials->add_option("--n", n, "Number of episodes");
  trials->add_option("--p", trials_p, "Non-contact probability (overrides the scenario)");
  trials->add_option("--policy", policy, "stop_on_overlap or operator_trace")
      ->check(CLI::IsMember({"stop_on_overlap", "operator_trace"}));
  trials->add_option("--input-trace", input_trace, "Operator input JSONL for operator_trace");
  trials->add_option("--trace", trace_out, "Write the tick records of one episode as JSONL");
  trials->add_option("--trace-episode", trace_episode, "Episode written by --trace");
  trials->add_option("--threads", threads, "Worker threads (0: all cores)");
  trials->add_flag("--no-errors", no_errors, "Do not inject estimation errors");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the operator session server");
  add_serve_options(*serve_cmd, serve_args, true);

  std::string replay_file;
  auto* replay = app.add_subcommand("replay", "Re-simulate a trace and compare every record");
  replay->add_option("trace", replay_file, "Trace JSONL file")->required();

  const int parsed = parse(app, args, out, err);
  if (parsed != kExitOk) return parsed < 0 ? kExitOk : parsed;

  return guarded(err, [&] {
    if (*enlarge) return cmd_enlarge(g, enlarge_file, enlarge_p, out);
    if (*overlap) return cmd_overlap(g, overlap_file, oracle, max_z, out, err);
    if (*trials) {
      return cmd_trials(g, trials_file, n, trials_p, policy, input_trace, trace_out, trace_episode,
                        threads, no_errors, out, err);
    }
    if (*serve_cmd) return serve(serve_args, g.seed, out);
    return cmd_replay(replay_file, out);
  });
}

int run_server(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operator session server", "teleop-server"};
  app.require_subcommand(1);
  ServeArgs a;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = app.add_subcommand("run", "Serve one scenario");
  add_serve_options(*run_cmd, a, false);
  run_cmd->add_option("--seed", seed, "Seed for the estimation errors");
  const int parsed = parse(app, args, out, err);
  if (parsed != kExitOk) return parsed < 0 ? kExitOk : parsed;
  return guarded(err, [&] { return serve(a, seed, out); });
}

}  // namespace teleop::cli
