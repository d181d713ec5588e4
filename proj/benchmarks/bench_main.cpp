#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "teleop/error_model.hpp"
#include "teleop/geometry.hpp"
#include "teleop/scenario.hpp"
#include "teleop/sim.hpp"

using namespace teleop;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Pose::from_quaternion(q, Vec3(n(rng), n(rng), n(rng)) * 0.1);
}

struct Pair {
  geometry::SphereProxy sphere;
  geometry::ConvexObstacle obstacle;
};

std::vector<Pair> corner_pairs(bool tet) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Pair> out;
  for (int i = 0; i < 256; ++i) {
    const Pose pose = random_pose(rng);
    if (tet) {
      const std::array<Vec3, 4> v{Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(0, 0.1, 0), Vec3(0, 0, 0.1)};
      const auto o = geometry::ConvexObstacle::tetrahedron(pose, v);
      out.push_back({geometry::make_sphere(pose.apply(Vec3(u(rng), u(rng), u(rng)) * 0.01), 0.03), o});
    } else {
      const Vec3 he(0.05, 0.07, 0.09);
      const auto o = geometry::ConvexObstacle::box(pose, he);
      const Vec3 corner = he + Vec3(u(rng), u(rng), u(rng)) * 0.01;
      out.push_back({geometry::make_sphere(pose.apply(corner), 0.02), o});
    }
  }
  return out;
}

void overlap_box(benchmark::State& state) {
  const auto pairs = corner_pairs(false);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& p = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(geometry::overlap_volume(p.sphere, p.obstacle));
  }
}
BENCHMARK(overlap_box);

void overlap_tet(benchmark::State& state) {
  const auto pairs = corner_pairs(true);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& p = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(geometry::overlap_volume(p.sphere, p.obstacle));
  }
}
BENCHMARK(overlap_tet);

void oracle_box(benchmark::State& state) {
  const auto pairs = corner_pairs(false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometry::overlap_oracle(pairs[0].sphere, pairs[0].obstacle,
                                                      static_cast<std::uint64_t>(state.range(0)), 1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(oracle_box)->Arg(100000)->Unit(benchmark::kMillisecond);

void inverse_normal_cdf(benchmark::State& state) {
  double p = 0.0;
  for (auto _ : state) {
    p = p >= 0.999 ? 0.001 : p + 0.001;
    benchmark::DoNotOptimize(error_model::inverse_normal_cdf(p));
  }
}
BENCHMARK(inverse_normal_cdf);

void sim_tick(benchmark::State& state) {
  auto j = scenario::read_json_file(TELEOP_DATA_DIR "/harness_scenario.json");
  scenario::Json obstacles = scenario::Json::array();
  const int count = static_cast<int>(state.range(0));
  for (int i = 0; i < count; ++i) {
    const double side = i % 2 ? 1.0 : -1.0;
    obstacles.push_back({{"kind", "box"},
                         {"pose", {{"translation", {0.02 * i, side * 0.045, 0.0}},
                                   {"rotation_quaternion", {1, 0, 0, 0}}}},
                         {"half_extents", {0.012, 0.01, 0.015}}});
  }
  j["obstacles"] = obstacles;
  const auto sc = scenario::parse_scenario(j);
  const auto config = sim::make_config(sc, sim::scenario_enlargement(sc));
  sim::WorldState world = sim::initial_state(sc);
  sim::InputQueue uplink(0);
  std::int64_t t = 0;
  for (auto _ : state) {
    if (t % 400 == 0) world.ee_pose.translation = {-0.02, 0, 0};
    sim::OperatorInput in;
    in.seq = t + 1;
    in.lin = {0.1, 0, 0};
    uplink.push(t, sim::IssuedInput{t, in});
    auto [next, rec] = sim::step(world, uplink, config);
    benchmark::DoNotOptimize(rec);
    world = std::move(next);
    ++t;
  }
}
BENCHMARK(sim_tick)->Arg(1)->Arg(20)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
