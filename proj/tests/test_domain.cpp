#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "layermig/catalog.hpp"
#include "layermig/config.hpp"
#include "layermig/mobility.hpp"
#include "layermig/random.hpp"
#include "layermig/scenario.hpp"

using namespace layermig;

TEST_CASE("manhattan distance is a metric") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const GridPos a{rng.uniform_int(-20, 20), rng.uniform_int(-20, 20)};
    const GridPos b{rng.uniform_int(-20, 20), rng.uniform_int(-20, 20)};
    const GridPos c{rng.uniform_int(-20, 20), rng.uniform_int(-20, 20)};
    CHECK(manhattan_hops(a, a) == 0);
    CHECK(manhattan_hops(a, b) == manhattan_hops(b, a));
    CHECK(manhattan_hops(a, c) <= manhattan_hops(a, b) + manhattan_hops(b, c));
    if (a != b) CHECK(manhattan_hops(a, b) > 0);
  }
  CHECK(manhattan_hops({0, 0}, {2, 3}) == 5);
}

TEST_CASE("grid layout and uplink rings") {
  const Grid g = grid_for_nodes(9);
  CHECK(g.cols == 3);
  CHECK(g.rows == 3);
  CHECK(node_cell(g, 4) == GridPos{1, 1});
  CHECK(node_cell(g, 5) == GridPos{2, 1});
  const std::vector<double> table{60, 48, 36, 24, 12};
  CHECK(uplink_mbps(g, {1, 1}, table) == 60.0);
  CHECK(uplink_mbps(g, {0, 0}, table) == 48.0);
  CHECK(uplink_mbps(g, {2, 1}, table) == 48.0);

  const Grid big{11, 11};
  CHECK(uplink_mbps(big, {5, 5}, table) == 60.0);
  CHECK(uplink_mbps(big, {0, 5}, table) == 12.0);  // ring 5 repeats the last entry
  CHECK(grid_for_nodes(4).cols == 2);
  CHECK(grid_for_nodes(5).cols == 3);
  CHECK(grid_for_nodes(5).rows == 2);
  CHECK_THROWS(grid_for_nodes(0));
}

TEST_CASE("target ordering and actions") {
  CHECK(Target::edge(0) < Target::edge(1));
  CHECK(Target::edge(8) < Target::cloud());
  CHECK(Target::cloud().action(9) == 9);
  CHECK(Target::from_action(9, 9).is_cloud());
  CHECK(Target::from_action(3, 9) == Target::edge(3));
  CHECK(Target::edge(2).label() == "3");
  CHECK(Target::cloud().label() == "cloud");
  CHECK_THROWS_AS(Target::cloud().node(), std::logic_error);
}

TEST_CASE("layer store queue drains FIFO into the inventory") {
  const auto cat = fixtures::catalog({50, 25, 10}, {{0, 1, 2}});
  LayerStore s(3);
  s.enqueue(0, 50);
  s.enqueue(1, 25);
  CHECK(s.queued(0));
  CHECK_FALSE(s.has(0));
  CHECK(s.occupancy_mb() == doctest::Approx(75));
  auto done = s.progress(60, cat);
  REQUIRE(done.size() == 1);
  CHECK(done[0] == 0);
  CHECK(s.has(0));
  CHECK(s.queue().front().remaining_mb == doctest::Approx(15));
  done = s.progress(100, cat);
  CHECK(done == std::vector<LayerId>{1});
  CHECK(s.queue().empty());
  CHECK(s.stored_mb() == doctest::Approx(75));
  s.remove(0, 50);
  CHECK_FALSE(s.has(0));
  CHECK(s.stored_mb() == doctest::Approx(25));
}

TEST_CASE("layer pins are reference counted") {
  LayerStore s(2);
  s.pin(1);
  s.pin(1);
  s.unpin(1);
  CHECK(s.refs(1) == 1);
  s.unpin(1);
  CHECK(s.refs(1) == 0);
  CHECK_THROWS(s.unpin(1));
}

TEST_CASE("generated catalogs respect size bounds and are deterministic") {
  CatalogConfig cfg;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LayerCatalog c = generate_catalog(cfg, seed);
    CHECK(c.num_layers() == 60);
    CHECK(c.num_images() == 20);
    for (std::size_t i = 0; i < c.num_images(); ++i) {
      const double size = c.image_size_mb(static_cast<ImageId>(i));
      CHECK(size >= 0.5);
      CHECK(size <= 100.0);
      const auto& ids = c.image(static_cast<ImageId>(i)).layer_ids;
      CHECK(std::set<LayerId>(ids.begin(), ids.end()).size() == ids.size());
      for (LayerId l = 0; l < c.num_layers(); ++l) {
        const bool member = std::find(ids.begin(), ids.end(), l) != ids.end();
        CHECK(c.container_has_layer(static_cast<ContainerId>(i), l) == member);
      }
    }
    CHECK(c == generate_catalog(cfg, seed));
  }
  CHECK_FALSE(generate_catalog(cfg, 1) == generate_catalog(cfg, 2));
}

TEST_CASE("popularity skew concentrates reuse on a few layers") {
  CatalogConfig flat;
  flat.popularity_skew = 0.0;
  CatalogConfig skewed;
  skewed.popularity_skew = 1.5;
  double flat_top = 0, skewed_top = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto a = generate_catalog(flat, seed).layer_reuse_counts();
    auto b = generate_catalog(skewed, seed).layer_reuse_counts();
    flat_top += *std::max_element(a.begin(), a.end());
    skewed_top += *std::max_element(b.begin(), b.end());
  }
  CHECK(skewed_top > flat_top);
}

TEST_CASE("catalog json round trip and validation") {
  const auto c = generate_catalog(CatalogConfig{}, 3);
  CHECK(LayerCatalog::from_json(c.to_json()) == c);
  CHECK_THROWS(fixtures::catalog({1.0}, {{0, 1}}));  // unknown layer
  CatalogConfig bad;
  bad.min_layers_per_image = 9;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("rng distributions") {
  Rng rng(11);
  double sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  double p = 0;
  for (int i = 0; i < 20000; ++i) p += rng.poisson(2.0);
  CHECK(p / 20000 == doctest::Approx(2.0).epsilon(0.03));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}

TEST_CASE("config json round trip keeps every field") {
  SimConfig c = toy_config();
  c.storage_check = StorageCheck::kMissingBytes;
  c.sigma_wait = 2.5;
  SimConfig d;
  merge_json(to_json(c), d);
  CHECK(to_json(d) == to_json(c));
  SimConfig e;
  merge_json(nlohmann::json{{"num_nodes", 4}}, e);
  CHECK(e.num_nodes == 4);
  CHECK(e.node_cpu_ghz == 128.0);
}

TEST_CASE("default scenario carries the reference settings") {
  const SimConfig c;
  CHECK(c.num_nodes == 9);
  CHECK(c.node_cpu_ghz == 128.0);
  CHECK(c.max_containers == 30);
  CHECK(c.uplink_table_mbps == std::vector<double>{60, 48, 36, 24, 12});
  CHECK(c.service_mb == Range{0.5, 100.0});
  CHECK(c.offload_mb == Range{0.05, 5.0});
  CHECK(c.kappa == Range{200.0, 10000.0});
  CHECK(c.node_storage_gb == Range{30.0, 100.0});
  CHECK(c.node_bandwidth_mbps == Range{800.0, 1024.0});
  CHECK(c.eta_bh_mbps == Range{400.0, 600.0});
  CHECK(c.sigma_bh == 0.02);
  CHECK(c.sigma_migr == Range{1.0, 3.0});
  CHECK(c.sigma_mem == 0.8);
  CHECK(c.sigma_cpu == 0.8);
  CHECK(c.slice_seconds == 10.0);
  CHECK(c.poisson_rate == 2.0);
  CHECK_NOTHROW(validate(c));
  SimConfig bad;
  bad.sigma_mem = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("scenario is a pure function of its config") {
  const Scenario a = build_scenario(SimConfig{});
  const Scenario b = build_scenario(SimConfig{});
  REQUIRE(a.initial.nodes.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(a.initial.nodes[i].storage_gb == b.initial.nodes[i].storage_gb);
    CHECK(a.initial.nodes[i].bandwidth_mbps == b.initial.nodes[i].bandwidth_mbps);
    CHECK(a.initial.nodes[i].storage_gb >= 30.0);
    CHECK(a.initial.nodes[i].storage_gb <= 100.0);
  }
  CHECK(a.catalog == b.catalog);
  const auto u1 = episode_users(a, 4);
  const auto u2 = episode_users(a, 4);
  REQUIRE(u1.size() == u2.size());
  CHECK(u1[0].trajectory == u2[0].trajectory);
}

TEST_CASE("random waypoint users stay on the grid and move one cell per axis at most") {
  Rng rng(3);
  const Grid g{3, 3};
  const auto users = random_waypoint_users(10, g, 200, 0.5, rng);
  REQUIRE(users.size() == 10);
  for (const auto& u : users) {
    REQUIRE(u.trajectory.size() == 201);
    for (std::size_t t = 0; t < u.trajectory.size(); ++t) {
      CHECK(g.contains(u.trajectory[t]));
      if (t > 0) {
        CHECK(std::abs(u.trajectory[t].x - u.trajectory[t - 1].x) <= 1);
        CHECK(std::abs(u.trajectory[t].y - u.trajectory[t - 1].y) <= 1);
      }
    }
    CHECK(u.at(10000) == u.trajectory.back());
  }
}

TEST_CASE("trace parsing maps fixes to cells and resamples per slice") {
  TraceOptions opt;
  opt.region = {0.0, 3.0, 0.0, 3.0};
  opt.grid = Grid{3, 3};
  opt.slice_seconds = 10;
  std::istringstream in(
      "user_id,timestamp,lat,lon\n"
      "a,100,0.5,0.5\n"
      "a,125,1.5,2.5\n"
      "b,100,2.9,0.1\n"
      "b,110,9.0,9.0\n");
  const auto r = parse_trajectories(in, opt);
  CHECK(r.rows_read == 4);
  CHECK(r.rows_outside == 1);
  REQUIRE(r.users.size() == 2);
  const auto& a = r.users[0];
  CHECK(r.user_names[0] == "a");
  CHECK(a.at(0) == GridPos{0, 0});
  CHECK(a.at(2) == GridPos{0, 0});  // slice 2 starts at t=120, before the second fix
  CHECK(a.at(3) == GridPos{2, 1});  // lon -> x, lat -> y

  std::istringstream bad("user_id,timestamp,lat,lon\nx,abc,1,1\n");
  CHECK_THROWS_AS(parse_trajectories(bad, opt), TraceError);
  std::istringstream header("foo,bar\n");
  CHECK_THROWS_AS(parse_trajectories(header, opt), TraceError);
}
