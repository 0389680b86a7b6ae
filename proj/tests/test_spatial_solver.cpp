#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "scenebench/spatial_solver.hpp"

namespace ss = scenebench::spatial_solver;
namespace sm = scenebench::scene_model;
namespace geo = scenebench::geometry;
using scenebench::Rng;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const sm::Catalog& catalog() {
  static const sm::Catalog c =
      sm::parse_catalog(read_file(SCENEBENCH_FIXTURE_DIR "/catalog.json"));
  return c;
}

geo::TableBounds table() {
  geo::TableBounds b;
  b.x_min = 0.25;
  b.x_max = 0.85;
  b.y_min = -0.4;
  b.y_max = 0.4;
  b.z_top = 0.75;
  return b;
}

std::vector<geo::Obb> layout_footprints(const ss::Layout2D& layout,
                                        const sm::ScenePlan& plan) {
  std::vector<geo::Obb> prints;
  for (const auto& e : layout.entries) {
    const sm::CatalogEntry* entry = catalog().find(e.name);
    REQUIRE(entry != nullptr);
    prints.push_back(ss::footprint_obb(e.x, e.y, e.yaw, entry->dims));
  }
  (void)plan;
  return prints;
}

}  // namespace

TEST_CASE("footprint_obb stands the box on the plane") {
  const geo::Obb b =
      ss::footprint_obb(0.3, -0.1, 0.5, geo::Vec3(0.2, 0.1, 0.08));
  CHECK(b.center.x() == doctest::Approx(0.3));
  CHECK(b.center.y() == doctest::Approx(-0.1));
  CHECK(b.center.z() == doctest::Approx(0.04));
  CHECK(b.half.x() == doctest::Approx(0.1));
  CHECK(b.half.y() == doctest::Approx(0.05));
  CHECK(b.half.z() == doctest::Approx(0.04));
  CHECK(b.yaw == doctest::Approx(0.5));
}

TEST_CASE("find_collisions matches a brute-force oracle") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> pos(-0.4, 0.4);
  std::uniform_real_distribution<double> ext(0.03, 0.15);
  std::uniform_real_distribution<double> ang(-3.14, 3.14);
  for (int round = 0; round < 50; ++round) {
    std::vector<geo::Obb> boxes;
    for (int i = 0; i < 12; ++i) {
      boxes.push_back(ss::footprint_obb(
          pos(gen), pos(gen), ang(gen),
          geo::Vec3(2.0 * ext(gen), 2.0 * ext(gen), 0.05)));
    }
    const double margin = 0.01;
    const auto pairs = ss::find_collisions(boxes, margin);
    std::set<std::pair<std::size_t, std::size_t>> got(pairs.begin(),
                                                      pairs.end());
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        if (geo::obb_overlap(boxes[i], boxes[j], margin)) {
          expected.insert({i, j});
        }
      }
    }
    CHECK(got == expected);
  }
}

TEST_CASE("polar_place spreads targets around the anchor") {
  Rng rng(5);
  const auto spots = ss::polar_place(4, 0.55, 0.0, 0.15, table(), rng);
  REQUIRE(spots.size() == 4);
  for (std::size_t j = 0; j < spots.size(); ++j) {
    const double dx = spots[j].first - 0.55;
    const double dy = spots[j].second - 0.0;
    const double r = std::hypot(dx, dy);
    CHECK(r == doctest::Approx(0.15).epsilon(1e-9));
    const double angle = std::atan2(dy, dx);
    const double target = 2.0 * std::numbers::pi * j / 4.0;
    const double delta =
        std::remainder(angle - target, 2.0 * std::numbers::pi);
    CHECK(std::abs(delta) <= std::numbers::pi / 16.0 + 1e-9);
  }
}

TEST_CASE("polar_place clamps to the table bounds") {
  Rng rng(6);
  const auto spots = ss::polar_place(6, 0.84, 0.39, 0.3, table(), rng);
  for (const auto& [x, y] : spots) {
    CHECK(x >= table().x_min);
    CHECK(x <= table().x_max);
    CHECK(y >= table().y_min);
    CHECK(y <= table().y_max);
  }
}

TEST_CASE("resolve_overlap separates boxes by penetration/2 + margin/4") {
  geo::Obb a = ss::footprint_obb(0.0, 0.0, 0.0, geo::Vec3(0.2, 0.2, 0.1));
  geo::Obb b = ss::footprint_obb(0.15, 0.0, 0.0, geo::Vec3(0.2, 0.2, 0.1));
  CHECK(geo::obb_penetration_xy(a, b) == doctest::Approx(0.05));
  Rng rng(1);
  const double margin = 0.02;
  // Penetration is measured at the solve margin (each box inflated by
  // margin/2), so for axis-aligned boxes it is the raw depth plus the margin.
  const double pen_at_margin = 0.05 + margin;
  ss::resolve_overlap(a, b, margin, rng);
  const double push = 0.5 * pen_at_margin + 0.25 * margin;
  CHECK(a.center.x() == doctest::Approx(-push));
  CHECK(b.center.x() == doctest::Approx(0.15 + push));
  CHECK(a.center.y() == doctest::Approx(0.0));
  CHECK_FALSE(geo::obb_overlap(a, b, margin));
}

TEST_CASE("resolve_overlap picks a random direction for coincident centers") {
  geo::Obb a = ss::footprint_obb(0.5, 0.0, 0.0, geo::Vec3(0.1, 0.1, 0.1));
  geo::Obb b = ss::footprint_obb(0.5, 0.0, 0.0, geo::Vec3(0.1, 0.1, 0.1));
  Rng rng(2);
  ss::resolve_overlap(a, b, 0.01, rng);
  CHECK((a.center - b.center).norm() > 1e-6);
}

TEST_CASE("clamp_to_bounds shifts footprints inside the table") {
  geo::Obb box = ss::footprint_obb(0.9, 0.5, 0.0, geo::Vec3(0.2, 0.2, 0.1));
  ss::clamp_to_bounds(box, table());
  double xmin, xmax, ymin, ymax;
  box.footprint_aabb(xmin, xmax, ymin, ymax);
  CHECK(xmin >= table().x_min - 1e-12);
  CHECK(xmax <= table().x_max + 1e-12);
  CHECK(ymin >= table().y_min - 1e-12);
  CHECK(ymax <= table().y_max + 1e-12);
}

TEST_CASE("clamp_to_bounds centers axes that cannot fit") {
  geo::Obb box = ss::footprint_obb(0.3, 0.0, 0.0, geo::Vec3(1.5, 0.2, 0.1));
  ss::clamp_to_bounds(box, table());
  CHECK(box.center.x() == doctest::Approx(table().center_x()));
}

TEST_CASE("base_objects excludes contained and stacked objects") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "apple_01", "banana", "mug"};
  plan.predicates.push_back(sm::PlaceOnBase{"bowl_0", 0.5, 0.0, 0.0});
  plan.predicates.push_back(sm::PlaceIn{{"apple_01"}, "bowl_0"});
  plan.predicates.push_back(
      sm::PlaceOn{"banana", "bowl_0", sm::PositionHint::center});
  const auto bases = ss::base_objects(plan);
  CHECK(bases == std::vector<std::string>{"bowl_0", "mug"});
}

TEST_CASE("solve_spatial honors requested base positions when clear") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "plate_large"};
  plan.predicates.push_back(sm::PlaceOnBase{"bowl_0", 0.4, 0.2, 10.0});
  plan.predicates.push_back(sm::PlaceOnBase{"plate_large", 0.7, -0.2, 0.0});
  ss::SolverConfig cfg;
  cfg.rng_seed = 17;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  REQUIRE(result.ok());
  CHECK(result.report.rung == 1);
  CHECK(result.report.iterations == 1);  // first pass finds no collisions
  const auto* bowl = result.layout->find("bowl_0");
  REQUIRE(bowl != nullptr);
  CHECK(bowl->x == doctest::Approx(0.4));
  CHECK(bowl->y == doctest::Approx(0.2));
  CHECK(bowl->yaw ==
        doctest::Approx(10.0 * std::numbers::pi / 180.0).epsilon(1e-9));
  CHECK(result.report.displacement.at("bowl_0") == doctest::Approx(0.0));
}

TEST_CASE("solve_spatial resolves authored overlaps collision-free") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "plate_large", "mug", "cup"};
  plan.predicates.push_back(sm::PlaceOnBase{"bowl_0", 0.5, 0.0, 0.0});
  plan.predicates.push_back(sm::PlaceOnBase{"plate_large", 0.52, 0.01, 30.0});
  plan.predicates.push_back(sm::PlaceOnBase{"mug", 0.5, -0.02, 0.0});
  plan.predicates.push_back(sm::PlaceOnBase{"cup", 0.48, 0.02, 0.0});
  ss::SolverConfig cfg;
  cfg.rng_seed = 99;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  REQUIRE(result.ok());
  const auto prints = layout_footprints(*result.layout, plan);
  CHECK(ss::find_collisions(prints, result.report.margin).empty());
  CHECK(result.report.iterations > 0);
  for (const auto& e : result.layout->entries) {
    double xmin, xmax, ymin, ymax;
    const sm::CatalogEntry* entry = catalog().find(e.name);
    ss::footprint_obb(e.x, e.y, e.yaw, entry->dims)
        .footprint_aabb(xmin, xmax, ymin, ymax);
    CHECK(xmin >= table().x_min - 1e-9);
    CHECK(xmax <= table().x_max + 1e-9);
    CHECK(ymin >= table().y_min - 1e-9);
    CHECK(ymax <= table().y_max + 1e-9);
  }
}

TEST_CASE("solve_spatial is deterministic for a fixed seed") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "mug", "cup", "spoon", "fork", "apple_01"};
  plan.predicates.push_back(sm::PlaceOnBase{"bowl_0", 0.5, 0.0, 0.0});
  plan.predicates.push_back(sm::ClusterAround{{"mug", "cup"}, "bowl_0", 0.1});

  ss::SolverConfig cfg;
  cfg.rng_seed = 12345;
  const ss::SolveResult a = ss::solve_spatial(plan, catalog(), table(), cfg);
  const ss::SolveResult b = ss::solve_spatial(plan, catalog(), table(), cfg);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  REQUIRE(a.layout->entries.size() == b.layout->entries.size());
  for (std::size_t i = 0; i < a.layout->entries.size(); ++i) {
    CHECK(a.layout->entries[i].name == b.layout->entries[i].name);
    CHECK(a.layout->entries[i].x == b.layout->entries[i].x);
    CHECK(a.layout->entries[i].y == b.layout->entries[i].y);
    CHECK(a.layout->entries[i].yaw == b.layout->entries[i].yaw);
  }
  CHECK(a.report.rung == b.report.rung);
  CHECK(a.report.iterations == b.report.iterations);

  ss::SolverConfig other = cfg;
  other.rng_seed = 54321;
  const ss::SolveResult c =
      ss::solve_spatial(plan, catalog(), table(), other);
  REQUIRE(c.ok());
  bool any_difference = false;
  for (std::size_t i = 0; i < a.layout->entries.size(); ++i) {
    if (a.layout->entries[i].x != c.layout->entries[i].x ||
        a.layout->entries[i].y != c.layout->entries[i].y) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("solve_spatial keeps cluster targets near their anchor") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "salt_shaker", "lime"};
  plan.predicates.push_back(sm::PlaceOnBase{"bowl_0", 0.55, 0.0, 0.0});
  plan.predicates.push_back(
      sm::ClusterAround{{"salt_shaker", "lime"}, "bowl_0", 0.18});
  ss::SolverConfig cfg;
  cfg.rng_seed = 3;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  REQUIRE(result.ok());
  const auto* anchor = result.layout->find("bowl_0");
  for (const char* name : {"salt_shaker", "lime"}) {
    const auto* e = result.layout->find(name);
    REQUIRE(e != nullptr);
    const double r = std::hypot(e->x - anchor->x, e->y - anchor->y);
    CHECK(r < 0.35);  // near the anchor, allowing resolution pushes
  }
}

TEST_CASE("solve_spatial escalates the margin ladder under crowding") {
  // Enough mid-size objects stacked on one spot that rung 1 tends to stall.
  sm::ScenePlan plan;
  plan.objects = {"plate_large", "plate_small", "cutting_board", "book",
                  "tray", "basket", "bowl_0", "bowl_small"};
  for (const auto& name : plan.objects) {
    plan.predicates.push_back(sm::PlaceOnBase{name, 0.55, 0.0, 0.0});
  }
  ss::SolverConfig cfg;
  cfg.rng_seed = 9;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  if (result.ok()) {
    const auto prints = layout_footprints(*result.layout, plan);
    CHECK(ss::find_collisions(prints, result.report.margin).empty());
    CHECK(result.report.margin ==
          doctest::Approx(cfg.base_margin *
                          cfg.margin_ladder[result.report.rung - 1]));
  } else {
    REQUIRE(result.failure.has_value());
    CHECK(result.failure->margin ==
          doctest::Approx(cfg.base_margin * cfg.margin_ladder.back()));
    CHECK(!result.failure->residual.empty());
  }
}

TEST_CASE("solve_spatial reports residual pairs when the table is "
          "overcommitted") {
  sm::ScenePlan plan;
  plan.objects = {"bin_0", "tray", "basket", "cutting_board", "bowl_0",
                  "plate_large", "plate_small", "book", "bowl_small",
                  "whisk", "spatula", "knife"};
  ss::SolverConfig cfg;
  cfg.rng_seed = 21;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  if (!result.ok()) {
    REQUIRE(result.failure.has_value());
    CHECK(!result.failure->residual.empty());
    for (const auto& [a, b] : result.failure->residual) {
      CHECK(a != b);
    }
  }
}

TEST_CASE("solve_spatial rejects objects larger than the table") {
  sm::Catalog big = sm::parse_catalog(
      R"([{"name": "marble_slab", "dims": [1.2, 0.9, 0.1], "category": "support"}])");
  sm::ScenePlan plan;
  plan.objects = {"marble_slab"};
  ss::SolverConfig cfg;
  CHECK_THROWS_AS(ss::solve_spatial(plan, big, table(), cfg),
                  std::invalid_argument);
}

TEST_CASE("solver stays within the iteration budget") {
  sm::ScenePlan plan;
  plan.objects = {"bowl_0", "tray", "basket", "plate_large", "cutting_board"};
  for (const auto& name : plan.objects) {
    plan.predicates.push_back(sm::PlaceOnBase{name, 0.55, 0.0, 0.0});
  }
  ss::SolverConfig cfg;
  cfg.rng_seed = 4;
  const ss::SolveResult result =
      ss::solve_spatial(plan, catalog(), table(), cfg);
  CHECK(result.report.iterations <= cfg.k_max);
}
