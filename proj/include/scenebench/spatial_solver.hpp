#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/rng.hpp"
#include "scenebench/scene_model.hpp"

namespace scenebench::spatial_solver {

struct SolverConfig {
  double base_margin = 0.01;
  std::vector<double> margin_ladder = {1.0, 1.25, 1.5, 2.0};
  int k_max = 200;
  int stall_window = 10;
  double perturb_sigma = 0.03;
  std::uint64_t rng_seed = 0;
};

struct Layout2D {
  struct Entry {
    std::string name;
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // radians
  };
  std::vector<Entry> entries;

  const Entry* find(const std::string& name) const;
};

struct SolveReport {
  double margin = 0.0;  // margin at which the solve succeeded
  int rung = 0;         // 1-based index into the margin ladder
  int iterations = 0;   // resolution iterations spent on the final rung
  int perturbations = 0;
  // Distance each place-on-base object ended up from its requested spot.
  std::map<std::string, double> displacement;
};

struct SolveFailure {
  double margin = 0.0;  // last margin attempted
  std::vector<std::pair<std::string, std::string>> residual;
};

struct SolveResult {
  std::optional<Layout2D> layout;
  SolveReport report;
  std::optional<SolveFailure> failure;

  bool ok() const { return layout.has_value(); }
};

// Footprint OBB of an object standing on the table plane (bottom at z = 0).
geometry::Obb footprint_obb(double x, double y, double yaw,
                            const geometry::Vec3& dims);

// Unordered index pairs (i < j) whose footprints overlap at the margin.
std::vector<std::pair<std::size_t, std::size_t>> find_collisions(
    const std::vector<geometry::Obb>& footprints, double margin);

// Ring placement around an anchor: target j goes to angle 2*pi*j/n plus
// uniform jitter within +/- pi/(4n), at the given radius, clamped into
// bounds.
std::vector<std::pair<double, double>> polar_place(
    std::size_t n_targets, double anchor_x, double anchor_y, double radius,
    const geometry::TableBounds& bounds, Rng& rng);

// Pushes an overlapping pair apart along their center line, each by
// penetration/2 + margin/4. Direction is random when centers coincide.
void resolve_overlap(geometry::Obb& a, geometry::Obb& b, double margin,
                     Rng& rng);

// Shifts the box so its footprint AABB lies inside the bounds; axes whose
// footprint exceeds the table are centered.
void clamp_to_bounds(geometry::Obb& box, const geometry::TableBounds& bounds);

// Margin-relaxation layout solve over the plan's base-level objects (every
// object not contained or stacked by a predicate). Deterministic for a fixed
// cfg.rng_seed. Throws std::invalid_argument when an object cannot fit on
// the table at any axis-aligned orientation.
SolveResult solve_spatial(const scene_model::ScenePlan& plan,
                          const scene_model::Catalog& catalog,
                          const geometry::TableBounds& bounds,
                          const SolverConfig& cfg);

// Names of the plan's base-level objects, in plan order.
std::vector<std::string> base_objects(const scene_model::ScenePlan& plan);

}  // namespace scenebench::spatial_solver
