#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/rng.hpp"
#include "scenebench/scene_model.hpp"
#include "scenebench/spatial_solver.hpp"

namespace scenebench::placement_solver {

enum class Cause { fell_off, toppled, sank };

struct UnstableEntry {
  std::string object;
  double displacement = 0.0;
  Cause cause = Cause::fell_off;
  std::string support;  // what the object fell off / toppled on / sank into
};

struct StabilityReport {
  std::map<std::string, double> displacement;
  std::map<std::string, double> settled_z;  // center height after settling
  std::vector<UnstableEntry> unstable;
  bool stable = true;
};

struct PlacementFailure {
  std::string support;
  int attempts = 20;
};

struct PlacementConfig {
  int k_attempts = 20;
  double edge_band = 0.15;     // fraction of the face half-extent
  double center_jitter = 0.01;  // meters
};

// Rejection-samples a spot on the support's top face: up to k_attempts
// candidate centers per the hint (center: face center with jitter; edge:
// within the border band; random: uniform), rejecting candidates whose
// footprint leaves the face or overlaps a peer.
std::variant<geometry::Pose, PlacementFailure> place_on(
    const scene_model::Placement& support, const geometry::Vec3& obj_dims,
    double obj_yaw, const std::vector<geometry::Obb>& peers,
    scene_model::PositionHint hint, const PlacementConfig& cfg, Rng& rng);

struct PlaceInConfig {
  double epsilon_margin = 0.005;
  double gamma = 0.7;
  double buffer = 0.01;
};

struct PlaceInResult {
  std::vector<std::pair<std::string, geometry::Pose>> placed;
  std::vector<std::string> dropped;  // overflow past the 0.8-area capacity
  bool area_filter_triggered = false;
  std::optional<PlacementFailure> failure;  // container too small for a cell
};

// Grid packing over the container's gamma-scaled floor. Objects whose total
// footprint area exceeds 0.8x the container floor are sorted ascending by
// footprint and the overflow suffix dropped. Kept objects take the
// container's yaw so the grid guarantees pairwise clearance.
PlaceInResult place_in(
    const scene_model::Placement& container,
    const std::vector<std::pair<std::string, geometry::Vec3>>& objects,
    const PlaceInConfig& cfg, Rng& rng);

// Quasi-static settle: each object drops along -z onto the highest eligible
// surface under its footprint center (table, a support's top face, or a
// container's interior floor). Displacement is the drop distance; an object
// whose center of mass lands outside the supporting face shrunk by 1 cm
// topples (displacement set to its height); a contained object whose
// footprint exceeds the container opening sinks. The catalog supplies
// categories so containers admit interiors.
StabilityReport settle_and_check(const scene_model::Scene& scene,
                                 const scene_model::Catalog& catalog,
                                 double threshold = 0.02);

std::string feedback_message(const StabilityReport& report);
std::string feedback_message(const spatial_solver::SolveFailure& failure);
std::string feedback_message(const PlacementFailure& failure);

// Single-pass grid baseline: object k goes to cell k of an R x C division of
// the table, jittered uniformly within the central half of its cell, resting
// directly on the table.
scene_model::Scene baseline_grid_layout(
    const std::vector<std::pair<std::string, geometry::Vec3>>& objects,
    int rows, int cols, const geometry::TableBounds& bounds, Rng& rng);

}  // namespace scenebench::placement_solver
