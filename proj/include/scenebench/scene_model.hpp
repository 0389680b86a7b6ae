#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scenebench/geometry.hpp"

namespace scenebench::scene_model {

enum class Category { container, support, food, tool, other };

Category category_from_string(const std::string& s);
std::string category_to_string(Category c);

struct CatalogEntry {
  std::string name;
  geometry::Vec3 dims{0.0, 0.0, 0.0};
  Category category = Category::other;
  std::string description;

  double footprint_area() const { return dims.x() * dims.y(); }
};

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CatalogEntry> entries);

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry* find(const std::string& name) const;
  bool contains(const std::string& name) const { return find(name) != nullptr; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<CatalogEntry> entries_;
};

Catalog load_catalog(const std::string& path);
Catalog parse_catalog(const std::string& json_text);

// Placement predicates, in the wire schema of the planning prompt. Yaw is in
// degrees on the wire; conversion to radians happens in the solvers.
struct PlaceOnBase {
  std::string object;
  double x = 0.0;
  double y = 0.0;
  double yaw_deg = 0.0;
};

struct PlaceIn {
  std::vector<std::string> objects;
  std::string container;
};

enum class PositionHint { center, edge, random };

PositionHint position_hint_from_string(const std::string& s);
std::string position_hint_to_string(PositionHint h);

struct PlaceOn {
  std::string object;
  std::string support;
  PositionHint position = PositionHint::center;
};

struct ClusterAround {
  std::vector<std::string> objects;
  std::string anchor;
  double radius = 0.1;
};

struct PlaceAnywhere {
  std::string object;
};

using Predicate =
    std::variant<PlaceOnBase, PlaceIn, PlaceOn, ClusterAround, PlaceAnywhere>;

struct ScenePlan {
  std::vector<std::string> objects;
  std::vector<Predicate> predicates;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidatedPlan {
  ScenePlan plan;
  std::vector<Violation> violations;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strict parser for the planning schema: top-level keys "objects" and
// "predicates" only, objects are {"name": ...}, predicates carry a "type"
// discriminator, unknown keys rejected. Throws ParseError (malformed JSON,
// message carries the byte offset) or SchemaError (message names the path).
ScenePlan parse_scene_plan(const std::string& text);

std::string serialize_scene_plan(const ScenePlan& plan);

// Repairs a plan against the catalog: unknown objects are dropped, broken
// references downgrade dependents to PlaceAnywhere, containers/supports
// without a base placement get one synthesized at the table center. Never
// throws; every repair is recorded.
ValidatedPlan validate_plan(const ScenePlan& plan, const Catalog& catalog,
                            const geometry::TableBounds& bounds);

struct Placement {
  std::string name;
  geometry::Pose pose;
  geometry::Vec3 dims{0.0, 0.0, 0.0};

  geometry::Obb obb() const {
    return geometry::Obb(pose.position, 0.5 * dims,
                         geometry::yaw_from_quat(pose.orientation));
  }
};

struct Scene {
  std::vector<Placement> placements;
  geometry::TableBounds bounds;

  // Quantizes to the serialization precision (positions and dims at 1e-6,
  // quaternions at 1e-12) so serialize/parse round-trips are exact.
  void add(const std::string& name, const geometry::Pose& pose,
           const geometry::Vec3& dims);

  const Placement* find(const std::string& name) const;
};

double quantize(double v, int decimals);
geometry::Pose quantize(const geometry::Pose& pose);

std::string serialize_scene(const Scene& scene);
Scene parse_scene(const std::string& text);

}  // namespace scenebench::scene_model
