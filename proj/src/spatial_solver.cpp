#include "scenebench/spatial_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace scenebench::spatial_solver {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kDegToRad = kPi / 180.0;

}  // namespace

const Layout2D::Entry* Layout2D::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

geometry::Obb footprint_obb(double x, double y, double yaw,
                            const geometry::Vec3& dims) {
  return geometry::Obb(geometry::Vec3(x, y, 0.5 * dims.z()), 0.5 * dims, yaw);
}

std::vector<std::pair<std::size_t, std::size_t>> find_collisions(
    const std::vector<geometry::Obb>& footprints, double margin) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < footprints.size(); ++i) {
    for (std::size_t j = i + 1; j < footprints.size(); ++j) {
      if (geometry::obb_overlap(footprints[i], footprints[j], margin)) {
        pairs.emplace_back(i, j);
      }
    }
  }
  return pairs;
}

std::vector<std::pair<double, double>> polar_place(
    std::size_t n_targets, double anchor_x, double anchor_y, double radius,
    const geometry::TableBounds& bounds, Rng& rng) {
  if (radius <= 0.0) throw std::invalid_argument("polar_place: radius <= 0");
  std::vector<std::pair<double, double>> out;
  out.reserve(n_targets);
  const double n = static_cast<double>(n_targets);
  for (std::size_t j = 0; j < n_targets; ++j) {
    const double jitter = rng.uniform(-kPi / (4.0 * n), kPi / (4.0 * n));
    const double theta = 2.0 * kPi * static_cast<double>(j) / n + jitter;
    double x = anchor_x + radius * std::cos(theta);
    double y = anchor_y + radius * std::sin(theta);
    x = std::clamp(x, bounds.x_min, bounds.x_max);
    y = std::clamp(y, bounds.y_min, bounds.y_max);
    out.emplace_back(x, y);
  }
  return out;
}

namespace {

double penetration_at_margin(const geometry::Obb& a, const geometry::Obb& b,
                             double margin) {
  geometry::Obb ai = a;
  geometry::Obb bi = b;
  ai.half.x() += 0.5 * margin;
  ai.half.y() += 0.5 * margin;
  bi.half.x() += 0.5 * margin;
  bi.half.y() += 0.5 * margin;
  return geometry::obb_penetration_xy(ai, bi);
}

}  // namespace

void resolve_overlap(geometry::Obb& a, geometry::Obb& b, double margin,
                     Rng& rng) {
  const double penetration = penetration_at_margin(a, b, margin);
  const double step = 0.5 * penetration + 0.25 * margin;

  double dx = b.center.x() - a.center.x();
  double dy = b.center.y() - a.center.y();
  const double norm = std::hypot(dx, dy);
  if (norm < 1e-12) {
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    dx = std::cos(theta);
    dy = std::sin(theta);
  } else {
    dx /= norm;
    dy /= norm;
  }

  a.center.x() -= step * dx;
  a.center.y() -= step * dy;
  b.center.x() += step * dx;
  b.center.y() += step * dy;
}

void clamp_to_bounds(geometry::Obb& box, const geometry::TableBounds& bounds) {
  double xmin, xmax, ymin, ymax;
  box.footprint_aabb(xmin, xmax, ymin, ymax);
  const double hw = 0.5 * (xmax - xmin);
  const double hh = 0.5 * (ymax - ymin);

  if (2.0 * hw > bounds.width()) {
    box.center.x() = bounds.center_x();
  } else {
    box.center.x() =
        std::clamp(box.center.x(), bounds.x_min + hw, bounds.x_max - hw);
  }
  if (2.0 * hh > bounds.depth()) {
    box.center.y() = bounds.center_y();
  } else {
    box.center.y() =
        std::clamp(box.center.y(), bounds.y_min + hh, bounds.y_max - hh);
  }
}

std::vector<std::string> base_objects(const scene_model::ScenePlan& plan) {
  std::set<std::string> dependents;
  for (const auto& p : plan.predicates) {
    if (const auto* pi = std::get_if<scene_model::PlaceIn>(&p)) {
      for (const auto& o : pi->objects) dependents.insert(o);
    } else if (const auto* po = std::get_if<scene_model::PlaceOn>(&p)) {
      dependents.insert(po->object);
    }
  }
  std::vector<std::string> out;
  for (const auto& name : plan.objects) {
    if (!dependents.count(name)) out.push_back(name);
  }
  return out;
}

namespace {

struct BaseObject {
  std::string name;
  geometry::Vec3 dims;
  bool pinned = false;  // place-on-base: requested coordinates are honored
  double req_x = 0.0;
  double req_y = 0.0;
  double req_yaw = 0.0;  // radians
  bool fixed_yaw = false;
};

struct ClusterConstraint {
  std::size_t anchor = 0;
  std::vector<std::size_t> targets;
  double radius = 0.1;
};

bool fits_axis_aligned(const geometry::Vec3& dims,
                       const geometry::TableBounds& bounds) {
  return (dims.x() <= bounds.width() && dims.y() <= bounds.depth()) ||
         (dims.y() <= bounds.width() && dims.x() <= bounds.depth());
}

}  // namespace

SolveResult solve_spatial(const scene_model::ScenePlan& plan,
                          const scene_model::Catalog& catalog,
                          const geometry::TableBounds& bounds,
                          const SolverConfig& cfg) {
  const std::vector<std::string> names = base_objects(plan);

  std::vector<BaseObject> objs;
  objs.reserve(names.size());
  std::map<std::string, std::size_t> index;
  for (const auto& name : names) {
    const scene_model::CatalogEntry* entry = catalog.find(name);
    if (entry == nullptr) {
      throw std::invalid_argument("solve_spatial: object '" + name +
                                  "' missing from catalog");
    }
    if (!fits_axis_aligned(entry->dims, bounds)) {
      throw std::invalid_argument("solve_spatial: object '" + name +
                                  "' cannot fit within the table bounds");
    }
    index[name] = objs.size();
    objs.push_back({name, entry->dims});
  }

  std::vector<ClusterConstraint> clusters;
  for (const auto& p : plan.predicates) {
    if (const auto* pb = std::get_if<scene_model::PlaceOnBase>(&p)) {
      auto it = index.find(pb->object);
      if (it == index.end()) continue;
      BaseObject& o = objs[it->second];
      o.pinned = true;
      o.req_x = pb->x;
      o.req_y = pb->y;
      o.req_yaw = pb->yaw_deg * kDegToRad;
      o.fixed_yaw = true;
    } else if (const auto* ca = std::get_if<scene_model::ClusterAround>(&p)) {
      auto anchor_it = index.find(ca->anchor);
      if (anchor_it == index.end()) continue;
      ClusterConstraint c;
      c.anchor = anchor_it->second;
      c.radius = ca->radius;
      for (const auto& t : ca->objects) {
        auto it = index.find(t);
        if (it != index.end()) c.targets.push_back(it->second);
      }
      if (!c.targets.empty()) clusters.push_back(std::move(c));
    }
  }

  SolveResult result;
  std::vector<geometry::Obb> boxes(objs.size());
  std::vector<std::pair<std::size_t, std::size_t>> residual;
  double last_margin = cfg.base_margin;

  for (std::size_t rung = 0; rung < cfg.margin_ladder.size(); ++rung) {
    const double margin = cfg.base_margin * cfg.margin_ladder[rung];
    last_margin = margin;
    Rng rng(Rng::derive(cfg.rng_seed, rung));

    // Phase 1: orientations, then initial positions.
    for (auto& o : objs) {
      if (!o.fixed_yaw) o.req_yaw = rng.uniform(0.0, 2.0 * kPi);
    }
    for (std::size_t i = 0; i < objs.size(); ++i) {
      boxes[i] = footprint_obb(0.0, 0.0, objs[i].req_yaw, objs[i].dims);
      double xmin, xmax, ymin, ymax;
      boxes[i].footprint_aabb(xmin, xmax, ymin, ymax);
      const double hw = 0.5 * (xmax - xmin);
      const double hh = 0.5 * (ymax - ymin);
      double x, y;
      if (objs[i].pinned) {
        x = objs[i].req_x;
        y = objs[i].req_y;
      } else {
        const double lo_x = bounds.x_min + hw;
        const double hi_x = bounds.x_max - hw;
        const double lo_y = bounds.y_min + hh;
        const double hi_y = bounds.y_max - hh;
        x = lo_x < hi_x ? rng.uniform(lo_x, hi_x) : bounds.center_x();
        y = lo_y < hi_y ? rng.uniform(lo_y, hi_y) : bounds.center_y();
      }
      boxes[i].center.x() = x;
      boxes[i].center.y() = y;
    }
    for (const auto& c : clusters) {
      const auto spots =
          polar_place(c.targets.size(), boxes[c.anchor].center.x(),
                      boxes[c.anchor].center.y(), c.radius, bounds, rng);
      for (std::size_t j = 0; j < c.targets.size(); ++j) {
        boxes[c.targets[j]].center.x() = spots[j].first;
        boxes[c.targets[j]].center.y() = spots[j].second;
      }
    }

    auto apply_relative_constraints = [&]() {
      for (int pass = 0; pass < 20; ++pass) {
        bool satisfied = true;
        for (const auto& c : clusters) {
          const double ax = boxes[c.anchor].center.x();
          const double ay = boxes[c.anchor].center.y();
          for (std::size_t t : c.targets) {
            const double dx = boxes[t].center.x() - ax;
            const double dy = boxes[t].center.y() - ay;
            const double d = std::hypot(dx, dy);
            if (d > c.radius + 1e-9) {
              const double scale = c.radius / d;
              boxes[t].center.x() = ax + dx * scale;
              boxes[t].center.y() = ay + dy * scale;
              clamp_to_bounds(boxes[t], bounds);
              satisfied = false;
            }
          }
        }
        if (satisfied) break;
      }
    };

    // Phase 2: relative constraints.
    apply_relative_constraints();
    for (auto& box : boxes) clamp_to_bounds(box, bounds);

    // Phase 3: collision resolution.
    std::size_t best_count = std::numeric_limits<std::size_t>::max();
    int since_improvement = 0;
    for (int k = 1; k <= cfg.k_max; ++k) {
      auto collisions = find_collisions(boxes, margin);
      if (collisions.empty()) {
        Layout2D layout;
        for (std::size_t i = 0; i < objs.size(); ++i) {
          layout.entries.push_back({objs[i].name, boxes[i].center.x(),
                                    boxes[i].center.y(), boxes[i].yaw});
        }
        result.report.margin = margin;
        result.report.rung = static_cast<int>(rung) + 1;
        result.report.iterations = k;
        for (const auto& o : objs) {
          if (!o.pinned) continue;
          const auto& box = boxes[index[o.name]];
          result.report.displacement[o.name] = std::hypot(
              box.center.x() - o.req_x, box.center.y() - o.req_y);
        }
        result.layout = std::move(layout);
        return result;
      }

      residual = collisions;
      if (collisions.size() < best_count) {
        best_count = collisions.size();
        since_improvement = 0;
      } else {
        ++since_improvement;
      }
      if (since_improvement >= cfg.stall_window) {
        for (auto& box : boxes) {
          box.center.x() += rng.normal(0.0, cfg.perturb_sigma);
          box.center.y() += rng.normal(0.0, cfg.perturb_sigma);
          clamp_to_bounds(box, bounds);
        }
        ++result.report.perturbations;
        since_improvement = 0;
        best_count = std::numeric_limits<std::size_t>::max();
        continue;
      }

      for (const auto& [i, j] : collisions) {
        resolve_overlap(boxes[i], boxes[j], margin, rng);
        clamp_to_bounds(boxes[i], bounds);
        clamp_to_bounds(boxes[j], bounds);
      }
    }
  }

  SolveFailure failure;
  failure.margin = last_margin;
  for (const auto& [i, j] : residual) {
    failure.residual.emplace_back(objs[i].name, objs[j].name);
  }
  result.failure = std::move(failure);
  return result;
}

}  // namespace scenebench::spatial_solver
