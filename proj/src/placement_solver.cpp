#include "scenebench/placement_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scenebench/detail/jsonfmt.hpp"

namespace scenebench::placement_solver {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kRestTolerance = 0.002;  // surfaces may sit this far above
constexpr double kToppleInset = 0.01;

// Object footprint AABB half-extents in a frame rotated by `frame_yaw`.
void local_aabb_half(const geometry::Vec3& dims, double obj_yaw,
                     double frame_yaw, double& hu, double& hv) {
  const double d = obj_yaw - frame_yaw;
  const double c = std::abs(std::cos(d));
  const double s = std::abs(std::sin(d));
  hu = c * 0.5 * dims.x() + s * 0.5 * dims.y();
  hv = s * 0.5 * dims.x() + c * 0.5 * dims.y();
}

// World xy expressed in the box's local footprint frame.
void to_local(const geometry::Obb& box, double wx, double wy, double& u,
              double& v) {
  const double dx = wx - box.center.x();
  const double dy = wy - box.center.y();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  u = c * dx + s * dy;
  v = -s * dx + c * dy;
}

void to_world(const geometry::Obb& box, double u, double v, double& wx,
              double& wy) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  wx = box.center.x() + c * u - s * v;
  wy = box.center.y() + s * u + c * v;
}

}  // namespace

std::variant<geometry::Pose, PlacementFailure> place_on(
    const scene_model::Placement& support, const geometry::Vec3& obj_dims,
    double obj_yaw, const std::vector<geometry::Obb>& peers,
    scene_model::PositionHint hint, const PlacementConfig& cfg, Rng& rng) {
  const geometry::Obb sbox = support.obb();
  const double shx = sbox.half.x();
  const double shy = sbox.half.y();

  double ohu, ohv;
  local_aabb_half(obj_dims, obj_yaw, sbox.yaw, ohu, ohv);
  const double fit_u = shx - ohu;
  const double fit_v = shy - ohv;
  if (fit_u < 0.0 || fit_v < 0.0) {
    return PlacementFailure{support.name, cfg.k_attempts};
  }

  const double z = sbox.top() + 0.5 * obj_dims.z();
  for (int attempt = 0; attempt < cfg.k_attempts; ++attempt) {
    double u = 0.0;
    double v = 0.0;
    switch (hint) {
      case scene_model::PositionHint::center: {
        u = std::clamp(rng.uniform(-cfg.center_jitter, cfg.center_jitter),
                       -fit_u, fit_u);
        v = std::clamp(rng.uniform(-cfg.center_jitter, cfg.center_jitter),
                       -fit_v, fit_v);
        break;
      }
      case scene_model::PositionHint::edge: {
        const int side = static_cast<int>(rng.uniform_index(4));
        const double band_u = cfg.edge_band * 2.0 * shx;
        const double band_v = cfg.edge_band * 2.0 * shy;
        if (side == 0) {  // +u border
          u = rng.uniform(std::max(-fit_u, fit_u - band_u), fit_u);
          v = rng.uniform(-fit_v, fit_v);
        } else if (side == 1) {  // -u border
          u = rng.uniform(-fit_u, std::min(fit_u, -fit_u + band_u));
          v = rng.uniform(-fit_v, fit_v);
        } else if (side == 2) {  // +v border
          u = rng.uniform(-fit_u, fit_u);
          v = rng.uniform(std::max(-fit_v, fit_v - band_v), fit_v);
        } else {  // -v border
          u = rng.uniform(-fit_u, fit_u);
          v = rng.uniform(-fit_v, std::min(fit_v, -fit_v + band_v));
        }
        break;
      }
      case scene_model::PositionHint::random: {
        u = rng.uniform(-fit_u, fit_u);
        v = rng.uniform(-fit_v, fit_v);
        break;
      }
    }

    double wx, wy;
    to_world(sbox, u, v, wx, wy);
    const geometry::Obb candidate(geometry::Vec3(wx, wy, z), 0.5 * obj_dims,
                                  obj_yaw);
    bool collides = false;
    for (const auto& peer : peers) {
      if (geometry::obb_overlap(candidate, peer, 0.0)) {
        collides = true;
        break;
      }
    }
    if (!collides) {
      return geometry::Pose(geometry::Vec3(wx, wy, z),
                            geometry::quat_from_yaw(obj_yaw));
    }
  }
  return PlacementFailure{support.name, cfg.k_attempts};
}

PlaceInResult place_in(
    const scene_model::Placement& container,
    const std::vector<std::pair<std::string, geometry::Vec3>>& objects,
    const PlaceInConfig& cfg, Rng& rng) {
  PlaceInResult result;
  if (objects.empty()) return result;

  const geometry::Obb cbox = container.obb();
  const double floor_area = container.dims.x() * container.dims.y();

  std::vector<std::pair<std::string, geometry::Vec3>> kept = objects;
  double total_area = 0.0;
  for (const auto& [name, dims] : kept) total_area += dims.x() * dims.y();

  if (total_area > 0.8 * floor_area) {
    result.area_filter_triggered = true;
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) {
                       return a.second.x() * a.second.y() <
                              b.second.x() * b.second.y();
                     });
    double running = 0.0;
    std::size_t cut = 0;
    for (; cut < kept.size(); ++cut) {
      const double area = kept[cut].second.x() * kept[cut].second.y();
      if (running + area > 0.8 * floor_area) break;
      running += area;
    }
    for (std::size_t i = cut; i < kept.size(); ++i) {
      result.dropped.push_back(kept[i].first);
    }
    kept.resize(cut);
    if (kept.empty()) return result;
  }

  double max_dim = 0.0;
  for (const auto& [name, dims] : kept) {
    max_dim = std::max(max_dim, std::max(dims.x(), dims.y()));
  }
  const double s = max_dim + cfg.epsilon_margin;

  const double usable_x = cfg.gamma * container.dims.x();
  const double usable_y = cfg.gamma * container.dims.y();
  const int cols = static_cast<int>(std::floor(usable_x / s));
  const int rows = static_cast<int>(std::floor(usable_y / s));
  if (cols < 1 || rows < 1) {
    result.failure = PlacementFailure{container.name, 0};
    for (const auto& [name, dims] : kept) result.dropped.push_back(name);
    return result;
  }

  const std::size_t capacity = static_cast<std::size_t>(rows) * cols;
  if (kept.size() > capacity) {
    for (std::size_t i = capacity; i < kept.size(); ++i) {
      result.dropped.push_back(kept[i].first);
    }
    kept.resize(capacity);
  }

  const double z = container.pose.position.z() + cfg.buffer;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& [name, dims] = kept[i];
    const int r = static_cast<int>(i) / cols;
    const int c = static_cast<int>(i) % cols;
    double u = (c + 0.5) * s - 0.5 * cols * s;
    double v = (r + 0.5) * s - 0.5 * rows * s;
    const double play = 0.5 * (s - std::max(dims.x(), dims.y()));
    const double amp = std::min(s / 8.0, play);
    u += rng.uniform(-amp, amp);
    v += rng.uniform(-amp, amp);
    double wx, wy;
    to_world(cbox, u, v, wx, wy);
    result.placed.emplace_back(
        name, geometry::Pose(geometry::Vec3(wx, wy, z),
                             geometry::quat_from_yaw(cbox.yaw)));
  }
  return result;
}

namespace {

struct SettledBody {
  const scene_model::Placement* placement = nullptr;
  geometry::Obb box;  // settled pose
  bool is_container = false;
};

}  // namespace

StabilityReport settle_and_check(const scene_model::Scene& scene,
                                 const scene_model::Catalog& catalog,
                                 double threshold) {
  StabilityReport report;

  std::vector<std::size_t> order(scene.placements.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return scene.placements[a].obb().bottom() <
           scene.placements[b].obb().bottom();
  });

  std::vector<SettledBody> settled;
  settled.reserve(scene.placements.size());

  for (std::size_t idx : order) {
    const scene_model::Placement& p = scene.placements[idx];
    const geometry::Obb authored = p.obb();
    const double authored_bottom = authored.bottom();
    const double half_h = authored.half.z();

    const scene_model::CatalogEntry* entry = catalog.find(p.name);
    const bool is_container =
        entry != nullptr && entry->category == scene_model::Category::container;

    // Highest eligible resting surface under the footprint center; the table
    // wins ties, then earlier-settled bodies.
    double rest_bottom = scene.bounds.z_top;
    const SettledBody* surface = nullptr;
    bool inside_container = false;
    bool oversized = false;
    double excess = 0.0;

    for (const auto& body : settled) {
      double u, v;
      to_local(body.box, authored.center.x(), authored.center.y(), u, v);
      const double shx = body.box.half.x();
      const double shy = body.box.half.y();
      if (std::abs(u) > shx || std::abs(v) > shy) continue;

      double ohu, ohv;
      local_aabb_half(p.dims, authored.yaw, body.box.yaw, ohu, ohv);

      if (body.is_container) {
        const bool fits = ohu <= shx + 1e-9 && ohv <= shy + 1e-9;
        const bool entered = authored_bottom < body.box.top() - 1e-9;
        if (!fits) {
          if (entered) {
            // Jammed against the rim: cannot reach the floor.
            if (body.box.top() > rest_bottom + 1e-9) {
              rest_bottom = body.box.top();
              surface = &body;
              inside_container = false;
              oversized = true;
              excess = std::max(ohu - shx, ohv - shy) * 2.0;
            }
          } else {
            // Treat the rim as a top face.
            if (body.box.top() <= authored_bottom + kRestTolerance &&
                body.box.top() > rest_bottom + 1e-9) {
              rest_bottom = body.box.top();
              surface = &body;
              inside_container = false;
              oversized = false;
            }
          }
        } else {
          const double floor_z = body.box.bottom();
          if (floor_z <= authored_bottom + kRestTolerance &&
              floor_z > rest_bottom + 1e-9) {
            rest_bottom = floor_z;
            surface = &body;
            inside_container = true;
            oversized = false;
          }
        }
      } else {
        const double top = body.box.top();
        if (top <= authored_bottom + kRestTolerance &&
            top > rest_bottom + 1e-9) {
          rest_bottom = top;
          surface = &body;
          inside_container = false;
          oversized = false;
        }
      }
    }

    const double settled_center = rest_bottom + half_h;
    const double displacement = std::abs(authored.center.z() - settled_center);

    geometry::Obb settled_box = authored;
    settled_box.center.z() = settled_center;

    report.displacement[p.name] = displacement;
    report.settled_z[p.name] = settled_center;

    if (surface != nullptr && oversized) {
      report.unstable.push_back(
          {p.name, excess, Cause::sank, surface->placement->name});
    } else if (surface != nullptr) {
      double u, v;
      to_local(surface->box, authored.center.x(), authored.center.y(), u, v);
      const double lim_u = surface->box.half.x() - kToppleInset;
      const double lim_v = surface->box.half.y() - kToppleInset;
      if (std::abs(u) > lim_u || std::abs(v) > lim_v) {
        report.unstable.push_back({p.name, p.dims.z(), Cause::toppled,
                                   surface->placement->name});
        report.displacement[p.name] = p.dims.z();
      } else if (displacement > threshold) {
        report.unstable.push_back({p.name, displacement, Cause::fell_off,
                                   surface->placement->name});
      }
    } else if (displacement > threshold) {
      report.unstable.push_back(
          {p.name, displacement, Cause::fell_off, "table"});
    }

    settled.push_back({&p, settled_box, is_container});
  }

  report.stable = report.unstable.empty();
  return report;
}

std::string feedback_message(const StabilityReport& report) {
  if (report.unstable.empty()) {
    throw std::logic_error("feedback_message: report has no failures");
  }
  std::string out;
  for (std::size_t i = 0; i < report.unstable.size(); ++i) {
    const UnstableEntry& e = report.unstable[i];
    if (i) out += "\n";
    switch (e.cause) {
      case Cause::fell_off:
        out += "Object '" + e.object + "' fell off '" + e.support +
               "' with displacement " + detail::fmt_fixed(e.displacement, 2) +
               "m";
        break;
      case Cause::toppled:
        out += "Object '" + e.object + "' toppled on '" + e.support +
               "' with displacement " + detail::fmt_fixed(e.displacement, 2) +
               "m";
        break;
      case Cause::sank:
        out += "Object '" + e.object + "' does not fit inside '" + e.support +
               "' and sank by " + detail::fmt_fixed(e.displacement, 2) + "m";
        break;
    }
  }
  return out;
}

std::string feedback_message(const spatial_solver::SolveFailure& failure) {
  if (failure.residual.empty()) {
    throw std::logic_error("feedback_message: failure has no residual pairs");
  }
  std::string out;
  for (std::size_t i = 0; i < failure.residual.size(); ++i) {
    if (i) out += "\n";
    out += "Objects '" + failure.residual[i].first + "' and '" +
           failure.residual[i].second + "' collide at margin " +
           detail::fmt_fixed(failure.margin, 4) + "m";
  }
  return out;
}

std::string feedback_message(const PlacementFailure& failure) {
  return "No free spot on '" + failure.support + "' after " +
         std::to_string(failure.attempts) + " attempts";
}

scene_model::Scene baseline_grid_layout(
    const std::vector<std::pair<std::string, geometry::Vec3>>& objects,
    int rows, int cols, const geometry::TableBounds& bounds, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("baseline_grid_layout: grid must be >= 1x1");
  }
  if (objects.size() > static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument(
        "baseline_grid_layout: more objects than grid cells");
  }

  const double cell_w = bounds.width() / cols;
  const double cell_h = bounds.depth() / rows;

  scene_model::Scene scene;
  scene.bounds = bounds;
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const auto& [name, dims] = objects[k];
    const int r = static_cast<int>(k) / cols;
    const int c = static_cast<int>(k) % cols;
    const double center_x = bounds.x_min + (c + 0.5) * cell_w;
    const double center_y = bounds.y_min + (r + 0.5) * cell_h;
    const double x = rng.uniform(center_x - cell_w / 4.0,
                                 center_x + cell_w / 4.0);
    const double y = rng.uniform(center_y - cell_h / 4.0,
                                 center_y + cell_h / 4.0);
    const double z = bounds.z_top + 0.5 * dims.z();
    scene.add(name, geometry::Pose(geometry::Vec3(x, y, z),
                                   geometry::Quat::Identity()),
              dims);
  }
  return scene;
}

}  // namespace scenebench::placement_solver
