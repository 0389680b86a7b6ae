#include "scenebench/scene_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenebench/detail/jsonfmt.hpp"

namespace scenebench::scene_model {

using detail::fmt_fixed;
using detail::fmt_g6;
using detail::json_escape;
using nlohmann::json;

Category category_from_string(const std::string& s) {
  if (s == "container") return Category::container;
  if (s == "support") return Category::support;
  if (s == "food") return Category::food;
  if (s == "tool") return Category::tool;
  if (s == "other") return Category::other;
  throw SchemaError("unknown category '" + s + "'");
}

std::string category_to_string(Category c) {
  switch (c) {
    case Category::container: return "container";
    case Category::support: return "support";
    case Category::food: return "food";
    case Category::tool: return "tool";
    case Category::other: return "other";
  }
  return "other";
}

Catalog::Catalog(std::vector<CatalogEntry> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (!seen.insert(e.name).second) {
      throw SchemaError("duplicate catalog name '" + e.name + "'");
    }
    if (e.dims.x() <= 0.0 || e.dims.y() <= 0.0 || e.dims.z() <= 0.0) {
      throw SchemaError("non-positive dims for catalog entry '" + e.name +
                        "'");
    }
  }
}

const CatalogEntry* Catalog::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

json parse_json_or_throw(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON at byte " + std::to_string(e.byte) +
                     ": " + e.what());
  }
}

double require_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("expected number at " + path);
  return j.get<double>();
}

std::string require_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError("expected string at " + path);
  return j.get<std::string>();
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw SchemaError("unknown key at " + path + "." + it.key());
    }
  }
}

}  // namespace

Catalog parse_catalog(const std::string& json_text) {
  const json doc = parse_json_or_throw(json_text);
  if (!doc.is_array()) throw SchemaError("catalog must be a JSON array");
  std::vector<CatalogEntry> entries;
  entries.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& e = doc[i];
    const std::string path = "[" + std::to_string(i) + "]";
    if (!e.is_object()) throw SchemaError("expected object at " + path);
    CatalogEntry entry;
    entry.name = require_string(e.at("name"), path + ".name");
    const json& dims = e.at("dims");
    if (!dims.is_array() || dims.size() != 3) {
      throw SchemaError("expected 3-element array at " + path + ".dims");
    }
    entry.dims = geometry::Vec3(require_number(dims[0], path + ".dims[0]"),
                                require_number(dims[1], path + ".dims[1]"),
                                require_number(dims[2], path + ".dims[2]"));
    entry.category =
        category_from_string(require_string(e.at("category"), path));
    if (e.contains("description")) {
      entry.description = require_string(e["description"], path);
    }
    entries.push_back(std::move(entry));
  }
  return Catalog(std::move(entries));
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open catalog file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_catalog(ss.str());
}

ScenePlan parse_scene_plan(const std::string& text) {
  const json doc = parse_json_or_throw(text);
  if (!doc.is_object()) throw SchemaError("plan root must be an object");
  reject_unknown_keys(doc, {"objects", "predicates"}, "$");
  if (!doc.contains("objects") || !doc["objects"].is_array()) {
    throw SchemaError("expected array at $.objects");
  }
  if (!doc.contains("predicates") || !doc["predicates"].is_array()) {
    throw SchemaError("expected array at $.predicates");
  }

  ScenePlan plan;
  const json& objects = doc["objects"];
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = "objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    if (!o.is_object()) throw SchemaError("expected object at " + path);
    reject_unknown_keys(o, {"name"}, path);
    if (!o.contains("name")) throw SchemaError("missing " + path + ".name");
    plan.objects.push_back(require_string(o["name"], path + ".name"));
  }

  const json& predicates = doc["predicates"];
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    const std::string path = "predicates[" + std::to_string(i) + "]";
    const json& p = predicates[i];
    if (!p.is_object()) throw SchemaError("expected object at " + path);
    if (!p.contains("type")) throw SchemaError("missing " + path + ".type");
    const std::string type = require_string(p["type"], path + ".type");

    if (type == "place-on-base") {
      reject_unknown_keys(p, {"type", "object", "x", "y", "yaw"}, path);
      PlaceOnBase pb;
      pb.object = require_string(p.at("object"), path + ".object");
      pb.x = require_number(p.at("x"), path + ".x");
      pb.y = require_number(p.at("y"), path + ".y");
      pb.yaw_deg = require_number(p.at("yaw"), path + ".yaw");
      plan.predicates.emplace_back(std::move(pb));
    } else if (type == "place-in") {
      reject_unknown_keys(p, {"type", "objects", "container"}, path);
      PlaceIn pi;
      const json& objs = p.at("objects");
      if (!objs.is_array()) {
        throw SchemaError("expected array at " + path + ".objects");
      }
      for (std::size_t k = 0; k < objs.size(); ++k) {
        pi.objects.push_back(require_string(
            objs[k], path + ".objects[" + std::to_string(k) + "]"));
      }
      pi.container = require_string(p.at("container"), path + ".container");
      plan.predicates.emplace_back(std::move(pi));
    } else if (type == "place-on") {
      reject_unknown_keys(p, {"type", "object", "support", "position"}, path);
      PlaceOn po;
      po.object = require_string(p.at("object"), path + ".object");
      po.support = require_string(p.at("support"), path + ".support");
      po.position = position_hint_from_string(
          require_string(p.at("position"), path + ".position"));
      plan.predicates.emplace_back(std::move(po));
    } else if (type == "cluster-around") {
      reject_unknown_keys(p, {"type", "objects", "anchor", "radius"}, path);
      ClusterAround ca;
      const json& objs = p.at("objects");
      if (!objs.is_array()) {
        throw SchemaError("expected array at " + path + ".objects");
      }
      for (std::size_t k = 0; k < objs.size(); ++k) {
        ca.objects.push_back(require_string(
            objs[k], path + ".objects[" + std::to_string(k) + "]"));
      }
      ca.anchor = require_string(p.at("anchor"), path + ".anchor");
      ca.radius = require_number(p.at("radius"), path + ".radius");
      if (!(ca.radius > 0.0) || ca.radius > 0.5) {
        throw SchemaError("radius out of (0, 0.5] at " + path + ".radius");
      }
      plan.predicates.emplace_back(std::move(ca));
    } else if (type == "place-anywhere") {
      reject_unknown_keys(p, {"type", "object"}, path);
      PlaceAnywhere pa;
      pa.object = require_string(p.at("object"), path + ".object");
      plan.predicates.emplace_back(std::move(pa));
    } else {
      throw SchemaError("unknown predicate type '" + type + "' at " + path +
                        ".type");
    }
  }
  return plan;
}

namespace {

std::string name_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + json_escape(names[i]) + "\"";
  }
  return out + "]";
}

}  // namespace

std::string serialize_scene_plan(const ScenePlan& plan) {
  std::string out = "{\n  \"objects\": [";
  for (std::size_t i = 0; i < plan.objects.size(); ++i) {
    out += (i ? ",\n    " : "\n    ");
    out += "{\"name\": \"" + json_escape(plan.objects[i]) + "\"}";
  }
  out += plan.objects.empty() ? "],\n" : "\n  ],\n";
  out += "  \"predicates\": [";
  for (std::size_t i = 0; i < plan.predicates.size(); ++i) {
    out += (i ? ",\n    " : "\n    ");
    const Predicate& p = plan.predicates[i];
    if (const auto* pb = std::get_if<PlaceOnBase>(&p)) {
      out += "{\"type\": \"place-on-base\", \"object\": \"" +
             json_escape(pb->object) + "\", \"x\": " + fmt_g6(pb->x) +
             ", \"y\": " + fmt_g6(pb->y) +
             ", \"yaw\": " + fmt_g6(pb->yaw_deg) + "}";
    } else if (const auto* pi = std::get_if<PlaceIn>(&p)) {
      out += "{\"type\": \"place-in\", \"objects\": " +
             name_list(pi->objects) + ", \"container\": \"" +
             json_escape(pi->container) + "\"}";
    } else if (const auto* po = std::get_if<PlaceOn>(&p)) {
      out += "{\"type\": \"place-on\", \"object\": \"" +
             json_escape(po->object) + "\", \"support\": \"" +
             json_escape(po->support) + "\", \"position\": \"" +
             position_hint_to_string(po->position) + "\"}";
    } else if (const auto* ca = std::get_if<ClusterAround>(&p)) {
      out += "{\"type\": \"cluster-around\", \"objects\": " +
             name_list(ca->objects) + ", \"anchor\": \"" +
             json_escape(ca->anchor) + "\", \"radius\": " +
             fmt_g6(ca->radius) + "}";
    } else if (const auto* pa = std::get_if<PlaceAnywhere>(&p)) {
      out += "{\"type\": \"place-anywhere\", \"object\": \"" +
             json_escape(pa->object) + "\"}";
    }
  }
  out += plan.predicates.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

PositionHint position_hint_from_string(const std::string& s) {
  if (s == "center") return PositionHint::center;
  if (s == "edge") return PositionHint::edge;
  if (s == "random") return PositionHint::random;
  throw SchemaError("unknown position hint '" + s + "'");
}

std::string position_hint_to_string(PositionHint h) {
  switch (h) {
    case PositionHint::center: return "center";
    case PositionHint::edge: return "edge";
    case PositionHint::random: return "random";
  }
  return "center";
}

namespace {

struct DependentRoles {
  std::set<std::string> taken;

  bool claim(const std::string& name) { return taken.insert(name).second; }
};

}  // namespace

ValidatedPlan validate_plan(const ScenePlan& plan, const Catalog& catalog,
                            const geometry::TableBounds& bounds) {
  ValidatedPlan out;

  std::set<std::string> kept;
  for (const auto& name : plan.objects) {
    if (!catalog.contains(name)) {
      out.violations.push_back(
          {"unknown_object",
           "object '" + name + "' is not in the catalog and was dropped"});
      continue;
    }
    if (!kept.insert(name).second) {
      out.violations.push_back(
          {"duplicate_object", "object '" + name + "' listed twice"});
      continue;
    }
    out.plan.objects.push_back(name);
  }

  auto known = [&](const std::string& name) { return kept.count(name) > 0; };

  // Base-level objects: those that end up with their own table position.
  std::set<std::string> dependents;
  for (const auto& p : plan.predicates) {
    if (const auto* pi = std::get_if<PlaceIn>(&p)) {
      for (const auto& o : pi->objects) dependents.insert(o);
    } else if (const auto* po = std::get_if<PlaceOn>(&p)) {
      dependents.insert(po->object);
    }
  }

  DependentRoles roles;
  std::set<std::string> has_base;
  std::vector<Predicate> accepted;

  auto downgrade = [&](const std::string& object, const std::string& why) {
    out.violations.push_back({"downgraded", "object '" + object + "' " + why +
                                                "; downgraded to "
                                                "place-anywhere"});
    if (known(object) && roles.claim(object)) {
      accepted.emplace_back(PlaceAnywhere{object});
    }
  };

  for (const auto& p : plan.predicates) {
    if (const auto* pb = std::get_if<PlaceOnBase>(&p)) {
      if (!known(pb->object)) {
        out.violations.push_back({"unknown_reference",
                                  "place-on-base names missing object '" +
                                      pb->object + "'"});
        continue;
      }
      has_base.insert(pb->object);
      accepted.push_back(*pb);
    } else if (const auto* pi = std::get_if<PlaceIn>(&p)) {
      if (!known(pi->container)) {
        for (const auto& o : pi->objects) {
          downgrade(o, "references missing container '" + pi->container + "'");
        }
        continue;
      }
      PlaceIn filtered;
      filtered.container = pi->container;
      for (const auto& o : pi->objects) {
        if (!known(o)) {
          out.violations.push_back(
              {"unknown_reference",
               "place-in names missing object '" + o + "'"});
          continue;
        }
        if (!roles.claim(o)) {
          out.violations.push_back(
              {"duplicate_dependent",
               "object '" + o + "' already assigned to another predicate"});
          continue;
        }
        filtered.objects.push_back(o);
      }
      if (!filtered.objects.empty()) accepted.emplace_back(filtered);
    } else if (const auto* po = std::get_if<PlaceOn>(&p)) {
      if (!known(po->support)) {
        downgrade(po->object,
                  "references missing support '" + po->support + "'");
        continue;
      }
      if (!known(po->object)) {
        out.violations.push_back({"unknown_reference",
                                  "place-on names missing object '" +
                                      po->object + "'"});
        continue;
      }
      if (!roles.claim(po->object)) {
        out.violations.push_back(
            {"duplicate_dependent", "object '" + po->object +
                                        "' already assigned to another "
                                        "predicate"});
        continue;
      }
      accepted.push_back(*po);
    } else if (const auto* ca = std::get_if<ClusterAround>(&p)) {
      if (!known(ca->anchor)) {
        for (const auto& o : ca->objects) {
          downgrade(o, "references missing anchor '" + ca->anchor + "'");
        }
        continue;
      }
      if (dependents.count(ca->anchor)) {
        for (const auto& o : ca->objects) {
          downgrade(o, "clusters around '" + ca->anchor +
                           "', which is not at base level");
        }
        continue;
      }
      ClusterAround filtered;
      filtered.anchor = ca->anchor;
      filtered.radius = ca->radius;
      for (const auto& o : ca->objects) {
        if (!known(o)) {
          out.violations.push_back(
              {"unknown_reference",
               "cluster-around names missing object '" + o + "'"});
          continue;
        }
        if (!roles.claim(o)) {
          out.violations.push_back(
              {"duplicate_dependent",
               "object '" + o + "' already assigned to another predicate"});
          continue;
        }
        filtered.objects.push_back(o);
      }
      if (!filtered.objects.empty()) accepted.emplace_back(filtered);
    } else if (const auto* pa = std::get_if<PlaceAnywhere>(&p)) {
      if (!known(pa->object)) {
        out.violations.push_back({"unknown_reference",
                                  "place-anywhere names missing object '" +
                                      pa->object + "'"});
        continue;
      }
      if (!roles.claim(pa->object)) {
        out.violations.push_back(
            {"duplicate_dependent", "object '" + pa->object +
                                        "' already assigned to another "
                                        "predicate"});
        continue;
      }
      accepted.push_back(*pa);
    }
  }

  // Containers and supports referenced by accepted predicates need a base
  // placement; synthesize one at the table center when missing.
  std::vector<Predicate> synthesized;
  std::set<std::string> already_synthesized;
  for (const auto& p : accepted) {
    std::string base;
    if (const auto* pi = std::get_if<PlaceIn>(&p)) {
      base = pi->container;
    } else if (const auto* po = std::get_if<PlaceOn>(&p)) {
      base = po->support;
    } else {
      continue;
    }
    if (has_base.count(base) || dependents.count(base)) continue;
    if (!already_synthesized.insert(base).second) continue;
    out.violations.push_back(
        {"missing_base", "base placement for '" + base +
                             "' synthesized at the table center"});
    PlaceOnBase pb;
    pb.object = base;
    pb.x = bounds.center_x();
    pb.y = bounds.center_y();
    pb.yaw_deg = 0.0;
    has_base.insert(base);
    synthesized.emplace_back(pb);
  }

  out.plan.predicates = std::move(synthesized);
  for (auto& p : accepted) out.plan.predicates.push_back(std::move(p));
  return out;
}

double quantize(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

geometry::Pose quantize(const geometry::Pose& pose) {
  geometry::Pose q;
  q.position = geometry::Vec3(quantize(pose.position.x(), 6),
                              quantize(pose.position.y(), 6),
                              quantize(pose.position.z(), 6));
  q.orientation = geometry::Quat(quantize(pose.orientation.w(), 12),
                                 quantize(pose.orientation.x(), 12),
                                 quantize(pose.orientation.y(), 12),
                                 quantize(pose.orientation.z(), 12));
  return q;
}

void Scene::add(const std::string& name, const geometry::Pose& pose,
                const geometry::Vec3& dims) {
  Placement p;
  p.name = name;
  p.pose = quantize(pose);
  p.dims = geometry::Vec3(quantize(dims.x(), 6), quantize(dims.y(), 6),
                          quantize(dims.z(), 6));
  placements.push_back(std::move(p));
}

const Placement* Scene::find(const std::string& name) const {
  for (const auto& p : placements) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

std::string fmt_vec3(const geometry::Vec3& v) {
  return "[" + fmt_fixed(v.x(), 6) + ", " + fmt_fixed(v.y(), 6) + ", " +
         fmt_fixed(v.z(), 6) + "]";
}

std::string fmt_quat(const geometry::Quat& q) {
  return "[" + fmt_fixed(q.w(), 12) + ", " + fmt_fixed(q.x(), 12) + ", " +
         fmt_fixed(q.y(), 12) + ", " + fmt_fixed(q.z(), 12) + "]";
}

}  // namespace

std::string serialize_scene(const Scene& scene) {
  std::string out = "{\n  \"placements\": [";
  for (std::size_t i = 0; i < scene.placements.size(); ++i) {
    const Placement& p = scene.placements[i];
    out += (i ? ",\n    " : "\n    ");
    out += "{\"name\": \"" + json_escape(p.name) +
           "\", \"position\": " + fmt_vec3(p.pose.position) +
           ", \"orientation\": " + fmt_quat(p.pose.orientation) +
           ", \"dims\": " + fmt_vec3(p.dims) + "}";
  }
  out += scene.placements.empty() ? "],\n" : "\n  ],\n";
  out += "  \"bounds\": {\"x_min\": " + fmt_fixed(scene.bounds.x_min, 6) +
         ", \"x_max\": " + fmt_fixed(scene.bounds.x_max, 6) +
         ", \"y_min\": " + fmt_fixed(scene.bounds.y_min, 6) +
         ", \"y_max\": " + fmt_fixed(scene.bounds.y_max, 6) +
         ", \"z_top\": " + fmt_fixed(scene.bounds.z_top, 6) + "}\n}\n";
  return out;
}

Scene parse_scene(const std::string& text) {
  const json doc = parse_json_or_throw(text);
  if (!doc.is_object()) throw SchemaError("scene root must be an object");
  const json& body = doc.contains("scene") ? doc["scene"] : doc;
  if (!body.contains("placements") || !body["placements"].is_array()) {
    throw SchemaError("expected array at $.placements");
  }
  if (!body.contains("bounds") || !body["bounds"].is_object()) {
    throw SchemaError("expected object at $.bounds");
  }

  Scene scene;
  const json& b = body["bounds"];
  scene.bounds.x_min = require_number(b.at("x_min"), "bounds.x_min");
  scene.bounds.x_max = require_number(b.at("x_max"), "bounds.x_max");
  scene.bounds.y_min = require_number(b.at("y_min"), "bounds.y_min");
  scene.bounds.y_max = require_number(b.at("y_max"), "bounds.y_max");
  scene.bounds.z_top = require_number(b.at("z_top"), "bounds.z_top");

  for (std::size_t i = 0; i < body["placements"].size(); ++i) {
    const json& pj = body["placements"][i];
    const std::string path = "placements[" + std::to_string(i) + "]";
    Placement p;
    p.name = require_string(pj.at("name"), path + ".name");
    const json& pos = pj.at("position");
    const json& ori = pj.at("orientation");
    const json& dims = pj.at("dims");
    if (!pos.is_array() || pos.size() != 3 || !ori.is_array() ||
        ori.size() != 4 || !dims.is_array() || dims.size() != 3) {
      throw SchemaError("bad vector shape at " + path);
    }
    p.pose.position = geometry::Vec3(pos[0].get<double>(),
                                     pos[1].get<double>(),
                                     pos[2].get<double>());
    p.pose = geometry::Pose(
        p.pose.position,
        geometry::Quat(ori[0].get<double>(), ori[1].get<double>(),
                       ori[2].get<double>(), ori[3].get<double>()));
    p.dims = geometry::Vec3(dims[0].get<double>(), dims[1].get<double>(),
                            dims[2].get<double>());
    scene.placements.push_back(std::move(p));
  }
  return scene;
}

}  // namespace scenebench::scene_model
