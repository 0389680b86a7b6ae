#include "scenebench/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/detail/jsonio.hpp"
#include "scenebench/geometry.hpp"

namespace scenebench::task_model {

namespace {

constexpr double kLiftHeight = 0.05;
constexpr double kContactTolerance = 0.01;
const double kUprightCos = std::cos(15.0 * 3.141592653589793238462643383279502884 / 180.0);

struct Body {
  geometry::Vec3 position;
  geometry::Quat orientation;
  geometry::Vec3 dims;
  double yaw = 0.0;
};

Body lookup(const std::string& name, const SceneState& state,
            const EvalContext& ctx) {
  auto pit = state.poses.find(name);
  if (pit == state.poses.end()) {
    throw std::invalid_argument("object \"" + name + "\" missing from state");
  }
  auto dit = ctx.dims.find(name);
  if (dit == ctx.dims.end()) {
    throw std::invalid_argument("object \"" + name +
                                "\" missing from evaluation context");
  }
  Body out;
  out.position = pit->second.position;
  out.orientation = pit->second.orientation;
  out.dims = dit->second;
  out.yaw = geometry::yaw_from_quat(pit->second.orientation);
  return out;
}

bool center_over_footprint(const Body& subject, const Body& reference) {
  const double dx = subject.position.x() - reference.position.x();
  const double dy = subject.position.y() - reference.position.y();
  const double c = std::cos(reference.yaw);
  const double s = std::sin(reference.yaw);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return std::abs(u) <= 0.5 * reference.dims.x() + 1e-9 &&
         std::abs(v) <= 0.5 * reference.dims.y() + 1e-9;
}

bool is_inside(const Body& subject, const Body& reference) {
  if (!center_over_footprint(subject, reference)) return false;
  const double subject_top = subject.position.z() + 0.5 * subject.dims.z();
  const double reference_top = reference.position.z() + 0.5 * reference.dims.z();
  return subject_top <= reference_top + 1e-9;
}

bool is_on_top_of(const Body& subject, const Body& reference) {
  const double subject_bottom = subject.position.z() - 0.5 * subject.dims.z();
  const double reference_top = reference.position.z() + 0.5 * reference.dims.z();
  if (std::abs(subject_bottom - reference_top) > kContactTolerance) return false;
  return center_over_footprint(subject, reference);
}

double require_threshold(const TerminationCondition& cond) {
  if (!cond.threshold.has_value()) {
    throw std::invalid_argument("predicate \"" + cond.predicate +
                                "\" requires a threshold");
  }
  return *cond.threshold;
}

}  // namespace

EvalContext make_context(const scene_model::Scene& scene) {
  EvalContext ctx;
  for (const auto& p : scene.placements) {
    ctx.dims[p.name] = p.dims;
    ctx.rest_z[p.name] = p.pose.position.z();
  }
  return ctx;
}

const std::vector<std::string>& predicate_library() {
  static const std::vector<std::string> names = {
      "inside",   "on_top_of", "near",        "lifted", "upright",
      "left_of",  "right_of",  "in_front_of", "behind", "count_in"};
  return names;
}

bool eval_condition(const TerminationCondition& cond, const SceneState& state,
                    const EvalContext& ctx) {
  const std::string& pred = cond.predicate;

  if (pred == "count_in") {
    const Body reference = lookup(cond.reference, state, ctx);
    const int wanted =
        static_cast<int>(std::llround(require_threshold(cond)));
    int count = 0;
    for (const auto& name : cond.subjects) {
      if (is_inside(lookup(name, state, ctx), reference)) ++count;
    }
    return count >= wanted;
  }

  for (const auto& name : cond.subjects) {
    const Body subject = lookup(name, state, ctx);

    if (pred == "lifted") {
      if (state.held == name) continue;
      auto rit = ctx.rest_z.find(name);
      if (rit == ctx.rest_z.end()) {
        throw std::invalid_argument("object \"" + name +
                                    "\" has no rest height");
      }
      if (subject.position.z() < rit->second + kLiftHeight) return false;
      continue;
    }
    if (pred == "upright") {
      const geometry::Vec3 up = subject.orientation * geometry::Vec3::UnitZ();
      if (up.z() < kUprightCos) return false;
      continue;
    }

    const Body reference = lookup(cond.reference, state, ctx);

    if (pred == "inside") {
      if (!is_inside(subject, reference)) return false;
    } else if (pred == "on_top_of") {
      if (!is_on_top_of(subject, reference)) return false;
    } else if (pred == "near") {
      const double threshold = require_threshold(cond);
      if ((subject.position - reference.position).norm() > threshold) {
        return false;
      }
    } else if (pred == "left_of") {
      if (!(subject.position.y() > reference.position.y())) return false;
    } else if (pred == "right_of") {
      if (!(subject.position.y() < reference.position.y())) return false;
    } else if (pred == "in_front_of") {
      if (!(subject.position.x() > reference.position.x())) return false;
    } else if (pred == "behind") {
      if (!(subject.position.x() < reference.position.x())) return false;
    } else {
      throw std::invalid_argument("unknown predicate \"" + pred + "\"");
    }
  }
  return true;
}

double graded_score(const TaskSpec& task, const SceneState& state,
                    const EvalContext& ctx) {
  if (task.subtasks.empty()) return 1.0;
  double total = 0.0;
  for (const auto& subtask : task.subtasks) {
    if (subtask.steps.empty()) {
      total += 1.0;
      continue;
    }
    std::size_t done = 0;
    for (const auto& step : subtask.steps) {
      if (!eval_condition(step, state, ctx)) break;
      ++done;
    }
    total += static_cast<double>(done) / subtask.steps.size();
  }
  return total / task.subtasks.size();
}

bool success(const TaskSpec& task, const SceneState& state,
             const EvalContext& ctx) {
  for (const auto& subtask : task.subtasks) {
    for (const auto& step : subtask.steps) {
      if (!eval_condition(step, state, ctx)) return false;
    }
  }
  return true;
}

namespace {

std::string serialize_condition(const TerminationCondition& cond) {
  std::string out = "{\"predicate\": \"" + detail::json_escape(cond.predicate) +
                    "\", \"subjects\": [";
  for (std::size_t i = 0; i < cond.subjects.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + detail::json_escape(cond.subjects[i]) + "\"";
  }
  out += "]";
  if (!cond.reference.empty()) {
    out += ", \"reference\": \"" + detail::json_escape(cond.reference) + "\"";
  }
  if (cond.threshold.has_value()) {
    out += ", \"threshold\": " + detail::fmt_g6(*cond.threshold);
  }
  out += "}";
  return out;
}

bool needs_reference(const std::string& pred) {
  return pred != "lifted" && pred != "upright";
}

bool needs_threshold(const std::string& pred) {
  return pred == "near" || pred == "count_in";
}

TerminationCondition parse_condition(const nlohmann::json& j,
                                     const std::string& path) {
  detail::expect_object(j, path);
  static const std::vector<std::string> known = {"predicate", "subjects",
                                                 "reference", "threshold"};
  detail::forbid_unknown_keys(j, known, path);

  TerminationCondition cond;
  cond.predicate =
      detail::expect_string(detail::expect_key(j, "predicate", path),
                            path + ".predicate");
  const auto& lib = predicate_library();
  if (std::find(lib.begin(), lib.end(), cond.predicate) == lib.end()) {
    throw scene_model::SchemaError(path + ".predicate \"" + cond.predicate +
                                   "\" is not a known predicate");
  }

  const auto& subjects = detail::expect_array(
      detail::expect_key(j, "subjects", path), path + ".subjects");
  if (subjects.empty()) {
    throw scene_model::SchemaError(path + ".subjects must not be empty");
  }
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    cond.subjects.push_back(detail::expect_string(
        subjects[i], path + ".subjects[" + std::to_string(i) + "]"));
  }

  if (needs_reference(cond.predicate)) {
    cond.reference = detail::expect_string(
        detail::expect_key(j, "reference", path), path + ".reference");
  } else if (j.contains("reference")) {
    throw scene_model::SchemaError(path + ".reference is not allowed for \"" +
                                   cond.predicate + "\"");
  }

  if (needs_threshold(cond.predicate)) {
    cond.threshold = detail::expect_number(
        detail::expect_key(j, "threshold", path), path + ".threshold");
  } else if (j.contains("threshold")) {
    throw scene_model::SchemaError(path + ".threshold is not allowed for \"" +
                                   cond.predicate + "\"");
  }
  return cond;
}

}  // namespace

std::string serialize_task_spec(const TaskSpec& task) {
  std::string out = "{\n";
  out += "  \"instruction\": \"" + detail::json_escape(task.instruction) +
         "\",\n";
  out += "  \"scene_id\": \"" + detail::json_escape(task.scene_id) + "\",\n";
  out += "  \"axis\": \"" + detail::json_escape(task.axis) + "\",\n";
  out += "  \"subcategory\": \"" + detail::json_escape(task.subcategory) +
         "\",\n";
  out += "  \"difficulty\": \"" + detail::json_escape(task.difficulty) +
         "\",\n";
  out += "  \"subtasks\": [";
  for (std::size_t i = 0; i < task.subtasks.size(); ++i) {
    const Subtask& st = task.subtasks[i];
    out += (i ? ",\n    {\n" : "\n    {\n");
    out += "      \"label\": \"" + detail::json_escape(st.label) + "\",\n";
    out += "      \"steps\": [";
    for (std::size_t k = 0; k < st.steps.size(); ++k) {
      out += (k ? ",\n        " : "\n        ");
      out += serialize_condition(st.steps[k]);
    }
    out += st.steps.empty() ? "]\n" : "\n      ]\n";
    out += "    }";
  }
  out += task.subtasks.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  return out;
}

TaskSpec parse_task_spec(const std::string& text) {
  const nlohmann::json doc = detail::parse_json_text(text);
  detail::expect_object(doc, "task");
  static const std::vector<std::string> known = {
      "instruction", "scene_id", "axis", "subcategory", "difficulty",
      "subtasks"};
  detail::forbid_unknown_keys(doc, known, "task");

  TaskSpec task;
  task.instruction = detail::expect_string(
      detail::expect_key(doc, "instruction", "task"), "task.instruction");
  task.scene_id = detail::expect_string(
      detail::expect_key(doc, "scene_id", "task"), "task.scene_id");
  task.axis = detail::expect_string(detail::expect_key(doc, "axis", "task"),
                                    "task.axis");
  task.subcategory = detail::expect_string(
      detail::expect_key(doc, "subcategory", "task"), "task.subcategory");
  task.difficulty = detail::expect_string(
      detail::expect_key(doc, "difficulty", "task"), "task.difficulty");

  const auto& subtasks = detail::expect_array(
      detail::expect_key(doc, "subtasks", "task"), "task.subtasks");
  for (std::size_t i = 0; i < subtasks.size(); ++i) {
    const std::string path = "task.subtasks[" + std::to_string(i) + "]";
    detail::expect_object(subtasks[i], path);
    static const std::vector<std::string> st_known = {"label", "steps"};
    detail::forbid_unknown_keys(subtasks[i], st_known, path);

    Subtask st;
    st.label = detail::expect_string(
        detail::expect_key(subtasks[i], "label", path), path + ".label");
    const auto& steps = detail::expect_array(
        detail::expect_key(subtasks[i], "steps", path), path + ".steps");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      st.steps.push_back(parse_condition(
          steps[k], path + ".steps[" + std::to_string(k) + "]"));
    }
    task.subtasks.push_back(std::move(st));
  }
  return task;
}

std::string serialize_task_set(const TaskSet& set) {
  std::string out = "{\n  \"scenes\": {";
  bool first = true;
  for (const auto& [id, scene] : set.scenes) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    \"" + detail::json_escape(id) + "\": " +
           detail::indent_tail(scene_model::serialize_scene(scene), 4);
  }
  out += set.scenes.empty() ? "},\n" : "\n  },\n";

  out += "  \"tasks\": {";
  first = true;
  for (const auto& [id, task] : set.tasks) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    \"" + detail::json_escape(id) + "\": " +
           detail::indent_tail(serialize_task_spec(task), 4);
  }
  out += set.tasks.empty() ? "}\n" : "\n  }\n";
  out += "}\n";
  return out;
}

TaskSet parse_task_set(const std::string& text) {
  const nlohmann::json doc = detail::parse_json_text(text);
  detail::expect_object(doc, "task_set");
  static const std::vector<std::string> known = {"scenes", "tasks"};
  detail::forbid_unknown_keys(doc, known, "task_set");

  TaskSet set;
  const auto& scenes = detail::expect_object(
      detail::expect_key(doc, "scenes", "task_set"), "task_set.scenes");
  for (auto it = scenes.begin(); it != scenes.end(); ++it) {
    set.scenes.emplace(it.key(), scene_model::parse_scene(it->dump()));
  }

  const auto& tasks = detail::expect_object(
      detail::expect_key(doc, "tasks", "task_set"), "task_set.tasks");
  for (auto it = tasks.begin(); it != tasks.end(); ++it) {
    TaskSpec task = parse_task_spec(it->dump());
    if (!set.scenes.count(task.scene_id)) {
      throw scene_model::SchemaError("task \"" + it.key() +
                                     "\" references unknown scene \"" +
                                     task.scene_id + "\"");
    }
    set.tasks.emplace(it.key(), std::move(task));
  }
  return set;
}

}  // namespace scenebench::task_model
