#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenebench/scene_model.hpp"

namespace scenebench::task_model {

struct TerminationCondition {
  std::string predicate;
  std::vector<std::string> subjects;
  std::string reference;  // empty when not applicable
  std::optional<double> threshold;
};

struct Subtask {
  std::string label;
  std::vector<TerminationCondition> steps;
};

struct TaskSpec {
  std::string instruction;
  std::string scene_id;
  std::string axis;
  std::string subcategory;
  std::string difficulty;
  std::vector<Subtask> subtasks;
};

struct SceneState {
  std::map<std::string, geometry::Pose> poses;
  double gripper = 1.0;  // 1 = open, 0 = closed
  std::string held;      // empty when nothing is grasped
};

struct EvalContext {
  std::map<std::string, geometry::Vec3> dims;
  std::map<std::string, double> rest_z;  // settled center heights
};

EvalContext make_context(const scene_model::Scene& scene);

// The names accepted by TerminationCondition::predicate.
const std::vector<std::string>& predicate_library();

bool eval_condition(const TerminationCondition& cond, const SceneState& state,
                    const EvalContext& ctx);

// Prefix credit: fraction of leading conditions that hold, averaged over
// subtasks.
double graded_score(const TaskSpec& task, const SceneState& state,
                    const EvalContext& ctx);

// True only when every condition of every subtask holds.
bool success(const TaskSpec& task, const SceneState& state,
             const EvalContext& ctx);

std::string serialize_task_spec(const TaskSpec& task);
TaskSpec parse_task_spec(const std::string& text);

// A bundle of scenes and the tasks defined over them, keyed by id. Episode
// logs reference entries in `tasks`; each task's scene_id must resolve in
// `scenes`.
struct TaskSet {
  std::map<std::string, scene_model::Scene> scenes;
  std::map<std::string, TaskSpec> tasks;
};

std::string serialize_task_set(const TaskSet& set);
TaskSet parse_task_set(const std::string& text);

}  // namespace scenebench::task_model
