#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "scenebench/chat_client.hpp"
#include "scenebench/rng.hpp"
#include "scenebench/scene_model.hpp"
#include "scenebench/spatial_solver.hpp"
#include "scenebench/task_model.hpp"

namespace scenebench::genpipe {

struct GenReport {
  int attempts = 0;
  bool success = false;
  std::vector<std::string> feedback;  // one entry per failed attempt
  std::vector<std::string> notes;     // non-fatal diagnostics (drops etc.)
};

class GenError : public std::runtime_error {
 public:
  GenError(const std::string& message, GenReport report)
      : std::runtime_error(message), report(std::move(report)) {}
  GenReport report;
};

struct SceneGenResult {
  scene_model::Scene scene;
  scene_model::ScenePlan plan;
  GenReport report;
};

// Full generate -> validate -> refine loop for scenes. Throws GenError with
// the report attached when every attempt fails.
SceneGenResult generate_scene(const std::string& theme,
                              const scene_model::Catalog& catalog,
                              const geometry::TableBounds& bounds,
                              ChatClient& client, int max_attempts, Rng& rng,
                              double base_margin = 0.01,
                              double stability_threshold = 0.02);

struct TaskGenResult {
  task_model::TaskSpec task;
  GenReport report;
};

TaskGenResult generate_task(const scene_model::Scene& scene,
                            const std::string& scene_id,
                            const std::string& axis,
                            const std::string& subcategory,
                            const std::string& difficulty, ChatClient& client,
                            const std::vector<std::string>& prior_tasks,
                            int max_attempts);

std::vector<scene_model::Violation> validate_task(
    const task_model::TaskSpec& task, const scene_model::Scene& scene,
    const std::vector<std::string>& forbidden = {},
    double clearance = 0.01);

struct JudgeScores {
  double relation = 0.0;
  double target = 0.0;
  double object = 0.0;
  double quantifier = 0.0;
  double clarity = 0.0;
  double feasibility = 0.0;
  double alignment = 0.0;  // unweighted mean of the six, recomputed on parse
  std::string verdict;     // aligned | partial | misaligned
};

JudgeScores parse_judge_scores(const std::string& text);
JudgeScores judge_task(const task_model::TaskSpec& task, ChatClient& client);
std::string serialize_judge_scores(const JudgeScores& scores);

struct Coverage {
  double object_coverage = 0.0;
  double predicate_coverage = 0.0;
};

// Manipulable objects are scene placements whose catalog category is neither
// container nor support.
Coverage coverage(const std::vector<task_model::TaskSpec>& tasks,
                  const scene_model::Scene& scene,
                  const scene_model::Catalog& catalog,
                  const std::vector<std::string>& predicate_library =
                      task_model::predicate_library());

std::string serialize_gen_report(const GenReport& report);

}  // namespace scenebench::genpipe
