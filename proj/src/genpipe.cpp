#include "scenebench/genpipe.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/detail/jsonio.hpp"
#include "scenebench/placement_solver.hpp"
#include "scenebench/prompts.hpp"

namespace scenebench::genpipe {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Builds the full scene from a solved base layout plus the dependent
// place-on / place-in predicates. On failure writes the feedback string and
// returns the partial scene.
scene_model::Scene assemble_scene(const scene_model::ScenePlan& plan,
                                  const scene_model::Catalog& catalog,
                                  const geometry::TableBounds& bounds,
                                  const spatial_solver::Layout2D& layout,
                                  Rng& rng, std::string& feedback,
                                  std::vector<std::string>& notes) {
  scene_model::Scene scene;
  scene.bounds = bounds;
  for (const auto& entry : layout.entries) {
    const scene_model::CatalogEntry* e = catalog.find(entry.name);
    const double z = bounds.z_top + 0.5 * e->dims.z();
    scene.add(entry.name,
              geometry::Pose(geometry::Vec3(entry.x, entry.y, z),
                             geometry::quat_from_yaw(entry.yaw)),
              e->dims);
  }

  for (const auto& predicate : plan.predicates) {
    if (const auto* po = std::get_if<scene_model::PlaceOn>(&predicate)) {
      const scene_model::Placement* support = scene.find(po->support);
      if (support == nullptr) {
        feedback = "Object '" + po->support +
                   "' must be placed before objects go on it";
        return scene;
      }
      const scene_model::CatalogEntry* e = catalog.find(po->object);
      const double yaw = rng.uniform(0.0, 2.0 * kPi);
      std::vector<geometry::Obb> peers;
      for (const auto& p : scene.placements) {
        if (p.name != po->support) peers.push_back(p.obb());
      }
      auto result = placement_solver::place_on(
          *support, e->dims, yaw, peers, po->position, {}, rng);
      if (const auto* failure =
              std::get_if<placement_solver::PlacementFailure>(&result)) {
        feedback = placement_solver::feedback_message(*failure);
        return scene;
      }
      scene.add(po->object, std::get<geometry::Pose>(result), e->dims);
    } else if (const auto* pi =
                   std::get_if<scene_model::PlaceIn>(&predicate)) {
      const scene_model::Placement* container = scene.find(pi->container);
      if (container == nullptr) {
        feedback = "Object '" + pi->container +
                   "' must be placed before objects go in it";
        return scene;
      }
      std::vector<std::pair<std::string, geometry::Vec3>> objects;
      for (const auto& name : pi->objects) {
        objects.emplace_back(name, catalog.find(name)->dims);
      }
      auto result = placement_solver::place_in(*container, objects, {}, rng);
      if (result.failure.has_value()) {
        feedback = placement_solver::feedback_message(*result.failure);
        return scene;
      }
      for (const auto& [name, pose] : result.placed) {
        scene.add(name, pose, catalog.find(name)->dims);
      }
      if (result.area_filter_triggered) {
        notes.push_back("area filter triggered for '" + pi->container + "'");
      }
      for (const auto& name : result.dropped) {
        notes.push_back("dropped from '" + pi->container + "': " + name);
      }
    }
  }
  return scene;
}

}  // namespace

SceneGenResult generate_scene(const std::string& theme,
                              const scene_model::Catalog& catalog,
                              const geometry::TableBounds& bounds,
                              ChatClient& client, int max_attempts, Rng& rng,
                              double base_margin,
                              double stability_threshold) {
  if (max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be >= 1");
  }
  constexpr int kTargetCount = 12;
  const std::string system = prompts::scene_system_prompt();
  const std::string base_user =
      prompts::scene_user_prompt(theme, catalog, kTargetCount);

  GenReport report;
  std::string user = base_user;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string content =
        client.complete({{"system", system}, {"user", user}});

    std::string feedback;
    scene_model::ScenePlan plan;
    bool parsed = false;
    try {
      plan = scene_model::parse_scene_plan(content);
      parsed = true;
    } catch (const scene_model::ParseError& e) {
      feedback = std::string("Invalid plan JSON: ") + e.what();
    } catch (const scene_model::SchemaError& e) {
      feedback = std::string("Invalid plan JSON: ") + e.what();
    }

    if (parsed) {
      scene_model::ValidatedPlan validated =
          scene_model::validate_plan(plan, catalog, bounds);
      for (const auto& violation : validated.violations) {
        report.notes.push_back(violation.code + ": " + violation.message);
      }

      spatial_solver::SolverConfig config;
      config.base_margin = base_margin;
      config.rng_seed = rng.raw();
      try {
        spatial_solver::SolveResult solved = spatial_solver::solve_spatial(
            validated.plan, catalog, bounds, config);
        if (!solved.ok()) {
          feedback = placement_solver::feedback_message(*solved.failure);
        } else {
          scene_model::Scene scene =
              assemble_scene(validated.plan, catalog, bounds, *solved.layout,
                             rng, feedback, report.notes);
          if (feedback.empty()) {
            placement_solver::StabilityReport stability =
                placement_solver::settle_and_check(scene, catalog,
                                                   stability_threshold);
            if (!stability.stable) {
              feedback = placement_solver::feedback_message(stability);
            } else {
              scene_model::Scene settled;
              settled.bounds = scene.bounds;
              for (const auto& p : scene.placements) {
                geometry::Vec3 position = p.pose.position;
                position.z() = stability.settled_z.at(p.name);
                settled.add(p.name,
                            geometry::Pose(position, p.pose.orientation),
                            p.dims);
              }
              report.attempts = attempt;
              report.success = true;
              return {std::move(settled), std::move(validated.plan),
                      std::move(report)};
            }
          }
        }
      } catch (const std::invalid_argument& e) {
        feedback = e.what();
      }
    }

    report.feedback.push_back(feedback);
    user = base_user + "\n\n" + prompts::feedback_block(feedback);
  }

  report.attempts = max_attempts;
  throw GenError("scene generation failed after " +
                     std::to_string(max_attempts) + " attempts: " +
                     report.feedback.back(),
                 report);
}

TaskGenResult generate_task(const scene_model::Scene& scene,
                            const std::string& scene_id,
                            const std::string& axis,
                            const std::string& subcategory,
                            const std::string& difficulty, ChatClient& client,
                            const std::vector<std::string>& prior_tasks,
                            int max_attempts) {
  if (max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be >= 1");
  }
  const std::string system = prompts::task_system_prompt();
  const std::string base_user = prompts::task_user_prompt(
      scene, scene_id, axis, subcategory, difficulty, prior_tasks);

  GenReport report;
  std::string user = base_user;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string content =
        client.complete({{"system", system}, {"user", user}});

    std::string error;
    task_model::TaskSpec task;
    try {
      task = task_model::parse_task_spec(content);
      task.scene_id = scene_id;
      task.axis = axis;
      task.subcategory = subcategory;
      task.difficulty = difficulty;

      std::vector<scene_model::Violation> violations =
          validate_task(task, scene);
      const std::string instruction = lower(task.instruction);
      for (const auto& prior : prior_tasks) {
        if (lower(prior) == instruction) {
          violations.push_back(
              {"duplicate_instruction",
               "instruction duplicates a previously generated task: " +
                   task.instruction});
          break;
        }
      }
      if (!violations.empty()) {
        for (std::size_t i = 0; i < violations.size(); ++i) {
          if (i) error += "; ";
          error += violations[i].message;
        }
      }
    } catch (const std::exception& e) {
      error = e.what();
    }

    if (error.empty()) {
      report.attempts = attempt;
      report.success = true;
      return {std::move(task), std::move(report)};
    }
    report.feedback.push_back(error);
    user = prompts::task_fix_prompt(base_user, content, error);
  }

  report.attempts = max_attempts;
  throw GenError("task generation failed after " +
                     std::to_string(max_attempts) + " attempts: " +
                     report.feedback.back(),
                 report);
}

std::vector<scene_model::Violation> validate_task(
    const task_model::TaskSpec& task, const scene_model::Scene& scene,
    const std::vector<std::string>& forbidden, double clearance) {
  std::vector<scene_model::Violation> violations;

  if (task.instruction.empty()) {
    violations.push_back({"empty_instruction", "instruction is empty"});
  }
  if (task.subtasks.empty()) {
    violations.push_back({"no_subtasks", "task has no subtasks"});
  }

  auto known = [&](const std::string& name) {
    return scene.find(name) != nullptr;
  };
  auto is_forbidden = [&](const std::string& name) {
    return std::find(forbidden.begin(), forbidden.end(), name) !=
           forbidden.end();
  };
  const auto& library = task_model::predicate_library();

  for (const auto& subtask : task.subtasks) {
    if (subtask.steps.empty()) {
      violations.push_back(
          {"empty_subtask", "subtask \"" + subtask.label + "\" has no steps"});
    }
    for (const auto& step : subtask.steps) {
      if (std::find(library.begin(), library.end(), step.predicate) ==
          library.end()) {
        violations.push_back({"unknown_predicate",
                              "predicate \"" + step.predicate +
                                  "\" is not in the library"});
        continue;
      }
      const bool wants_reference =
          step.predicate != "lifted" && step.predicate != "upright";

      for (const auto& subject : step.subjects) {
        if (!known(subject)) {
          violations.push_back({"unknown_object",
                                "object \"" + subject +
                                    "\" is not in the scene"});
        } else if (is_forbidden(subject)) {
          violations.push_back(
              {"forbidden_object",
               "object \"" + subject + "\" may not be referenced"});
        }
      }
      if (wants_reference) {
        if (step.reference.empty()) {
          violations.push_back({"missing_reference",
                                "predicate \"" + step.predicate +
                                    "\" needs a reference object"});
        } else if (!known(step.reference)) {
          violations.push_back({"unknown_object",
                                "object \"" + step.reference +
                                    "\" is not in the scene"});
        } else if (is_forbidden(step.reference)) {
          violations.push_back(
              {"forbidden_object",
               "object \"" + step.reference + "\" may not be referenced"});
        }
      }

      if (step.predicate == "near") {
        if (!step.threshold.has_value() || *step.threshold <= 0.0) {
          violations.push_back(
              {"bad_threshold", "near needs a distance threshold > 0"});
        }
      }
      if (step.predicate == "count_in") {
        const double t = step.threshold.value_or(0.0);
        if (t < 1.0 || t != std::floor(t) ||
            t > static_cast<double>(step.subjects.size())) {
          violations.push_back(
              {"bad_threshold",
               "count_in needs an integer threshold between 1 and the "
               "subject count"});
        }
      }

      if (step.predicate == "inside" && !step.reference.empty() &&
          known(step.reference)) {
        const auto* ref = scene.find(step.reference);
        for (const auto& subject : step.subjects) {
          const auto* sub = scene.find(subject);
          if (sub == nullptr) continue;
          const double footprint =
              std::max(sub->dims.x(), sub->dims.y()) + clearance;
          const double opening = std::min(ref->dims.x(), ref->dims.y());
          if (footprint > opening || sub->dims.z() > ref->dims.z()) {
            violations.push_back(
                {"containment_fit",
                 "object \"" + subject + "\" does not fit inside \"" +
                     step.reference + "\" with clearance"});
          }
        }
      }
    }
  }
  return violations;
}

JudgeScores parse_judge_scores(const std::string& text) {
  const nlohmann::json doc = detail::parse_json_text(text);
  detail::expect_object(doc, "judge");
  static const std::vector<std::string> known = {
      "relation", "target",  "object", "quantifier",
      "clarity",  "feasibility", "verdict"};
  detail::forbid_unknown_keys(doc, known, "judge");

  auto score = [&](const char* key) {
    const double v = detail::expect_number(
        detail::expect_key(doc, key, "judge"), std::string("judge.") + key);
    if (v < 0.0 || v > 1.0) {
      throw scene_model::SchemaError(std::string("judge.") + key +
                                     " must be in [0,1]");
    }
    return v;
  };

  JudgeScores scores;
  scores.relation = score("relation");
  scores.target = score("target");
  scores.object = score("object");
  scores.quantifier = score("quantifier");
  scores.clarity = score("clarity");
  scores.feasibility = score("feasibility");
  scores.verdict = detail::expect_string(
      detail::expect_key(doc, "verdict", "judge"), "judge.verdict");
  if (scores.verdict != "aligned" && scores.verdict != "partial" &&
      scores.verdict != "misaligned") {
    throw scene_model::SchemaError(
        "judge.verdict must be aligned, partial, or misaligned");
  }
  scores.alignment =
      (scores.relation + scores.target + scores.object + scores.quantifier +
       scores.clarity + scores.feasibility) /
      6.0;
  return scores;
}

JudgeScores judge_task(const task_model::TaskSpec& task, ChatClient& client) {
  const std::string content = client.complete(
      {{"system", prompts::judge_system_prompt()},
       {"user", prompts::judge_user_prompt(task)}},
      0.0);
  return parse_judge_scores(content);
}

std::string serialize_judge_scores(const JudgeScores& scores) {
  std::string out = "{\n";
  out += "  \"relation\": " + detail::fmt_g6(scores.relation) + ",\n";
  out += "  \"target\": " + detail::fmt_g6(scores.target) + ",\n";
  out += "  \"object\": " + detail::fmt_g6(scores.object) + ",\n";
  out += "  \"quantifier\": " + detail::fmt_g6(scores.quantifier) + ",\n";
  out += "  \"clarity\": " + detail::fmt_g6(scores.clarity) + ",\n";
  out += "  \"feasibility\": " + detail::fmt_g6(scores.feasibility) + ",\n";
  out += "  \"alignment\": " + detail::fmt_g6(scores.alignment) + ",\n";
  out += "  \"weights\": \"equal (1/6 per dimension)\",\n";
  out += "  \"verdict\": \"" + detail::json_escape(scores.verdict) + "\"\n";
  out += "}\n";
  return out;
}

Coverage coverage(const std::vector<task_model::TaskSpec>& tasks,
                  const scene_model::Scene& scene,
                  const scene_model::Catalog& catalog,
                  const std::vector<std::string>& predicate_library) {
  if (scene.placements.empty()) {
    throw std::invalid_argument("coverage needs a non-empty scene");
  }

  std::set<std::string> manipulable;
  for (const auto& p : scene.placements) {
    const scene_model::CatalogEntry* entry = catalog.find(p.name);
    const bool structural =
        entry != nullptr &&
        (entry->category == scene_model::Category::container ||
         entry->category == scene_model::Category::support);
    if (!structural) manipulable.insert(p.name);
  }
  if (manipulable.empty()) {
    throw std::invalid_argument("scene has no manipulable objects");
  }

  std::set<std::string> referenced;
  std::set<std::string> used_predicates;
  for (const auto& task : tasks) {
    for (const auto& subtask : task.subtasks) {
      for (const auto& step : subtask.steps) {
        used_predicates.insert(step.predicate);
        for (const auto& subject : step.subjects) {
          if (manipulable.count(subject)) referenced.insert(subject);
        }
        if (!step.reference.empty() && manipulable.count(step.reference)) {
          referenced.insert(step.reference);
        }
      }
    }
  }

  Coverage result;
  result.object_coverage =
      static_cast<double>(referenced.size()) / manipulable.size();
  result.predicate_coverage =
      static_cast<double>(used_predicates.size()) / predicate_library.size();
  return result;
}

std::string serialize_gen_report(const GenReport& report) {
  std::string out = "{\n";
  out += "  \"attempts\": " + std::to_string(report.attempts) + ",\n";
  out += "  \"success\": " + std::string(report.success ? "true" : "false") +
         ",\n";
  out += "  \"feedback\": [";
  for (std::size_t i = 0; i < report.feedback.size(); ++i) {
    out += (i ? ",\n    " : "\n    ");
    out += "\"" + detail::json_escape(report.feedback[i]) + "\"";
  }
  out += report.feedback.empty() ? "],\n" : "\n  ],\n";
  out += "  \"notes\": [";
  for (std::size_t i = 0; i < report.notes.size(); ++i) {
    out += (i ? ",\n    " : "\n    ");
    out += "\"" + detail::json_escape(report.notes[i]) + "\"";
  }
  out += report.notes.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  return out;
}

}  // namespace scenebench::genpipe
