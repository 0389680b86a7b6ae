// Regenerates every committed fixture under fixtures/ and the prompt
// templates under prompts/. Run from the repository root (or pass it as
// argv[1]). Recording is driven through the real generation pipelines with
// scripted transports, so replay fixtures always match the prompts the
// library actually sends.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenebench/chat_client.hpp"
#include "scenebench/genpipe.hpp"
#include "scenebench/prompts.hpp"
#include "scenebench/rng.hpp"
#include "scenebench/scene_model.hpp"
#include "scenebench/sensitivity.hpp"
#include "scenebench/task_model.hpp"
#include "scenebench/trajectory_metrics.hpp"

namespace sb = scenebench;

namespace {

std::filesystem::path g_root = ".";

void write_text(const std::filesystem::path& rel, const std::string& text) {
  const std::filesystem::path path = g_root / rel;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << rel.string() << "\n";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("fixture invariant failed: " + what);
}

std::string chat_response(const std::string& content) {
  nlohmann::json message;
  message["role"] = "assistant";
  message["content"] = content;
  nlohmann::json choice;
  choice["message"] = message;
  nlohmann::json doc;
  doc["choices"] = nlohmann::json::array();
  doc["choices"].push_back(choice);
  return doc.dump();
}

sb::genpipe::Transport scripted(std::vector<std::string> contents) {
  auto remaining =
      std::make_shared<std::vector<std::string>>(std::move(contents));
  auto next = std::make_shared<std::size_t>(0);
  return [remaining, next](const std::string&) {
    if (*next >= remaining->size()) {
      throw std::runtime_error("scripted transport exhausted");
    }
    return chat_response((*remaining)[(*next)++]);
  };
}

sb::genpipe::ChatClient recorder(const std::string& pipeline,
                                 const std::string& case_name,
                                 sb::genpipe::Transport transport) {
  sb::genpipe::ChatConfig config;
  config.mode = sb::genpipe::ChatMode::record;
  config.fixture_dir = g_root / "fixtures" / "llm";
  config.pipeline = pipeline;
  config.case_name = case_name;
  return sb::genpipe::ChatClient(std::move(config), std::move(transport));
}

const char* kCatalogJson = R"JSON([
  {"name": "bowl_0", "dims": [0.22, 0.22, 0.06], "category": "container", "description": "wide ceramic serving bowl"},
  {"name": "bowl_small", "dims": [0.14, 0.14, 0.05], "category": "container", "description": "small snack bowl"},
  {"name": "bin_0", "dims": [0.3, 0.3, 0.2], "category": "container", "description": "deep storage bin"},
  {"name": "tray", "dims": [0.35, 0.25, 0.04], "category": "container", "description": "shallow serving tray"},
  {"name": "basket", "dims": [0.26, 0.18, 0.12], "category": "container", "description": "woven bread basket"},
  {"name": "plate_large", "dims": [0.26, 0.26, 0.02], "category": "support", "description": "large dinner plate"},
  {"name": "plate_small", "dims": [0.18, 0.18, 0.02], "category": "support", "description": "side plate"},
  {"name": "cutting_board", "dims": [0.32, 0.22, 0.015], "category": "support", "description": "wooden cutting board"},
  {"name": "book", "dims": [0.21, 0.15, 0.025], "category": "support", "description": "hardcover recipe book"},
  {"name": "apple_01", "dims": [0.07, 0.07, 0.07], "category": "food", "description": "red apple"},
  {"name": "orange_01", "dims": [0.065, 0.065, 0.065], "category": "food", "description": "navel orange"},
  {"name": "banana", "dims": [0.19, 0.035, 0.035], "category": "food", "description": "ripe banana"},
  {"name": "lemon", "dims": [0.055, 0.055, 0.055], "category": "food", "description": "whole lemon"},
  {"name": "lime", "dims": [0.05, 0.05, 0.05], "category": "food", "description": "whole lime"},
  {"name": "pear", "dims": [0.065, 0.065, 0.09], "category": "food", "description": "green pear"},
  {"name": "bread_roll", "dims": [0.09, 0.06, 0.05], "category": "food", "description": "crusty bread roll"},
  {"name": "yogurt_cup", "dims": [0.07, 0.07, 0.08], "category": "food", "description": "sealed yogurt cup"},
  {"name": "spoon", "dims": [0.15, 0.03, 0.02], "category": "tool", "description": "steel tablespoon"},
  {"name": "fork", "dims": [0.16, 0.03, 0.02], "category": "tool", "description": "steel dinner fork"},
  {"name": "knife", "dims": [0.2, 0.025, 0.015], "category": "tool", "description": "butter knife"},
  {"name": "spatula", "dims": [0.24, 0.06, 0.03], "category": "tool", "description": "silicone spatula"},
  {"name": "whisk", "dims": [0.25, 0.06, 0.06], "category": "tool", "description": "balloon whisk"},
  {"name": "mug", "dims": [0.09, 0.09, 0.1], "category": "other", "description": "white coffee mug"},
  {"name": "cup", "dims": [0.08, 0.08, 0.09], "category": "other", "description": "glass tumbler"},
  {"name": "salt_shaker", "dims": [0.04, 0.04, 0.09], "category": "other", "description": "salt shaker"},
  {"name": "pepper_mill", "dims": [0.05, 0.05, 0.14], "category": "other", "description": "wooden pepper mill"},
  {"name": "napkin", "dims": [0.12, 0.12, 0.005], "category": "other", "description": "folded cloth napkin"},
  {"name": "candle", "dims": [0.06, 0.06, 0.12], "category": "other", "description": "pillar candle"},
  {"name": "coaster", "dims": [0.1, 0.1, 0.008], "category": "other", "description": "cork coaster"}
]
)JSON";

sb::geometry::TableBounds default_bounds() {
  sb::geometry::TableBounds bounds;
  bounds.x_min = 0.25;
  bounds.x_max = 0.85;
  bounds.y_min = -0.4;
  bounds.y_max = 0.4;
  bounds.z_top = 0.75;
  return bounds;
}

sb::scene_model::ScenePlan example_plan() {
  sb::scene_model::ScenePlan plan;
  plan.objects = {"bowl_0", "plate_large", "apple_01", "orange_01",
                  "banana", "mug",         "spoon"};
  plan.predicates.push_back(
      sb::scene_model::PlaceOnBase{"bowl_0", 0.4, 0.15, 23.0});
  plan.predicates.push_back(
      sb::scene_model::PlaceOnBase{"plate_large", 0.65, -0.1, 156.0});
  plan.predicates.push_back(
      sb::scene_model::PlaceIn{{"apple_01", "orange_01"}, "bowl_0"});
  plan.predicates.push_back(sb::scene_model::PlaceOn{
      "banana", "plate_large", sb::scene_model::PositionHint::center});
  plan.predicates.push_back(
      sb::scene_model::ClusterAround{{"mug", "spoon"}, "bowl_0", 0.12});
  return plan;
}

sb::scene_model::Scene record_scene_cases(
    const sb::scene_model::Catalog& catalog) {
  const auto bounds = default_bounds();
  const std::string plan_json =
      sb::scene_model::serialize_scene_plan(example_plan());
  write_text("fixtures/plans/example_plan.json", plan_json);

  {
    auto client = recorder("scene", "valid_first", scripted({plan_json}));
    sb::Rng rng(7);
    auto result = sb::genpipe::generate_scene("fruit snack table", catalog,
                                              bounds, client, 3, rng);
    require(result.report.attempts == 1, "valid_first solves in one attempt");
    require(result.scene.placements.size() == 7,
            "valid_first places all seven objects");
    write_text("fixtures/scenes/golden_scene.json",
               sb::scene_model::serialize_scene(result.scene));

    {
      auto unstable = example_plan();
      sb::scene_model::ScenePlan p1;
      p1.objects = {"bin_0", "spoon"};
      p1.predicates.push_back(
          sb::scene_model::PlaceOnBase{"bin_0", 0.45, 0.0, 0.0});
      p1.predicates.push_back(sb::scene_model::PlaceIn{{"spoon"}, "bin_0"});
      sb::scene_model::ScenePlan p2;
      p2.objects = {"bin_0", "spoon"};
      p2.predicates.push_back(
          sb::scene_model::PlaceOnBase{"bin_0", 0.45, 0.0, 0.0});
      p2.predicates.push_back(
          sb::scene_model::PlaceOnBase{"spoon", 0.7, 0.25, 90.0});
      auto retry_client = recorder(
          "scene", "unstable_then_fixed",
          scripted({sb::scene_model::serialize_scene_plan(p1),
                    sb::scene_model::serialize_scene_plan(p2)}));
      sb::Rng retry_rng(11);
      auto fixed = sb::genpipe::generate_scene("storage corner", catalog,
                                               bounds, retry_client, 3,
                                               retry_rng);
      require(fixed.report.attempts == 2, "unstable_then_fixed retries once");
      require(fixed.report.feedback.size() == 1 &&
                  fixed.report.feedback[0].find("fell off") !=
                      std::string::npos,
              "unstable_then_fixed feedback mentions the drop");
    }

    {
      auto exhaust_client = recorder(
          "scene", "exhaust",
          scripted({"I cannot help with that request.",
                    "I cannot help with that request.",
                    "I cannot help with that request."}));
      sb::Rng exhaust_rng(13);
      bool threw = false;
      try {
        sb::genpipe::generate_scene("impossible crowded banquet", catalog,
                                    bounds, exhaust_client, 3, exhaust_rng);
      } catch (const sb::genpipe::GenError& e) {
        threw = true;
        require(e.report.attempts == 3, "exhaust records three attempts");
        require(!e.report.success, "exhaust reports failure");
      }
      require(threw, "exhaust case throws GenError");
    }

    return result.scene;
  }
}

std::map<std::string, sb::task_model::TaskSpec> fixture_tasks() {
  using sb::task_model::Subtask;
  using sb::task_model::TaskSpec;
  using sb::task_model::TerminationCondition;

  auto cond = [](const std::string& predicate,
                 std::vector<std::string> subjects, std::string reference,
                 std::optional<double> threshold = std::nullopt) {
    TerminationCondition c;
    c.predicate = predicate;
    c.subjects = std::move(subjects);
    c.reference = std::move(reference);
    c.threshold = threshold;
    return c;
  };

  std::map<std::string, TaskSpec> tasks;

  TaskSpec t0;
  t0.instruction = "Put the spoon in the bowl.";
  t0.scene_id = "scene_0";
  t0.axis = "relational";
  t0.subcategory = "containment";
  t0.difficulty = "simple";
  t0.subtasks = {Subtask{"place spoon in bowl",
                         {cond("inside", {"spoon"}, "bowl_0")}}};
  tasks["task_0"] = t0;

  TaskSpec t1;
  t1.instruction = "Move the apple onto the plate.";
  t1.scene_id = "scene_0";
  t1.axis = "relational";
  t1.subcategory = "support";
  t1.difficulty = "simple";
  t1.subtasks = {Subtask{"apple on plate",
                         {cond("on_top_of", {"apple_01"}, "plate_large")}}};
  tasks["task_1"] = t1;

  TaskSpec t2;
  t2.instruction = "Lift the banana off the table.";
  t2.scene_id = "scene_0";
  t2.axis = "visual";
  t2.subcategory = "affordance";
  t2.difficulty = "simple";
  t2.subtasks = {Subtask{"lift banana", {cond("lifted", {"banana"}, "")}}};
  tasks["task_2"] = t2;

  TaskSpec t3;
  t3.instruction = "Pick up the apple, then pick up the orange.";
  t3.scene_id = "scene_0";
  t3.axis = "procedural";
  t3.subcategory = "sequencing";
  t3.difficulty = "moderate";
  t3.subtasks = {Subtask{"pick apple", {cond("lifted", {"apple_01"}, "")}},
                 Subtask{"pick orange", {cond("lifted", {"orange_01"}, "")}}};
  tasks["task_3"] = t3;

  TaskSpec t4;
  t4.instruction = "Slide the spoon to the left of the plate.";
  t4.scene_id = "scene_0";
  t4.axis = "relational";
  t4.subcategory = "direction";
  t4.difficulty = "simple";
  t4.subtasks = {Subtask{"spoon left of plate",
                         {cond("left_of", {"spoon"}, "plate_large")}}};
  tasks["task_4"] = t4;

  TaskSpec t5;
  t5.instruction = "Gather both fruits in the bowl.";
  t5.scene_id = "scene_0";
  t5.axis = "relational";
  t5.subcategory = "quantifier";
  t5.difficulty = "moderate";
  t5.subtasks = {
      Subtask{"fruits in bowl",
              {cond("count_in", {"apple_01", "orange_01"}, "bowl_0", 2.0)}}};
  tasks["task_5"] = t5;

  return tasks;
}

void record_task_cases(const sb::scene_model::Scene& scene,
                       const std::map<std::string, sb::task_model::TaskSpec>&
                           tasks) {
  const std::string valid = sb::task_model::serialize_task_spec(
      tasks.at("task_0"));
  {
    auto client = recorder("task", "valid_first", scripted({valid}));
    auto result = sb::genpipe::generate_task(scene, "scene_0", "relational",
                                             "containment", "simple", client,
                                             {}, 3);
    require(result.report.attempts == 1, "task valid_first single attempt");
  }

  {
    std::string broken = valid;
    const std::string needle = "\"predicate\": \"inside\"";
    const auto at = broken.find(needle);
    require(at != std::string::npos, "broken task template has predicate");
    broken.replace(at, needle.size(), "\"predicate\": \"touching\"");
    const std::string fixed = sb::task_model::serialize_task_spec(
        tasks.at("task_4"));
    auto client = recorder("task", "retry", scripted({broken, fixed}));
    auto result = sb::genpipe::generate_task(scene, "scene_0", "relational",
                                             "direction", "simple", client,
                                             {}, 3);
    require(result.report.attempts == 2, "task retry takes two attempts");
    require(result.report.feedback.size() == 1, "task retry one feedback");
  }
}

std::string judge_response(double relation, double target, double object,
                           double quantifier, double clarity,
                           double feasibility, const std::string& verdict) {
  nlohmann::json doc;
  doc["relation"] = relation;
  doc["target"] = target;
  doc["object"] = object;
  doc["quantifier"] = quantifier;
  doc["clarity"] = clarity;
  doc["feasibility"] = feasibility;
  doc["verdict"] = verdict;
  return doc.dump();
}

void record_judge_cases(const std::map<std::string, sb::task_model::TaskSpec>&
                            tasks) {
  struct Case {
    std::string task_id;
    std::string response;
    double alignment;
  };
  const std::vector<Case> cases = {
      {"task_0", judge_response(1, 1, 1, 1, 1, 1, "aligned"), 1.0},
      {"task_1", judge_response(1, 1, 0.5, 0.5, 0.5, 1, "partial"), 0.75},
      {"task_2", judge_response(1, 1, 1, 1, 1, 1, "aligned"), 1.0},
      {"task_3", judge_response(0.75, 0.75, 0.75, 0.75, 0.75, 0.75,
                                "partial"), 0.75},
      {"task_4", judge_response(0.5, 0.5, 0.5, 0.5, 0.5, 0.5, "misaligned"),
       0.5},
      {"task_5", judge_response(1, 0.5, 0.25, 0.25, 0.5, 0.5, "misaligned"),
       0.5},
  };

  double sum = 0.0;
  for (const auto& c : cases) {
    auto client = recorder("judge", "default", scripted({c.response}));
    const auto scores = sb::genpipe::judge_task(tasks.at(c.task_id), client);
    require(scores.alignment == c.alignment,
            "judge alignment for " + c.task_id);
    sum += scores.alignment;
  }
  require(sum / cases.size() == 0.75, "judge fixture mean alignment");

  write_text("fixtures/judge_expected.json", R"JSON({
  "alignments": {
    "task_0": 1,
    "task_1": 0.75,
    "task_2": 1,
    "task_3": 0.75,
    "task_4": 0.5,
    "task_5": 0.5
  },
  "mean": 0.75
}
)JSON");
}

sb::trajectory_metrics::Trajectory min_jerk_trajectory(
    const sb::geometry::Vec3& start, const sb::geometry::Vec3& delta,
    double duration, int n) {
  sb::trajectory_metrics::Trajectory traj;
  for (int i = 0; i < n; ++i) {
    const double t = duration * i / (n - 1);
    const double tau = t / duration;
    const double s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
    sb::trajectory_metrics::TrajectorySample sample;
    sample.t = t;
    sample.end_effector.position = start + s * delta;
    sample.gripper = 1.0 - 0.5 * s;
    traj.samples.push_back(sample);
  }
  return traj;
}

void write_episode_fixtures(const sb::scene_model::Scene& scene) {
  using sb::trajectory_metrics::EpisodeRecord;
  using sb::trajectory_metrics::Event;

  std::map<std::string, sb::geometry::Pose> base_poses;
  for (const auto& p : scene.placements) base_poses[p.name] = p.pose;
  const auto pose_of = [&](const std::string& name) {
    return base_poses.at(name);
  };

  const sb::geometry::Vec3 home(0.3, -0.3, 1.0);
  auto traj_to = [&](const std::string& target) {
    return min_jerk_trajectory(home, pose_of(target).position - home, 2.0,
                               41);
  };

  std::vector<EpisodeRecord> episodes;
  const std::vector<std::string> cycle = {
      "task_0", "task_1", "task_3", "task_2", "task_4",
      "task_5", "task_0", "task_1", "task_2", "task_3"};
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    EpisodeRecord ep;
    ep.task_id = cycle[i];
    ep.theta = {{"light", 0.1 * static_cast<double>(i)},
                {"friction", 0.2 + 0.05 * static_cast<double>(i)},
                {"texture", static_cast<double>(i % 3)}};
    ep.trajectory = traj_to(i % 2 == 0 ? "bowl_0" : "plate_large");
    episodes.push_back(std::move(ep));
  }

  // Final states reuse the authored scene poses and move only what the task
  // needs, so graded scores stay hand-checkable.
  const sb::geometry::Pose bowl = pose_of("bowl_0");
  const sb::geometry::Pose plate = pose_of("plate_large");

  episodes[0].outcome = true;
  {
    sb::task_model::SceneState fs;
    fs.poses = base_poses;
    fs.poses["spoon"].position =
        sb::geometry::Vec3(bowl.position.x(), bowl.position.y(),
                           bowl.position.z() - 0.01);
    fs.gripper = 1.0;
    episodes[0].final_state = fs;
  }

  episodes[1].outcome = true;
  episodes[1].events = {Event{0.8, "wrong_object_grasped", "orange_01"}};
  {
    sb::task_model::SceneState fs;
    fs.poses = base_poses;
    fs.poses["apple_01"].position =
        sb::geometry::Vec3(plate.position.x(), plate.position.y(),
                           plate.position.z() + 0.01 + 0.035);
    episodes[1].final_state = fs;
  }

  episodes[2].outcome = false;
  {
    sb::task_model::SceneState fs;
    fs.poses = base_poses;
    fs.poses["apple_01"].position.z() += 0.2;
    fs.held = "apple_01";
    fs.gripper = 0.0;
    episodes[2].final_state = fs;
  }

  episodes[3].outcome = true;
  {
    sb::task_model::SceneState fs;
    fs.poses = base_poses;
    fs.poses["banana"].position.z() += 0.15;
    fs.held = "banana";
    fs.gripper = 0.0;
    episodes[3].final_state = fs;
  }

  episodes[4].events = {Event{1.2, "object_dropped", "spoon"}};
  episodes[5].events = {Event{0.5, "gripper_collision", "bowl_0"},
                        Event{1.5, "gripper_collision", "plate_large"}};
  episodes[7].events = {Event{0.6, "wrong_object_grasped", "mug"}};

  std::string out;
  for (const auto& ep : episodes) {
    out += sb::trajectory_metrics::serialize_episode(ep);
    out += "\n";
  }
  write_text("fixtures/episodes/episodes.jsonl", out);
}

void write_sensitivity_fixtures() {
  sb::sensitivity::VariationSpace space;
  space.continuous = {{"light", 0.0, 1.0}, {"friction", 0.2, 0.8}};
  space.discrete = {{"texture", {"wood", "marble", "cloth"}}};
  write_text("fixtures/spaces/space.json",
             sb::sensitivity::serialize_variation_space(space));

  sb::Rng rng(99);
  std::string out;
  int successes = 0;
  const int n = 120;
  for (int i = 0; i < n; ++i) {
    const double light = rng.uniform();
    const double friction = 0.2 + 0.6 * rng.uniform();
    const int texture = static_cast<int>(rng.uniform_index(3));
    sb::trajectory_metrics::EpisodeRecord ep;
    ep.task_id = "task_0";
    ep.outcome = light <= 0.45 && texture != 2;
    successes += ep.outcome ? 1 : 0;
    ep.theta = {{"light", light},
                {"friction", friction},
                {"texture", static_cast<double>(texture)}};
    ep.trajectory = min_jerk_trajectory(sb::geometry::Vec3(0.3, -0.3, 1.0),
                                        sb::geometry::Vec3(0.2, 0.3, -0.2),
                                        1.0, 5);
    out += sb::trajectory_metrics::serialize_episode(ep);
    out += "\n";
  }
  require(successes >= 10 && n - successes >= 10,
          "sensitivity fixture has both outcomes");
  write_text("fixtures/episodes/sensitivity_episodes.jsonl", out);
}

void write_prompt_templates() {
  for (const auto& [filename, content] :
       sb::genpipe::prompts::static_templates()) {
    write_text(std::filesystem::path("prompts") / filename, content);
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    if (argc > 1) g_root = argv[1];

    const auto catalog = sb::scene_model::parse_catalog(kCatalogJson);
    write_text("fixtures/catalog.json", kCatalogJson);

    const auto scene = record_scene_cases(catalog);
    const auto tasks = fixture_tasks();

    sb::task_model::TaskSet set;
    set.scenes["scene_0"] = scene;
    set.tasks = tasks;
    write_text("fixtures/tasks/sample_tasks.json",
               sb::task_model::serialize_task_set(set));

    record_task_cases(scene, tasks);
    record_judge_cases(tasks);
    write_episode_fixtures(scene);
    write_sensitivity_fixtures();
    write_prompt_templates();
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
