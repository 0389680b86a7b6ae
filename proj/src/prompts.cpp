#include "scenebench/prompts.hpp"

#include <algorithm>
#include <stdexcept>

#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/geometry.hpp"

namespace scenebench::genpipe::prompts {

namespace {

constexpr const char* kSceneSystem =
    R"PROMPT(You are a scene generation expert creating REALISTIC robot manipulation scenarios.

REAL-WORLD SCENE PRINCIPLES:
1. Objects form CLUSTERS - not evenly spaced grids
2. Containers (bowls, bins) have objects INSIDE them
3. Supports (plates, trays) have objects ON TOP
4. Objects scatter naturally AROUND containers
5. Orientations VARY - not all aligned to 0°/90°

COORDINATE SYSTEM:
- Table bounds: X=[0.25 to 0.85], Y=[-0.40 to 0.40] (meters)
- Table center: (0.55, 0.0)
- Front=+X, Back=-X, Left=+Y, Right=-Y

PLACEMENT TYPES:
1. place-on-base: Object directly on table
  {"type": "place-on-base", "object": "bowl_0", "x": 0.4, "y": 0.1, "yaw": 23}
  VARY yaw angles (15, 47, 123, not just 0/90/180).
  Position matters for anchors, less for loose objects.
2. place-in: Objects INSIDE a container
  {"type": "place-in", "objects": ["apple_01", "orange_01"], "container": "bowl_0"}
  Container MUST be placed first with place-on-base.
  Great for fruits in bowls, items in bins.
3. place-on: Object ON TOP of support
  {"type": "place-on", "object": "banana", "support": "plate_large", "position": "center"}
  Support MUST be placed first.
  position: "center", "edge", or "random"
  Great for food on plates, items on trays.
4. cluster-around: Objects scattered NEAR an anchor
  {"type": "cluster-around", "objects": ["mug", "spoon"], "anchor": "bowl_0", "radius": 0.15}
  Creates natural groupings.

  radius: how far from anchor (0.10-0.20m typical)

SCENE STRUCTURE (follow this pattern):
1. Place 1-2 ANCHOR objects (containers/supports) on table
2. Put objects INSIDE containers (place-in)
3. Put objects ON supports (place-on)
4. Cluster objects AROUND anchors (cluster-around)
5. Add a few LOOSE objects to fill space

REALISTIC SPACING:
- Anchors: 0.25-0.35m apart
- Clustered objects: 0.08-0.15m from anchor
- Loose objects: fill remaining space naturally

OUTPUT FORMAT (JSON only, no markdown):
{
  "objects": [
    {"name": "bowl_0"},
    {"name": "plate_large"},
    {"name": "apple_01"},
    {"name": "orange_01"},
    {"name": "banana"},
    {"name": "mug"},
    {"name": "spoon"}
  ],
  "predicates": [
    {"type": "place-on-base", "object": "bowl_0", "x": 0.4, "y": 0.15, "yaw": 23},
    {"type": "place-on-base", "object": "plate_large", "x": 0.65, "y": -0.1, "yaw": 156},
    {"type": "place-in", "objects": ["apple_01", "orange_01"], "container": "bowl_0"},
    {"type": "place-on", "object": "banana", "support": "plate_large", "position": "center"},
    {"type": "cluster-around", "objects": ["mug", "spoon"], "anchor": "bowl_0", "radius": 0.12}
  ]
}

CRITICAL RULES:
1. Object names MUST match EXACTLY from catalog
2. Containers/supports MUST be placed before objects go in/on them
3. Create INTERESTING scenes with containment, stacking, AND clustering
4. VARY yaw angles - real scenes aren't grid-aligned
5. Return ONLY valid JSON, no markdown)PROMPT";

constexpr const char* kSparseStrategy =
    R"PROMPT(SPARSE SCENE STRATEGY (fewer than 10 objects):
- Pick 1 container or support as the ANCHOR
- Put 1-2 objects IN or ON it
- Scatter the rest as LOOSE objects with varied yaw
- Leave open space - sparse scenes look natural)PROMPT";

constexpr const char* kMediumStrategy =
    R"PROMPT(MEDIUM SCENE STRATEGY (10-14 objects):
- Use 1-2 containers/supports as ANCHORS
- Put 2-4 objects IN containers (place-in)
- Stack 1-2 items ON supports (place-on)
- Cluster 2-3 objects near anchors (cluster-around)
- VARY yaw angles - no grid alignment!)PROMPT";

constexpr const char* kDenseStrategy =
    R"PROMPT(DENSE SCENE STRATEGY (15+ objects):
- Use 2-3 containers/supports as ANCHORS
- Fill containers with 3-5 objects each (place-in)
- Stack items on every support (place-on)
- Cluster remaining objects tightly near anchors
- Prefer SMALL objects to avoid collisions)PROMPT";

constexpr const char* kFeedbackTail =
    R"PROMPT(Please fix the issues. Common fixes:
- Use MORE containment (place-in) to reduce table crowding
- Use MORE stacking (place-on) to utilize vertical space
- Use clustering (cluster-around) instead of individual placements
- Select SMALLER objects if collisions persist)PROMPT";

constexpr const char* kTaskSystem =
    R"PROMPT(You are a robot task designer writing evaluation tasks for tabletop manipulation scenes.

A task is a JSON object with this exact shape:
{
  "instruction": "<one imperative sentence for the robot>",
  "scene_id": "<the given scene id>",
  "axis": "<the given competency axis>",
  "subcategory": "<the given subcategory>",
  "difficulty": "<the given difficulty>",
  "subtasks": [
    {
      "label": "<short name>",
      "steps": [
        {"predicate": "lifted", "subjects": ["apple_01"]},
        {"predicate": "inside", "subjects": ["apple_01"], "reference": "bowl_0"}
      ]
    }
  ]
}

RULES:
1. Reference ONLY objects listed in the scene. Never invent object names.
2. Each subtask is an ordered step list: earlier steps must happen first (grasp before place).
3. A contained object must fit inside its container with at least 1cm of clearance.
4. Do not duplicate any previously generated instruction.
5. Return ONLY valid JSON, no markdown.)PROMPT";

constexpr const char* kPredicateGuide =
    R"PROMPT(PREDICATE LIBRARY (use only these):
- inside(subjects, reference): each subject rests fully inside the reference container
- on_top_of(subjects, reference): each subject rests on the reference top face
- near(subjects, reference, threshold): each subject center within threshold meters of the reference
- lifted(subjects): each subject is held or raised at least 5cm above its rest height
- upright(subjects): each subject is within 15 degrees of vertical
- left_of(subjects, reference): each subject is on the +Y side of the reference
- right_of(subjects, reference): each subject is on the -Y side of the reference
- in_front_of(subjects, reference): each subject is on the +X side of the reference
- behind(subjects, reference): each subject is on the -X side of the reference
- count_in(subjects, reference, threshold): at least threshold of the subjects are inside the reference

TASK EXAMPLES:
- "Put the apple in the bowl": one subtask, steps lifted(["apple_01"]) then inside(["apple_01"], "bowl_0")
- "Move the mug to the left of the plate": lifted(["mug"]) then left_of(["mug"], "plate_large")
- "Collect both fruits in the bin": lifted then count_in(["apple_01", "orange_01"], "bin_0", 2))PROMPT";

constexpr const char* kJudgeSystem =
    R"PROMPT(You are a strict reviewer of robot manipulation tasks. Score how well a task's termination conditions match its natural-language instruction.

Score six dimensions, each in [0,1]:
- relation: spatial and containment relations in the instruction match the conditions
- target: target locations and references match the instruction
- object: the objects being manipulated match the instruction
- quantifier: counts and plurals match the instruction
- clarity: the instruction is unambiguous on its own
- feasibility: the conditions describe a physically achievable end state

Return ONLY JSON, no markdown:
{"relation": 1.0, "target": 1.0, "object": 1.0, "quantifier": 1.0, "clarity": 1.0, "feasibility": 1.0, "verdict": "aligned"}

verdict must be "aligned" when everything matches, "partial" for minor mismatches, "misaligned" for contradictions.)PROMPT";

std::string dims_str(const geometry::Vec3& dims) {
  return detail::fmt_g6(dims.x()) + "x" + detail::fmt_g6(dims.y()) + "x" +
         detail::fmt_g6(dims.z()) + "m";
}

std::string bucket_list(const scene_model::Catalog& catalog,
                        scene_model::Category category) {
  std::string out;
  for (const auto& entry : catalog.entries()) {
    if (entry.category != category) continue;
    if (!out.empty()) out += ", ";
    out += entry.name + " (" + dims_str(entry.dims) + ")";
  }
  return out.empty() ? "none" : out;
}

std::string axis_guidance(const std::string& axis) {
  if (axis == "visual") {
    return "Focus on visual properties: colors, appearance, and telling "
           "look-alike objects apart.";
  }
  if (axis == "procedural") {
    return "Focus on multi-step procedures: ordered actions with "
           "intermediate goals.";
  }
  if (axis == "relational") {
    return "Focus on spatial relations between objects: left/right, "
           "front/behind, containment, and proximity.";
  }
  throw std::invalid_argument("unknown competency axis \"" + axis + "\"");
}

std::string difficulty_guidance(const std::string& difficulty) {
  if (difficulty == "simple") {
    return "Use exactly 1 subtask with 1-2 steps.";
  }
  if (difficulty == "moderate") {
    return "Use 1-2 subtasks with 2-3 steps each.";
  }
  if (difficulty == "complex") {
    return "Use 2-3 subtasks covering at least 4 steps in total.";
  }
  throw std::invalid_argument("unknown difficulty \"" + difficulty + "\"");
}

std::string render_condition(const task_model::TerminationCondition& cond) {
  std::string out = cond.predicate + "([";
  for (std::size_t i = 0; i < cond.subjects.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + cond.subjects[i] + "\"";
  }
  out += "]";
  if (!cond.reference.empty()) out += ", \"" + cond.reference + "\"";
  if (cond.threshold.has_value()) {
    out += ", " + detail::fmt_g6(*cond.threshold);
  }
  out += ")";
  return out;
}

}  // namespace

std::string scene_system_prompt() { return kSceneSystem; }

std::string scene_user_prompt(const std::string& theme,
                              const scene_model::Catalog& catalog,
                              int target_count) {
  if (target_count < 1) {
    throw std::invalid_argument("target_count must be >= 1");
  }
  if (catalog.entries().empty()) {
    throw std::invalid_argument("catalog is empty");
  }

  std::string large;
  for (const auto& entry : catalog.entries()) {
    if (entry.footprint_area() > 0.08) {
      if (!large.empty()) large += ", ";
      large += entry.name;
    }
  }
  if (large.empty()) large = "none";

  const char* strategy = kMediumStrategy;
  if (target_count < 10) strategy = kSparseStrategy;
  if (target_count >= 15) strategy = kDenseStrategy;

  const std::size_t n = catalog.entries().size();
  const std::size_t stride = std::max<std::size_t>(1, n / 5);
  std::string suggested;
  for (std::size_t i = 0, picked = 0; i < n && picked < 5;
       i += stride, ++picked) {
    if (!suggested.empty()) suggested += ", ";
    suggested += catalog.entries()[i].name;
  }

  std::string out;
  out += "SCENE REQUEST: " + theme + "\n";
  out += "TARGET: " + std::to_string(target_count) + " objects\n\n";
  out += "TABLE SIZE: 0.7m x 1.0m = 0.70m^2 (objects must fit with "
         "spacing!)\n\n";
  out += "SIZE LIMITS (max 1-2 large objects, prefer smaller for 8+ "
         "items):\n";
  out += "  Large (>0.08m^2): " + large + "\n";
  out += "  Avoid picking multiple large objects - they won't all fit!\n\n";
  out += "AVAILABLE OBJECTS:\n";
  out += "CONTAINERS (can hold objects inside): " +
         bucket_list(catalog, scene_model::Category::container) + "\n";
  out += "SUPPORTS (can stack objects on): " +
         bucket_list(catalog, scene_model::Category::support) + "\n";
  out += "FOOD: " + bucket_list(catalog, scene_model::Category::food) + "\n";
  out += "TOOLS: " + bucket_list(catalog, scene_model::Category::tool) + "\n";
  out += "OTHER: " + bucket_list(catalog, scene_model::Category::other) +
         "\n\n";
  out += strategy;
  out += "\n\nSUGGESTED for diversity (use only if they fit the theme): " +
         suggested;
  return out;
}

std::string feedback_block(const std::string& feedback) {
  return "PREVIOUS ATTEMPT FAILED:\n" + feedback + "\n\n" + kFeedbackTail;
}

std::string task_system_prompt() { return kTaskSystem; }

std::string task_user_prompt(const scene_model::Scene& scene,
                             const std::string& scene_id,
                             const std::string& axis,
                             const std::string& subcategory,
                             const std::string& difficulty,
                             const std::vector<std::string>& prior_tasks) {
  if (scene.placements.empty()) {
    throw std::invalid_argument("scene is empty");
  }

  std::string out;
  out += "SCENE ID: " + scene_id + "\n";
  out += "SCENE OBJECTS (name, size WxDxH, position):\n";
  for (const auto& p : scene.placements) {
    out += "- " + p.name + ": " + dims_str(p.dims) + " at (" +
           detail::fmt_g6(p.pose.position.x()) + ", " +
           detail::fmt_g6(p.pose.position.y()) + ", " +
           detail::fmt_g6(p.pose.position.z()) + ")\n";
  }
  out += "\nCOMPETENCY AXIS: " + axis + "\n";
  out += axis_guidance(axis) + "\n";
  out += "SUBCATEGORY: " + subcategory + "\n";
  out += "DIFFICULTY: " + difficulty + "\n";
  out += difficulty_guidance(difficulty) + "\n\n";
  out += kPredicateGuide;
  out += "\n\nPREVIOUSLY GENERATED TASKS (do not duplicate):\n";
  if (prior_tasks.empty()) {
    out += "- none\n";
  } else {
    for (const auto& instruction : prior_tasks) {
      out += "- " + instruction + "\n";
    }
  }
  out += "\nWrite ONE new task for scene_id \"" + scene_id +
         "\" as JSON only.";
  return out;
}

std::string task_fix_prompt(const std::string& original_prompt,
                            const std::string& invalid_output,
                            const std::string& error_text) {
  std::string out = "PREVIOUS ATTEMPT FAILED:\n" + error_text + "\n\n";
  out += "YOUR PREVIOUS OUTPUT:\n" + invalid_output + "\n\n";
  out += "ORIGINAL REQUEST:\n" + original_prompt + "\n\n";
  out += "Fix the issues and return ONLY the corrected JSON.";
  return out;
}

std::string judge_system_prompt() { return kJudgeSystem; }

std::string judge_user_prompt(const task_model::TaskSpec& task) {
  std::string out = "INSTRUCTION: " + task.instruction + "\n\n";
  out += "TERMINATION CONDITIONS:\n";
  for (const auto& subtask : task.subtasks) {
    out += "subtask \"" + subtask.label + "\":\n";
    for (std::size_t i = 0; i < subtask.steps.size(); ++i) {
      out += "  " + std::to_string(i + 1) + ". " +
             render_condition(subtask.steps[i]) + "\n";
    }
  }
  out += "\nScore the six dimensions and return ONLY the JSON object.";
  return out;
}

std::vector<std::pair<std::string, std::string>> static_templates() {
  return {
      {"scene_system.v1.txt", scene_system_prompt()},
      {"scene_strategy_sparse.v1.txt", kSparseStrategy},
      {"scene_strategy_medium.v1.txt", kMediumStrategy},
      {"scene_strategy_dense.v1.txt", kDenseStrategy},
      {"feedback_tail.v1.txt", kFeedbackTail},
      {"task_system.v1.txt", task_system_prompt()},
      {"task_predicates.v1.txt", kPredicateGuide},
      {"judge_system.v1.txt", judge_system_prompt()},
  };
}

}  // namespace scenebench::genpipe::prompts
