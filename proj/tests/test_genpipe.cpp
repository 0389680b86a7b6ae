#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "scenebench/genpipe.hpp"
#include "scenebench/prompts.hpp"

namespace gp = scenebench::genpipe;
namespace pr = scenebench::genpipe::prompts;
namespace sm = scenebench::scene_model;
namespace tk = scenebench::task_model;
namespace geo = scenebench::geometry;
namespace fs = std::filesystem;
using scenebench::Rng;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const sm::Catalog& catalog() {
  static const sm::Catalog c =
      sm::parse_catalog(read_file(SCENEBENCH_FIXTURE_DIR "/catalog.json"));
  return c;
}

geo::TableBounds bounds() {
  geo::TableBounds b;
  b.x_min = 0.25;
  b.x_max = 0.85;
  b.y_min = -0.4;
  b.y_max = 0.4;
  b.z_top = 0.75;
  return b;
}

const sm::Scene& golden_scene() {
  static const sm::Scene s = sm::parse_scene(
      read_file(SCENEBENCH_FIXTURE_DIR "/scenes/golden_scene.json"));
  return s;
}

const std::map<std::string, tk::TaskSpec>& sample_tasks() {
  static const std::map<std::string, tk::TaskSpec> tasks =
      tk::parse_task_set(
          read_file(SCENEBENCH_FIXTURE_DIR "/tasks/sample_tasks.json"))
          .tasks;
  return tasks;
}

gp::ChatClient replay_client(const std::string& pipeline,
                             const std::string& case_name) {
  gp::ChatConfig config;
  config.mode = gp::ChatMode::replay;
  config.fixture_dir = SCENEBENCH_FIXTURE_DIR "/llm";
  config.pipeline = pipeline;
  config.case_name = case_name;
  return gp::ChatClient(std::move(config));
}

std::string chat_response(const std::string& content) {
  nlohmann::json message;
  message["role"] = "assistant";
  message["content"] = content;
  nlohmann::json doc;
  doc["choices"] = nlohmann::json::array();
  doc["choices"].push_back({{"message", message}});
  return doc.dump();
}

gp::Transport scripted(std::vector<std::string> contents) {
  auto remaining =
      std::make_shared<std::vector<std::string>>(std::move(contents));
  auto next = std::make_shared<std::size_t>(0);
  return [remaining, next](const std::string&) {
    REQUIRE(*next < remaining->size());
    return chat_response((*remaining)[(*next)++]);
  };
}

std::string prompt_file(const std::string& name) {
  return read_file(fs::path(SCENEBENCH_PROMPT_DIR) / name);
}

}  // namespace

TEST_CASE("sha256_hex matches the published test vectors") {
  CHECK(gp::ChatClient::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(gp::ChatClient::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("canonical_request is a stable sorted-key JSON body") {
  const std::string body = gp::ChatClient::canonical_request(
      "gpt-4o", 0.7, {{"system", "a"}, {"user", "b"}});
  const nlohmann::json doc = nlohmann::json::parse(body);
  CHECK(doc["model"] == "gpt-4o");
  CHECK(doc["temperature"] == 0.7);
  REQUIRE(doc["messages"].size() == 2);
  CHECK(doc["messages"][0]["role"] == "system");
  CHECK(doc["messages"][0]["content"] == "a");
  CHECK(doc["messages"][1]["role"] == "user");
  CHECK(body == doc.dump());
  CHECK(gp::ChatClient::canonical_request(
            "gpt-4o", 0.7, {{"system", "a"}, {"user", "b"}}) == body);
}

TEST_CASE("chat mode names round-trip and reject unknowns") {
  CHECK(gp::chat_mode_from_string("live") == gp::ChatMode::live);
  CHECK(gp::chat_mode_from_string("replay") == gp::ChatMode::replay);
  CHECK(gp::chat_mode_from_string("record") == gp::ChatMode::record);
  CHECK(gp::to_string(gp::ChatMode::record) == "record");
  CHECK_THROWS_AS(gp::chat_mode_from_string("offline"), std::invalid_argument);
}

TEST_CASE("config_from_env overrides endpoint, model, and key") {
  ::setenv("LLM_ENDPOINT", "https://example.test/v1/chat", 1);
  ::setenv("LLM_MODEL", "test-model", 1);
  ::setenv("LLM_API_KEY", "sk-test", 1);
  const gp::ChatConfig config = gp::config_from_env();
  CHECK(config.endpoint == "https://example.test/v1/chat");
  CHECK(config.model == "test-model");
  CHECK(config.api_key == "sk-test");
  ::unsetenv("LLM_ENDPOINT");
  ::unsetenv("LLM_MODEL");
  ::unsetenv("LLM_API_KEY");
  const gp::ChatConfig defaults = gp::config_from_env();
  CHECK(defaults.endpoint == "https://api.openai.com/v1/chat/completions");
  CHECK(defaults.model == "gpt-4o");
  CHECK(defaults.api_key.empty());
}

TEST_CASE("extract_content rejects malformed response bodies") {
  CHECK(gp::ChatClient::extract_content(chat_response("hello")) == "hello");
  CHECK_THROWS_WITH_AS(gp::ChatClient::extract_content("not json"),
                       doctest::Contains("malformed chat response"),
                       gp::ChatError);
  CHECK_THROWS_WITH_AS(gp::ChatClient::extract_content("{\"choices\": []}"),
                       doctest::Contains("no choices"), gp::ChatError);
  CHECK_THROWS_WITH_AS(
      gp::ChatClient::extract_content(
          "{\"choices\": [{\"message\": {\"content\": 3}}]}"),
      doctest::Contains("no message content"), gp::ChatError);
}

TEST_CASE("record mode writes a fixture that replay mode reads back") {
  const fs::path dir =
      fs::temp_directory_path() / "scenebench_genpipe_fixture_test";
  fs::remove_all(dir);

  gp::ChatConfig record_config;
  record_config.mode = gp::ChatMode::record;
  record_config.fixture_dir = dir;
  record_config.pipeline = "unit";
  record_config.case_name = "echo";
  gp::ChatClient recorder(record_config, scripted({"recorded reply"}));
  const std::vector<gp::ChatMessage> messages = {{"system", "s"},
                                                 {"user", "hi"}};
  CHECK(recorder.complete(messages) == "recorded reply");

  const std::string key = gp::ChatClient::sha256_hex(
      gp::ChatClient::canonical_request("gpt-4o", 0.7, messages));
  const fs::path fixture = dir / "unit" / "echo" / (key + ".json");
  REQUIRE(fs::exists(fixture));
  const nlohmann::json doc = nlohmann::json::parse(read_file(fixture));
  CHECK(doc.contains("request"));
  CHECK(doc.contains("response"));

  gp::ChatConfig replay_config = record_config;
  replay_config.mode = gp::ChatMode::replay;
  gp::ChatClient replayer(replay_config);
  CHECK(replayer.complete(messages) == "recorded reply");
  REQUIRE(replayer.transcript().size() == 1);
  CHECK(replayer.transcript()[0].first.find("\"hi\"") != std::string::npos);

  CHECK_THROWS_WITH_AS(replayer.complete({{"user", "unseen"}}),
                       doctest::Contains("missing replay fixture"),
                       gp::ChatError);

  replayer.set_case("unit", "other");
  CHECK_THROWS_AS(replayer.complete(messages), gp::ChatError);
  fs::remove_all(dir);
}

TEST_CASE("temperature override changes the request key") {
  const std::vector<gp::ChatMessage> messages = {{"user", "x"}};
  const std::string a =
      gp::ChatClient::canonical_request("gpt-4o", 0.7, messages);
  const std::string b =
      gp::ChatClient::canonical_request("gpt-4o", 0.0, messages);
  CHECK(a != b);
  CHECK(gp::ChatClient::sha256_hex(a) != gp::ChatClient::sha256_hex(b));
}

TEST_CASE("static templates match the shipped prompt files byte for byte") {
  const auto templates = pr::static_templates();
  REQUIRE(templates.size() == 8);
  for (const auto& [name, text] : templates) {
    CAPTURE(name);
    CHECK(prompt_file(name) == text);
  }
}

TEST_CASE("scene user prompt lists sizes, buckets, and a strategy") {
  const std::string prompt =
      pr::scene_user_prompt("fruit snack table", catalog(), 12);
  CHECK(prompt.find("SCENE REQUEST: fruit snack table") != std::string::npos);
  CHECK(prompt.find("TARGET: 12 objects") != std::string::npos);
  CHECK(prompt.find("TABLE SIZE: 0.7m x 1.0m") != std::string::npos);
  CHECK(prompt.find("Large (>0.08m^2): bin_0, tray") != std::string::npos);
  CHECK(prompt.find("CONTAINERS (can hold objects inside): ") !=
        std::string::npos);
  CHECK(prompt.find("bowl_0") != std::string::npos);
  CHECK(prompt.find("banana") != std::string::npos);
  CHECK(prompt.find("SUGGESTED for diversity (use only if they fit the "
                    "theme): bowl_0, plate_large, orange_01, bread_roll, "
                    "spatula") != std::string::npos);
  CHECK(prompt.find(prompt_file("scene_strategy_medium.v1.txt")) !=
        std::string::npos);

  const std::string sparse = pr::scene_user_prompt("x", catalog(), 6);
  CHECK(sparse.find(prompt_file("scene_strategy_sparse.v1.txt")) !=
        std::string::npos);
  const std::string dense = pr::scene_user_prompt("x", catalog(), 15);
  CHECK(dense.find(prompt_file("scene_strategy_dense.v1.txt")) !=
        std::string::npos);

  CHECK_THROWS_AS(pr::scene_user_prompt("x", catalog(), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(pr::scene_user_prompt("x", sm::Catalog(), 3),
                  std::invalid_argument);
}

TEST_CASE("task user prompt embeds the scene and prior instructions") {
  const std::string prompt = pr::task_user_prompt(
      golden_scene(), "scene_0", "relational", "containment", "simple", {});
  CHECK(prompt.find("SCENE ID: scene_0") != std::string::npos);
  CHECK(prompt.find("- bowl_0: ") != std::string::npos);
  CHECK(prompt.find("COMPETENCY AXIS: relational") != std::string::npos);
  CHECK(prompt.find("SUBCATEGORY: containment") != std::string::npos);
  CHECK(prompt.find("DIFFICULTY: simple") != std::string::npos);
  CHECK(prompt.find(prompt_file("task_predicates.v1.txt")) !=
        std::string::npos);
  CHECK(prompt.find("- none") != std::string::npos);

  const std::string with_priors = pr::task_user_prompt(
      golden_scene(), "scene_0", "visual", "affordance", "moderate",
      {"Lift the banana off the table."});
  CHECK(with_priors.find("- Lift the banana off the table.") !=
        std::string::npos);
  CHECK(with_priors.find("- none") == std::string::npos);

  CHECK_THROWS_AS(pr::task_user_prompt(sm::Scene(), "s", "relational", "c",
                                       "simple", {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pr::task_user_prompt(golden_scene(), "s", "emotional", "c",
                                       "simple", {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(pr::task_user_prompt(golden_scene(), "s", "relational", "c",
                                       "brutal", {}),
                  std::invalid_argument);
}

TEST_CASE("feedback and fix prompts carry the failure context") {
  const std::string block = pr::feedback_block("Objects collide");
  CHECK(block.rfind("PREVIOUS ATTEMPT FAILED:\nObjects collide", 0) == 0);
  CHECK(block.find(prompt_file("feedback_tail.v1.txt")) != std::string::npos);

  const std::string fix =
      pr::task_fix_prompt("the request", "the bad json", "the error");
  CHECK(fix.rfind("PREVIOUS ATTEMPT FAILED:\nthe error", 0) == 0);
  const auto output_at = fix.find("YOUR PREVIOUS OUTPUT:\nthe bad json");
  const auto request_at = fix.find("ORIGINAL REQUEST:\nthe request");
  REQUIRE(output_at != std::string::npos);
  REQUIRE(request_at != std::string::npos);
  CHECK(output_at < request_at);
  CHECK(fix.find("return ONLY the corrected JSON") != std::string::npos);
}

TEST_CASE("judge user prompt renders the termination conditions") {
  const std::string prompt = pr::judge_user_prompt(sample_tasks().at("task_5"));
  CHECK(prompt.find("INSTRUCTION: Gather both fruits in the bowl.") !=
        std::string::npos);
  CHECK(prompt.find("subtask \"fruits in bowl\":") != std::string::npos);
  CHECK(prompt.find(
            "1. count_in([\"apple_01\", \"orange_01\"], \"bowl_0\", 2)") !=
        std::string::npos);

  const std::string lifted = pr::judge_user_prompt(sample_tasks().at("task_2"));
  CHECK(lifted.find("1. lifted([\"banana\"])") != std::string::npos);
}

TEST_CASE("generate_scene replays the golden fixture byte for byte") {
  auto client = replay_client("scene", "valid_first");
  Rng rng(7);
  const auto result = gp::generate_scene("fruit snack table", catalog(),
                                         bounds(), client, 3, rng);
  CHECK(result.report.attempts == 1);
  CHECK(result.report.success);
  CHECK(result.report.feedback.empty());
  CHECK(sm::serialize_scene(result.scene) ==
        read_file(SCENEBENCH_FIXTURE_DIR "/scenes/golden_scene.json"));
  CHECK(sm::serialize_scene_plan(result.plan) ==
        read_file(SCENEBENCH_FIXTURE_DIR "/plans/example_plan.json"));
  CHECK(gp::serialize_gen_report(result.report) ==
        "{\n"
        "  \"attempts\": 1,\n"
        "  \"success\": true,\n"
        "  \"feedback\": [],\n"
        "  \"notes\": []\n"
        "}\n");

  REQUIRE(client.transcript().size() == 1);
  CHECK(client.transcript()[0].first.find("fruit snack table") !=
        std::string::npos);

  auto again = replay_client("scene", "valid_first");
  Rng rng2(7);
  const auto repeat = gp::generate_scene("fruit snack table", catalog(),
                                         bounds(), again, 3, rng2);
  CHECK(sm::serialize_scene(repeat.scene) ==
        sm::serialize_scene(result.scene));
}

TEST_CASE("generate_scene retries with stability feedback in the prompt") {
  auto client = replay_client("scene", "unstable_then_fixed");
  Rng rng(11);
  const auto result = gp::generate_scene("storage corner", catalog(), bounds(),
                                         client, 3, rng);
  CHECK(result.report.attempts == 2);
  CHECK(result.report.success);
  REQUIRE(result.report.feedback.size() == 1);
  CHECK(result.report.feedback[0].find("fell off") != std::string::npos);

  const auto transcript = client.transcript();
  REQUIRE(transcript.size() == 2);
  CHECK(transcript[0].first.find("PREVIOUS ATTEMPT FAILED") ==
        std::string::npos);
  CHECK(transcript[1].first.find("PREVIOUS ATTEMPT FAILED") !=
        std::string::npos);
  CHECK(result.scene.find("bin_0") != nullptr);
  CHECK(result.scene.find("spoon") != nullptr);
}

TEST_CASE("generate_scene throws GenError after exhausting attempts") {
  auto client = replay_client("scene", "exhaust");
  Rng rng(13);
  bool threw = false;
  try {
    gp::generate_scene("impossible crowded banquet", catalog(), bounds(),
                       client, 3, rng);
  } catch (const gp::GenError& e) {
    threw = true;
    CHECK(e.report.attempts == 3);
    CHECK_FALSE(e.report.success);
    REQUIRE(e.report.feedback.size() == 3);
    for (const auto& feedback : e.report.feedback) {
      CHECK(feedback.rfind("Invalid plan JSON:", 0) == 0);
    }
    CHECK(std::string(e.what()).find("after 3 attempts") != std::string::npos);
  }
  CHECK(threw);

  Rng rng2(1);
  CHECK_THROWS_AS(gp::generate_scene("x", catalog(), bounds(), client, 0,
                                     rng2),
                  std::invalid_argument);
}

TEST_CASE("generate_task replays the valid-first fixture") {
  auto client = replay_client("task", "valid_first");
  const auto result = gp::generate_task(golden_scene(), "scene_0",
                                        "relational", "containment", "simple",
                                        client, {}, 3);
  CHECK(result.report.attempts == 1);
  CHECK(result.report.success);
  CHECK(tk::serialize_task_spec(result.task) ==
        tk::serialize_task_spec(sample_tasks().at("task_0")));
}

TEST_CASE("generate_task retries through the fix prompt") {
  auto client = replay_client("task", "retry");
  const auto result = gp::generate_task(golden_scene(), "scene_0",
                                        "relational", "direction", "simple",
                                        client, {}, 3);
  CHECK(result.report.attempts == 2);
  REQUIRE(result.report.feedback.size() == 1);
  CHECK(result.report.feedback[0].find("not a known predicate") !=
        std::string::npos);
  CHECK(tk::serialize_task_spec(result.task) ==
        tk::serialize_task_spec(sample_tasks().at("task_4")));

  const auto transcript = client.transcript();
  REQUIRE(transcript.size() == 2);
  CHECK(transcript[1].first.find("PREVIOUS ATTEMPT FAILED") !=
        std::string::npos);
  CHECK(transcript[1].first.find("YOUR PREVIOUS OUTPUT:") !=
        std::string::npos);
}

TEST_CASE("generate_task rejects duplicate instructions case-insensitively") {
  gp::ChatConfig config;
  config.mode = gp::ChatMode::live;
  gp::ChatClient client(
      config,
      scripted({tk::serialize_task_spec(sample_tasks().at("task_0")),
                tk::serialize_task_spec(sample_tasks().at("task_4"))}));
  const auto result = gp::generate_task(
      golden_scene(), "scene_0", "relational", "containment", "simple",
      client, {"PUT THE SPOON IN THE BOWL."}, 3);
  CHECK(result.report.attempts == 2);
  REQUIRE(result.report.feedback.size() == 1);
  CHECK(result.report.feedback[0].find(
            "duplicates a previously generated task") != std::string::npos);
  CHECK(result.task.instruction ==
        "Slide the spoon to the left of the plate.");
}

TEST_CASE("validate_task flags every violation class") {
  const sm::Scene& scene = golden_scene();
  auto codes = [](const std::vector<sm::Violation>& violations) {
    std::vector<std::string> out;
    for (const auto& v : violations) out.push_back(v.code);
    return out;
  };

  tk::TaskSpec empty_task;
  const auto empty_codes = codes(gp::validate_task(empty_task, scene));
  CHECK(std::count(empty_codes.begin(), empty_codes.end(),
                   "empty_instruction") == 1);
  CHECK(std::count(empty_codes.begin(), empty_codes.end(), "no_subtasks") ==
        1);

  tk::TaskSpec task;
  task.instruction = "Do things.";
  task.subtasks.push_back(tk::Subtask{"hollow", {}});
  {
    const auto got = gp::validate_task(task, scene);
    REQUIRE(got.size() == 1);
    CHECK(got[0].code == "empty_subtask");
    CHECK(got[0].message.find("\"hollow\"") != std::string::npos);
  }

  auto step = [](const std::string& predicate,
                 std::vector<std::string> subjects, std::string reference,
                 std::optional<double> threshold = std::nullopt) {
    tk::TerminationCondition c;
    c.predicate = predicate;
    c.subjects = std::move(subjects);
    c.reference = std::move(reference);
    c.threshold = threshold;
    return c;
  };
  auto single = [&](tk::TerminationCondition c) {
    tk::TaskSpec t;
    t.instruction = "Do things.";
    t.subtasks.push_back(tk::Subtask{"only", {std::move(c)}});
    return t;
  };

  {
    const auto got =
        gp::validate_task(single(step("touching", {"mug"}, "bowl_0")), scene);
    REQUIRE(got.size() == 1);
    CHECK(got[0].code == "unknown_predicate");
  }
  {
    const auto got = gp::validate_task(
        single(step("on_top_of", {"ghost"}, "wraith")), scene);
    REQUIRE(got.size() == 2);
    CHECK(got[0].code == "unknown_object");
    CHECK(got[1].code == "unknown_object");
  }
  {
    const auto got = gp::validate_task(
        single(step("on_top_of", {"mug"}, "plate_large")), scene,
        {"mug", "plate_large"});
    REQUIRE(got.size() == 2);
    CHECK(got[0].code == "forbidden_object");
    CHECK(got[1].code == "forbidden_object");
  }
  {
    const auto got =
        gp::validate_task(single(step("on_top_of", {"mug"}, "")), scene);
    REQUIRE(got.size() == 1);
    CHECK(got[0].code == "missing_reference");
  }
  CHECK(gp::validate_task(single(step("lifted", {"mug"}, "")), scene).empty());
  CHECK(gp::validate_task(single(step("upright", {"mug"}, "")), scene)
            .empty());
  {
    const auto got = gp::validate_task(
        single(step("near", {"mug"}, "bowl_0")), scene);
    REQUIRE(got.size() == 1);
    CHECK(got[0].code == "bad_threshold");
  }
  CHECK(gp::validate_task(single(step("near", {"mug"}, "bowl_0", 0.0)), scene)
            .size() == 1);
  CHECK(gp::validate_task(single(step("near", {"mug"}, "bowl_0", 0.1)), scene)
            .empty());
  {
    const auto non_integer = gp::validate_task(
        single(step("count_in", {"apple_01", "orange_01"}, "bowl_0", 1.5)),
        scene);
    REQUIRE(non_integer.size() == 1);
    CHECK(non_integer[0].code == "bad_threshold");
    CHECK(gp::validate_task(
              single(step("count_in", {"apple_01"}, "bowl_0", 2.0)), scene)
              .size() == 1);
    CHECK(gp::validate_task(
              single(step("count_in", {"apple_01", "orange_01"}, "bowl_0",
                          2.0)),
              scene)
              .empty());
  }
  {
    const auto too_tall =
        gp::validate_task(single(step("inside", {"mug"}, "bowl_0")), scene);
    REQUIRE(too_tall.size() == 1);
    CHECK(too_tall[0].code == "containment_fit");
    const auto too_wide =
        gp::validate_task(single(step("inside", {"banana"}, "mug")), scene);
    REQUIRE(too_wide.size() == 1);
    CHECK(too_wide[0].code == "containment_fit");
    CHECK(gp::validate_task(single(step("inside", {"spoon"}, "bowl_0")),
                            scene)
              .empty());
  }
}

TEST_CASE("judge fixtures reproduce the expected alignment scores") {
  const nlohmann::json expected = nlohmann::json::parse(
      read_file(SCENEBENCH_FIXTURE_DIR "/judge_expected.json"));
  const auto& tasks = sample_tasks();
  REQUIRE(expected["alignments"].size() == tasks.size());

  double sum = 0.0;
  for (const auto& [task_id, task] : tasks) {
    CAPTURE(task_id);
    auto client = replay_client("judge", "default");
    const gp::JudgeScores scores = gp::judge_task(task, client);
    CHECK(scores.alignment ==
          expected["alignments"][task_id].get<double>());
    CHECK(scores.alignment ==
          (scores.relation + scores.target + scores.object +
           scores.quantifier + scores.clarity + scores.feasibility) /
              6.0);
    sum += scores.alignment;
  }
  CHECK(sum / tasks.size() == expected["mean"].get<double>());
  CHECK(sum / tasks.size() == 0.75);
}

TEST_CASE("judge verdicts come through the fixtures") {
  {
    auto client = replay_client("judge", "default");
    CHECK(gp::judge_task(sample_tasks().at("task_0"), client).verdict ==
          "aligned");
  }
  {
    auto client = replay_client("judge", "default");
    CHECK(gp::judge_task(sample_tasks().at("task_4"), client).verdict ==
          "misaligned");
  }
}

TEST_CASE("parse_judge_scores recomputes alignment and rejects bad input") {
  const gp::JudgeScores scores = gp::parse_judge_scores(
      "{\"relation\": 1, \"target\": 0.5, \"object\": 1, \"quantifier\": "
      "0.5, \"clarity\": 1, \"feasibility\": 0.5, \"verdict\": \"partial\"}");
  CHECK(scores.relation == 1.0);
  CHECK(scores.feasibility == 0.5);
  CHECK(scores.alignment == 0.75);
  CHECK(scores.verdict == "partial");

  CHECK_THROWS_WITH_AS(
      gp::parse_judge_scores(
          "{\"relation\": 1, \"target\": 1, \"object\": 1, \"quantifier\": "
          "1, \"clarity\": 1, \"feasibility\": 1, \"verdict\": \"aligned\", "
          "\"alignment\": 1}"),
      doctest::Contains("unknown key"), sm::SchemaError);
  CHECK_THROWS_AS(gp::parse_judge_scores(
                      "{\"relation\": 1, \"target\": 1, \"object\": 1, "
                      "\"quantifier\": 1, \"clarity\": 1, \"verdict\": "
                      "\"aligned\"}"),
                  sm::SchemaError);
  CHECK_THROWS_WITH_AS(
      gp::parse_judge_scores(
          "{\"relation\": 1.5, \"target\": 1, \"object\": 1, \"quantifier\": "
          "1, \"clarity\": 1, \"feasibility\": 1, \"verdict\": \"aligned\"}"),
      doctest::Contains("must be in [0,1]"), sm::SchemaError);
  CHECK_THROWS_WITH_AS(
      gp::parse_judge_scores(
          "{\"relation\": 1, \"target\": 1, \"object\": 1, \"quantifier\": "
          "1, \"clarity\": 1, \"feasibility\": 1, \"verdict\": \"great\"}"),
      doctest::Contains("aligned, partial, or misaligned"), sm::SchemaError);
  CHECK_THROWS_AS(gp::parse_judge_scores("[]"), sm::SchemaError);
  CHECK_THROWS_AS(gp::parse_judge_scores("{"), sm::ParseError);
}

TEST_CASE("serialize_judge_scores documents the equal weighting") {
  gp::JudgeScores scores;
  scores.relation = 1.0;
  scores.target = 0.5;
  scores.object = 1.0;
  scores.quantifier = 0.5;
  scores.clarity = 1.0;
  scores.feasibility = 0.5;
  scores.alignment = 0.75;
  scores.verdict = "partial";
  const std::string text = gp::serialize_judge_scores(scores);
  CHECK(text.find("\"alignment\": 0.75") != std::string::npos);
  CHECK(text.find("\"weights\": \"equal (1/6 per dimension)\"") !=
        std::string::npos);
  CHECK(text.find("\"verdict\": \"partial\"") != std::string::npos);
  const nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc["relation"] == 1.0);
  CHECK(doc["alignment"] == 0.75);
}

TEST_CASE("serialize_gen_report renders feedback and notes arrays") {
  gp::GenReport report;
  report.attempts = 2;
  report.success = true;
  report.feedback = {"a", "b"};
  report.notes = {"dropped from 'bowl_0': pear"};
  CHECK(gp::serialize_gen_report(report) ==
        "{\n"
        "  \"attempts\": 2,\n"
        "  \"success\": true,\n"
        "  \"feedback\": [\n"
        "    \"a\",\n"
        "    \"b\"\n"
        "  ],\n"
        "  \"notes\": [\n"
        "    \"dropped from 'bowl_0': pear\"\n"
        "  ]\n"
        "}\n");
}

TEST_CASE("coverage matches the hand-counted fixtures") {
  std::vector<tk::TaskSpec> tasks;
  for (const auto& [task_id, task] : sample_tasks()) tasks.push_back(task);

  const gp::Coverage cov = gp::coverage(tasks, golden_scene(), catalog());
  CHECK(cov.object_coverage == 0.8);
  CHECK(cov.predicate_coverage == 0.5);

  const gp::Coverage one =
      gp::coverage({sample_tasks().at("task_0")}, golden_scene(), catalog());
  CHECK(one.object_coverage == 0.2);
  CHECK(one.predicate_coverage == 0.1);

  const gp::Coverage narrowed = gp::coverage(
      {sample_tasks().at("task_0")}, golden_scene(), catalog(), {"inside"});
  CHECK(narrowed.predicate_coverage == 1.0);

  CHECK_THROWS_AS(gp::coverage(tasks, sm::Scene(), catalog()),
                  std::invalid_argument);
  sm::Scene structural;
  structural.bounds = bounds();
  structural.add("bowl_0", geo::Pose(geo::Vec3(0.4, 0.0, 0.78),
                                     geo::quat_from_yaw(0.0)),
                 geo::Vec3(0.22, 0.22, 0.06));
  CHECK_THROWS_WITH_AS(gp::coverage(tasks, structural, catalog()),
                       doctest::Contains("no manipulable objects"),
                       std::invalid_argument);
}
