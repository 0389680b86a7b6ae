#include "scenebench/cli.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "scenebench/chat_client.hpp"
#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/genpipe.hpp"
#include "scenebench/placement_solver.hpp"
#include "scenebench/sensitivity.hpp"
#include "scenebench/trajectory_metrics.hpp"

namespace scenebench::cli {

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

// If the document is an object holding `key`, returns that subtree
// re-serialized; otherwise returns the text unchanged. Lets commands read
// both bare payloads and metadata-wrapped artifacts.
std::string unwrap(const std::string& text, const std::string& key) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw scene_model::ParseError(std::string("malformed JSON at byte ") +
                                  std::to_string(e.byte) + ": " + e.what());
  }
  if (doc.is_object() && doc.contains(key)) return doc[key].dump();
  return text;
}

struct MetaField {
  std::string key;
  std::string rendered;  // already JSON-encoded value
};

MetaField meta_str(const std::string& key, const std::string& value) {
  return {key, "\"" + detail::json_escape(value) + "\""};
}

MetaField meta_num(const std::string& key, double value) {
  return {key, detail::fmt_g6(value)};
}

MetaField meta_int(const std::string& key, long long value) {
  return {key, std::to_string(value)};
}

std::string wrap_output(const std::vector<MetaField>& metadata,
                        const std::string& body_key,
                        const std::string& body_block) {
  std::string out = "{\n  \"metadata\": {";
  for (std::size_t i = 0; i < metadata.size(); ++i) {
    out += (i ? ",\n    " : "\n    ");
    out += "\"" + metadata[i].key + "\": " + metadata[i].rendered;
  }
  out += metadata.empty() ? "},\n" : "\n  },\n";
  out += "  \"" + body_key + "\": " + detail::indent_tail(body_block, 2);
  out += "\n}\n";
  return out;
}

std::string report_path_for(const std::string& out_path) {
  const std::filesystem::path p(out_path);
  const std::string ext = p.extension().empty() ? ".json"
                                                : p.extension().string();
  return (p.parent_path() / (p.stem().string() + "_report" + ext)).string();
}

struct CommonArgs {
  std::uint64_t seed = 0;
  std::string catalog;
  std::string out;
  std::string llm_mode = "replay";
  std::string fixtures = "fixtures/llm";
  std::string case_name = "default";
  int attempts = 3;
  double margin = 0.01;
  double threshold = 0.02;
  double x_min = 0.25;
  double x_max = 0.85;
  double y_min = -0.4;
  double y_max = 0.4;
  double z_top = 0.75;
};

geometry::TableBounds bounds_from(const CommonArgs& args) {
  geometry::TableBounds bounds;
  bounds.x_min = args.x_min;
  bounds.x_max = args.x_max;
  bounds.y_min = args.y_min;
  bounds.y_max = args.y_max;
  bounds.z_top = args.z_top;
  return bounds;
}

genpipe::ChatClient make_client(const CommonArgs& args,
                                const std::string& pipeline) {
  genpipe::ChatConfig config = genpipe::config_from_env();
  config.mode = genpipe::chat_mode_from_string(args.llm_mode);
  config.fixture_dir = args.fixtures;
  config.pipeline = pipeline;
  config.case_name = args.case_name;
  return genpipe::ChatClient(std::move(config));
}

void add_table_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--x-min", args.x_min, "Table x lower bound (m)");
  cmd->add_option("--x-max", args.x_max, "Table x upper bound (m)");
  cmd->add_option("--y-min", args.y_min, "Table y lower bound (m)");
  cmd->add_option("--y-max", args.y_max, "Table y upper bound (m)");
  cmd->add_option("--z-top", args.z_top, "Table top height (m)");
}

void add_llm_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--llm-mode", args.llm_mode,
                  "Chat client mode: live, replay, or record")
      ->check(CLI::IsMember({"live", "replay", "record"}));
  cmd->add_option("--fixtures", args.fixtures,
                  "Fixture directory for replay/record transcripts");
  cmd->add_option("--case", args.case_name,
                  "Fixture case name under the pipeline directory");
}

int cmd_gen_scene(const CommonArgs& args, const std::string& theme) {
  const scene_model::Catalog catalog =
      scene_model::parse_catalog(read_file(args.catalog));
  genpipe::ChatClient client = make_client(args, "scene");
  Rng rng(args.seed);

  genpipe::GenReport report;
  int exit_code = 0;
  std::string scene_block;
  try {
    genpipe::SceneGenResult result = genpipe::generate_scene(
        theme, catalog, bounds_from(args), client,
        args.attempts, rng, args.margin, args.threshold);
    report = result.report;
    scene_block = scene_model::serialize_scene(result.scene);
  } catch (const genpipe::GenError& e) {
    report = e.report;
    std::cerr << e.what() << "\n";
    exit_code = 2;
  }

  const std::vector<MetaField> meta = {
      meta_str("command", "gen-scene"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_str("theme", theme),
      meta_str("llm_mode", args.llm_mode),
      meta_int("attempts", report.attempts),
      meta_num("margin", args.margin),
      meta_num("threshold", args.threshold),
  };
  if (exit_code == 0) {
    write_atomic(args.out, wrap_output(meta, "scene", scene_block));
  }
  write_atomic(report_path_for(args.out),
               wrap_output(meta, "report",
                           genpipe::serialize_gen_report(report)));
  return exit_code;
}

int cmd_gen_task(const CommonArgs& args, const std::string& scene_path,
                 const std::string& scene_id, const std::string& axis,
                 const std::string& subcategory, const std::string& difficulty,
                 const std::string& prior_path) {
  const scene_model::Scene scene =
      scene_model::parse_scene(read_file(scene_path));
  std::vector<std::string> prior;
  if (!prior_path.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(prior_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw scene_model::ParseError(std::string("malformed prior tasks: ") +
                                    e.what());
    }
    if (!doc.is_array()) {
      throw scene_model::SchemaError("prior tasks must be a JSON array");
    }
    for (const auto& item : doc) {
      if (!item.is_string()) {
        throw scene_model::SchemaError("prior tasks must be strings");
      }
      prior.push_back(item.get<std::string>());
    }
  }

  genpipe::ChatClient client = make_client(args, "task");
  genpipe::GenReport report;
  int exit_code = 0;
  std::string task_block;
  try {
    genpipe::TaskGenResult result =
        genpipe::generate_task(scene, scene_id, axis, subcategory, difficulty,
                               client, prior, args.attempts);
    report = result.report;
    task_block = task_model::serialize_task_spec(result.task);
  } catch (const genpipe::GenError& e) {
    report = e.report;
    std::cerr << e.what() << "\n";
    exit_code = 2;
  }

  const std::vector<MetaField> meta = {
      meta_str("command", "gen-task"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_str("scene_id", scene_id),
      meta_str("axis", axis),
      meta_str("subcategory", subcategory),
      meta_str("difficulty", difficulty),
      meta_str("llm_mode", args.llm_mode),
      meta_int("attempts", report.attempts),
  };
  if (exit_code == 0) {
    write_atomic(args.out, wrap_output(meta, "task", task_block));
  }
  write_atomic(report_path_for(args.out),
               wrap_output(meta, "report",
                           genpipe::serialize_gen_report(report)));
  return exit_code;
}

int cmd_judge(const CommonArgs& args, const std::string& task_path) {
  const task_model::TaskSpec task =
      task_model::parse_task_spec(unwrap(read_file(task_path), "task"));
  genpipe::ChatClient client = make_client(args, "judge");
  const genpipe::JudgeScores scores = genpipe::judge_task(task, client);

  const std::vector<MetaField> meta = {
      meta_str("command", "judge"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_str("llm_mode", args.llm_mode),
      meta_num("temperature", 0.0),
  };
  write_atomic(args.out, wrap_output(meta, "scores",
                                     genpipe::serialize_judge_scores(scores)));
  return 0;
}

int cmd_metrics(const CommonArgs& args, const std::string& episodes_path,
                const std::string& tasks_path) {
  const std::vector<trajectory_metrics::EpisodeRecord> episodes =
      trajectory_metrics::parse_episode_log(read_file(episodes_path));
  const task_model::TaskSet tasks =
      task_model::parse_task_set(read_file(tasks_path));
  const trajectory_metrics::MetricsSummary summary =
      trajectory_metrics::aggregate(episodes, tasks);

  const std::vector<MetaField> meta = {
      meta_str("command", "metrics"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_str("episodes", episodes_path),
      meta_str("tasks", tasks_path),
  };
  write_atomic(args.out,
               wrap_output(meta, "summary",
                           trajectory_metrics::serialize_summary(summary)));
  std::cout << trajectory_metrics::format_summary_table(summary);
  return 0;
}

sensitivity::Dataset dataset_from_episodes(
    const std::vector<trajectory_metrics::EpisodeRecord>& episodes,
    const sensitivity::VariationSpace& space) {
  sensitivity::Dataset dataset;
  dataset.space = space;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& episode = episodes[i];
    sensitivity::Record record;
    record.outcome = episode.outcome ? 1 : 0;
    for (const auto& dim : space.continuous) {
      auto it = episode.theta.find(dim.name);
      if (it == episode.theta.end()) {
        throw scene_model::SchemaError(
            "episode " + std::to_string(i) + " is missing theta \"" +
            dim.name + "\"");
      }
      record.cont.push_back(it->second);
    }
    for (const auto& dim : space.discrete) {
      auto it = episode.theta.find(dim.name);
      if (it == episode.theta.end()) {
        throw scene_model::SchemaError(
            "episode " + std::to_string(i) + " is missing theta \"" +
            dim.name + "\"");
      }
      const double v = it->second;
      const int idx = static_cast<int>(v);
      if (v != static_cast<double>(idx) || idx < 0 ||
          idx >= static_cast<int>(dim.categories.size())) {
        throw scene_model::SchemaError(
            "episode " + std::to_string(i) + " theta \"" + dim.name +
            "\" is not a valid category index");
      }
      record.disc.push_back(idx);
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

int cmd_sensitivity(const CommonArgs& args, const std::string& episodes_path,
                    const std::string& space_path, int samples, int outcome) {
  const std::vector<trajectory_metrics::EpisodeRecord> episodes =
      trajectory_metrics::parse_episode_log(read_file(episodes_path));
  const sensitivity::VariationSpace space =
      sensitivity::parse_variation_space(read_file(space_path));
  const sensitivity::Dataset dataset = dataset_from_episodes(episodes, space);
  const sensitivity::PosteriorResult result =
      sensitivity::run_sensitivity(dataset, outcome, samples, args.seed);

  const std::vector<MetaField> meta = {
      meta_str("command", "sensitivity"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_int("samples", samples),
      meta_int("outcome", outcome),
  };
  write_atomic(args.out,
               wrap_output(meta, "posterior",
                           sensitivity::serialize_posterior(result)));
  std::cout << sensitivity::format_histograms(result, space);
  return 0;
}

int cmd_baseline(const CommonArgs& args, const std::string& objects_csv,
                 int rows, int cols) {
  const scene_model::Catalog catalog =
      scene_model::parse_catalog(read_file(args.catalog));

  std::vector<std::pair<std::string, geometry::Vec3>> objects;
  std::istringstream stream(objects_csv);
  std::string name;
  while (std::getline(stream, name, ',')) {
    if (name.empty()) continue;
    const scene_model::CatalogEntry* entry = catalog.find(name);
    if (entry == nullptr) {
      throw scene_model::SchemaError("object \"" + name +
                                     "\" is not in the catalog");
    }
    objects.emplace_back(name, entry->dims);
  }
  if (objects.empty()) {
    throw scene_model::SchemaError("baseline needs at least one object");
  }

  Rng rng(args.seed);
  const scene_model::Scene scene = placement_solver::baseline_grid_layout(
      objects, rows, cols, bounds_from(args), rng);

  const std::vector<MetaField> meta = {
      meta_str("command", "baseline"),
      meta_int("seed", static_cast<long long>(args.seed)),
      meta_int("rows", rows),
      meta_int("cols", cols),
  };
  write_atomic(args.out, wrap_output(meta, "scene",
                                     scene_model::serialize_scene(scene)));
  return 0;
}

int cmd_batch(const std::string& manifest_path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw scene_model::ParseError(std::string("malformed manifest: ") +
                                  e.what());
  }
  if (!doc.is_array()) {
    throw scene_model::SchemaError("manifest must be a JSON array of runs");
  }
  std::vector<std::vector<std::string>> runs;
  for (const auto& run : doc) {
    if (!run.is_array() || run.empty()) {
      throw scene_model::SchemaError("each run must be a non-empty array");
    }
    std::vector<std::string> argv;
    for (const auto& arg : run) {
      if (!arg.is_string()) {
        throw scene_model::SchemaError("run arguments must be strings");
      }
      argv.push_back(arg.get<std::string>());
    }
    if (argv.front() == "batch") {
      throw scene_model::SchemaError("batch runs cannot nest");
    }
    runs.push_back(std::move(argv));
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  const std::size_t worker_count = std::min<std::size_t>(4, runs.size());
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < worker_count; ++w) {
    workers.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= runs.size()) return;
        const int code = run_cli(runs[i]);
        int seen = worst.load();
        while (code > seen && !worst.compare_exchange_weak(seen, code)) {
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  return worst.load();
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("scenebench");
  for (const auto& arg : args) argv.push_back(arg.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Procedural tabletop scene and task benchmark toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string theme = "tabletop scene";
  std::string scene_path;
  std::string scene_id = "scene_0";
  std::string axis = "relational";
  std::string subcategory = "conjunction";
  std::string difficulty = "simple";
  std::string prior_path;
  std::string task_path;
  std::string episodes_path;
  std::string tasks_path;
  std::string space_path;
  std::string objects_csv;
  std::string manifest_path;
  int samples = 5000;
  int outcome = 1;
  int rows = 0;
  int cols = 0;

  auto* gen_scene = app.add_subcommand("gen-scene",
                                       "Generate a scene from a theme");
  gen_scene->add_option("--seed", args.seed, "Deterministic run seed")
      ->required();
  gen_scene->add_option("--catalog", args.catalog, "Object catalog JSON")
      ->required();
  gen_scene->add_option("--out", args.out, "Output scene JSON path")
      ->required();
  gen_scene->add_option("--theme", theme, "Scene theme request");
  gen_scene->add_option("--attempts", args.attempts,
                        "Maximum generate-validate-refine attempts");
  gen_scene->add_option("--margin", args.margin,
                        "Base collision margin (m)");
  gen_scene->add_option("--threshold", args.threshold,
                        "Stability displacement threshold (m)");
  add_llm_flags(gen_scene, args);
  add_table_flags(gen_scene, args);

  auto* gen_task = app.add_subcommand("gen-task",
                                      "Generate a task for a scene");
  gen_task->add_option("--seed", args.seed, "Deterministic run seed")
      ->required();
  gen_task->add_option("--scene", scene_path, "Scene JSON input")->required();
  gen_task->add_option("--out", args.out, "Output task JSON path")
      ->required();
  gen_task->add_option("--scene-id", scene_id, "Scene identifier");
  gen_task->add_option("--axis", axis,
                       "Competency axis: visual, procedural, or relational")
      ->check(CLI::IsMember({"visual", "procedural", "relational"}));
  gen_task->add_option("--subcategory", subcategory, "Axis subcategory");
  gen_task->add_option("--difficulty", difficulty,
                       "Difficulty: simple, moderate, or complex")
      ->check(CLI::IsMember({"simple", "moderate", "complex"}));
  gen_task->add_option("--prior", prior_path,
                       "JSON array of prior task instructions");
  gen_task->add_option("--attempts", args.attempts,
                       "Maximum generate-validate-refine attempts");
  add_llm_flags(gen_task, args);

  auto* judge = app.add_subcommand("judge", "Judge a task specification");
  judge->add_option("--seed", args.seed, "Deterministic run seed")
      ->required();
  judge->add_option("--task", task_path, "Task JSON input")->required();
  judge->add_option("--out", args.out, "Output scores JSON path")->required();
  add_llm_flags(judge, args);

  auto* metrics = app.add_subcommand("metrics",
                                     "Aggregate episode logs into a summary");
  metrics->add_option("--seed", args.seed, "Deterministic run seed")
      ->required();
  metrics->add_option("--episodes", episodes_path, "Episode JSONL input")
      ->required();
  metrics->add_option("--tasks", tasks_path, "Task set JSON input")
      ->required();
  metrics->add_option("--out", args.out, "Output summary JSON path")
      ->required();

  auto* sens = app.add_subcommand("sensitivity",
                                  "Fit a variation posterior from episodes");
  sens->add_option("--seed", args.seed, "Deterministic run seed")->required();
  sens->add_option("--episodes", episodes_path, "Episode JSONL input")
      ->required();
  sens->add_option("--space", space_path, "Variation space JSON input")
      ->required();
  sens->add_option("--out", args.out, "Output posterior JSON path")
      ->required();
  sens->add_option("--samples", samples, "Posterior sample count");
  sens->add_option("--outcome", outcome, "Outcome to condition on (0 or 1)")
      ->check(CLI::IsMember({0, 1}));

  auto* baseline = app.add_subcommand(
      "baseline", "Jittered-grid baseline scene layout");
  baseline->add_option("--seed", args.seed, "Deterministic run seed")
      ->required();
  baseline->add_option("--catalog", args.catalog, "Object catalog JSON")
      ->required();
  baseline->add_option("--objects", objects_csv,
                       "Comma-separated catalog object names")
      ->required();
  baseline->add_option("--rows", rows, "Grid rows")->required();
  baseline->add_option("--cols", cols, "Grid columns")->required();
  baseline->add_option("--out", args.out, "Output scene JSON path")
      ->required();
  add_table_flags(baseline, args);

  auto* batch = app.add_subcommand("batch",
                                   "Run a manifest of commands in parallel");
  batch->add_option("--manifest", manifest_path,
                    "JSON array of argument arrays")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen_scene->parsed()) return cmd_gen_scene(args, theme);
    if (gen_task->parsed()) {
      return cmd_gen_task(args, scene_path, scene_id, axis, subcategory,
                          difficulty, prior_path);
    }
    if (judge->parsed()) return cmd_judge(args, task_path);
    if (metrics->parsed()) return cmd_metrics(args, episodes_path, tasks_path);
    if (sens->parsed()) {
      return cmd_sensitivity(args, episodes_path, space_path, samples,
                             outcome);
    }
    if (baseline->parsed()) return cmd_baseline(args, objects_csv, rows, cols);
    if (batch->parsed()) return cmd_batch(manifest_path);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const scene_model::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const scene_model::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const genpipe::GenError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace scenebench::cli
