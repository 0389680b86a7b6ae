#include "scenebench/trajectory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>
#include <json.hpp>

#include "scenebench/detail/jsonfmt.hpp"
#include "scenebench/detail/jsonio.hpp"

namespace scenebench::trajectory_metrics {

namespace {

std::mutex fftw_plan_mutex;

void check_trajectory(const Trajectory& traj) {
  if (traj.samples.size() < 2) {
    throw std::invalid_argument("trajectory needs at least 2 samples");
  }
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    if (traj.samples[i].t <= traj.samples[i - 1].t) {
      throw std::invalid_argument(
          "trajectory timestamps must be strictly increasing");
    }
  }
}

// Mean and population standard deviation with ascending summation so the
// result is independent of episode order.
std::pair<double, double> mean_and_std(std::vector<double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  std::sort(xs.begin(), xs.end());
  const double sum = std::accumulate(xs.begin(), xs.end(), 0.0);
  const double mean = sum / xs.size();
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    sq[i] = d * d;
  }
  std::sort(sq.begin(), sq.end());
  const double var = std::accumulate(sq.begin(), sq.end(), 0.0) / xs.size();
  return {mean, std::sqrt(var)};
}

}  // namespace

std::vector<double> speed_profile(const Trajectory& traj) {
  check_trajectory(traj);
  const auto& s = traj.samples;
  const std::size_t n = s.size();
  std::vector<double> v(n);
  v[0] = (s[1].end_effector.position - s[0].end_effector.position).norm() /
         (s[1].t - s[0].t);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    v[i] = (s[i + 1].end_effector.position - s[i - 1].end_effector.position)
               .norm() /
           (s[i + 1].t - s[i - 1].t);
  }
  v[n - 1] =
      (s[n - 1].end_effector.position - s[n - 2].end_effector.position)
          .norm() /
      (s[n - 1].t - s[n - 2].t);
  return v;
}

std::vector<double> uniform_speed(const Trajectory& traj, double& dt_out) {
  const std::vector<double> v = speed_profile(traj);
  const auto& s = traj.samples;
  const std::size_t n = s.size();

  std::vector<double> diffs(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) diffs[i] = s[i + 1].t - s[i].t;
  std::sort(diffs.begin(), diffs.end());
  const double dt = (diffs.size() % 2 == 1)
                        ? diffs[diffs.size() / 2]
                        : 0.5 * (diffs[diffs.size() / 2 - 1] +
                                 diffs[diffs.size() / 2]);
  dt_out = dt;

  const double t0 = s.front().t;
  const double t_end = s.back().t;
  const std::size_t count =
      static_cast<std::size_t>(std::floor((t_end - t0) / dt + 1e-9)) + 1;

  std::vector<double> out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + k * dt;
    while (seg + 2 < n && s[seg + 1].t < t) ++seg;
    const double span = s[seg + 1].t - s[seg].t;
    const double w = std::clamp((t - s[seg].t) / span, 0.0, 1.0);
    out.push_back((1.0 - w) * v[seg] + w * v[seg + 1]);
  }
  return out;
}

double sparc(const std::vector<double>& speed, double dt, double cutoff_max,
             double alpha, int pad_factor) {
  if (speed.empty()) throw std::invalid_argument("empty speed profile");
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (pad_factor < 1) throw std::invalid_argument("pad_factor must be >= 1");
  double total = 0.0;
  for (double v : speed) {
    if (v < 0.0) throw std::invalid_argument("speed must be non-negative");
    total += v;
  }
  if (total == 0.0) {
    throw std::invalid_argument("all-zero speed profile has no spectrum");
  }

  std::size_t m = 1;
  while (m < speed.size() * static_cast<std::size_t>(pad_factor)) m <<= 1;

  std::vector<double> in(m, 0.0);
  std::copy(speed.begin(), speed.end(), in.begin());
  std::vector<std::complex<double>> out(m / 2 + 1);

  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_r2c_1d(
        static_cast<int>(m), in.data(),
        reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  const std::size_t bins = m / 2;
  const double df = 1.0 / (static_cast<double>(m) * dt);
  std::vector<double> mag(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) mag[k] = std::abs(out[k]);
  const double v0 = mag[0];
  for (std::size_t k = 0; k <= bins; ++k) mag[k] /= v0;

  double omega_alpha = 0.0;
  for (std::size_t k = bins + 1; k-- > 0;) {
    if (mag[k] >= alpha) {
      omega_alpha = k * df;
      break;
    }
  }
  const double omega_c = std::min(cutoff_max, omega_alpha);
  if (omega_c <= 0.0) return 0.0;

  double arc = 0.0;
  for (std::size_t k = 1; k <= bins && k * df <= omega_c + 1e-12; ++k) {
    const double dfreq = df / omega_c;
    const double dmag = mag[k] - mag[k - 1];
    arc += std::sqrt(dfreq * dfreq + dmag * dmag);
  }
  return -arc;
}

double path_length(const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    total += (traj.samples[i].end_effector.position -
              traj.samples[i - 1].end_effector.position)
                 .norm();
  }
  return total;
}

FailureCounts failure_counts(const std::vector<EpisodeRecord>& episodes) {
  FailureCounts counts;
  for (const auto& kind : event_kinds()) counts.by_kind[kind] = 0;
  for (const auto& episode : episodes) {
    for (const auto& event : episode.events) {
      auto it = counts.by_kind.find(event.kind);
      if (it == counts.by_kind.end()) {
        throw std::invalid_argument("unknown event kind \"" + event.kind +
                                    "\"");
      }
      ++it->second;
      ++counts.total;
      if (event.kind == "wrong_object_grasped") {
        ++counts.wrong_objects[event.object];
      }
    }
  }
  return counts;
}

MetricsSummary aggregate(const std::vector<EpisodeRecord>& episodes,
                         const task_model::TaskSet& tasks) {
  if (episodes.empty()) {
    throw std::invalid_argument("cannot aggregate zero episodes");
  }

  int successes = 0;
  std::vector<double> graded;
  std::vector<double> sparcs;
  std::vector<double> speeds_cm_s;
  std::vector<double> paths;

  for (const auto& episode : episodes) {
    auto tit = tasks.tasks.find(episode.task_id);
    if (tit == tasks.tasks.end()) {
      throw std::invalid_argument("unknown task id \"" + episode.task_id +
                                  "\"");
    }
    const task_model::TaskSpec& task = tit->second;
    if (episode.outcome) ++successes;

    if (episode.final_state.has_value()) {
      const scene_model::Scene& scene = tasks.scenes.at(task.scene_id);
      const task_model::EvalContext ctx = task_model::make_context(scene);
      graded.push_back(
          task_model::graded_score(task, *episode.final_state, ctx));
    }

    const std::vector<double> v = speed_profile(episode.trajectory);
    std::vector<double> v_sorted = v;
    std::sort(v_sorted.begin(), v_sorted.end());
    const double v_mean =
        std::accumulate(v_sorted.begin(), v_sorted.end(), 0.0) / v.size();
    speeds_cm_s.push_back(v_mean * 100.0);

    double dt = 0.0;
    const std::vector<double> vu = uniform_speed(episode.trajectory, dt);
    sparcs.push_back(sparc(vu, dt));

    paths.push_back(path_length(episode.trajectory));
  }

  MetricsSummary summary;
  summary.episodes = static_cast<int>(episodes.size());
  summary.success_rate = 100.0 * successes / episodes.size();
  if (!graded.empty()) {
    summary.graded_mean = mean_and_std(graded).first;
  }
  std::tie(summary.sparc_mean, summary.sparc_std) = mean_and_std(sparcs);
  std::tie(summary.speed_mean_cm_s, summary.speed_std_cm_s) =
      mean_and_std(speeds_cm_s);
  std::tie(summary.path_mean_m, summary.path_std_m) = mean_and_std(paths);
  summary.failures = failure_counts(episodes);
  return summary;
}

namespace {

geometry::Pose parse_pose(const nlohmann::json& j, const std::string& path) {
  const auto& pos = detail::expect_array(
      detail::expect_key(j, "position", path), path + ".position");
  const auto& ori = detail::expect_array(
      detail::expect_key(j, "orientation", path), path + ".orientation");
  if (pos.size() != 3) {
    throw scene_model::SchemaError(path + ".position must have 3 entries");
  }
  if (ori.size() != 4) {
    throw scene_model::SchemaError(path + ".orientation must have 4 entries");
  }
  geometry::Vec3 p(detail::expect_number(pos[0], path + ".position[0]"),
                   detail::expect_number(pos[1], path + ".position[1]"),
                   detail::expect_number(pos[2], path + ".position[2]"));
  geometry::Quat q(detail::expect_number(ori[0], path + ".orientation[0]"),
                   detail::expect_number(ori[1], path + ".orientation[1]"),
                   detail::expect_number(ori[2], path + ".orientation[2]"),
                   detail::expect_number(ori[3], path + ".orientation[3]"));
  return geometry::Pose(p, q);
}

std::string fmt_vec3(const geometry::Vec3& v) {
  return "[" + detail::fmt_g6(v.x()) + ", " + detail::fmt_g6(v.y()) + ", " +
         detail::fmt_g6(v.z()) + "]";
}

std::string fmt_quat(const geometry::Quat& q) {
  return "[" + detail::fmt_g6(q.w()) + ", " + detail::fmt_g6(q.x()) + ", " +
         detail::fmt_g6(q.y()) + ", " + detail::fmt_g6(q.z()) + "]";
}

}  // namespace

EpisodeRecord parse_episode(const std::string& line) {
  const nlohmann::json doc = detail::parse_json_text(line);
  detail::expect_object(doc, "episode");
  static const std::vector<std::string> known = {
      "task_id", "outcome", "theta", "trajectory", "events", "final_state"};
  detail::forbid_unknown_keys(doc, known, "episode");

  EpisodeRecord episode;
  episode.task_id = detail::expect_string(
      detail::expect_key(doc, "task_id", "episode"), "episode.task_id");

  const auto& outcome = detail::expect_key(doc, "outcome", "episode");
  if (outcome.is_boolean()) {
    episode.outcome = outcome.get<bool>();
  } else {
    const double x = detail::expect_number(outcome, "episode.outcome");
    if (x != 0.0 && x != 1.0) {
      throw scene_model::SchemaError("episode.outcome must be 0 or 1");
    }
    episode.outcome = x == 1.0;
  }

  const auto& theta = detail::expect_object(
      detail::expect_key(doc, "theta", "episode"), "episode.theta");
  for (auto it = theta.begin(); it != theta.end(); ++it) {
    episode.theta[it.key()] =
        detail::expect_number(*it, "episode.theta." + it.key());
  }

  const auto& traj = detail::expect_array(
      detail::expect_key(doc, "trajectory", "episode"), "episode.trajectory");
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const std::string path = "episode.trajectory[" + std::to_string(i) + "]";
    detail::expect_object(traj[i], path);
    static const std::vector<std::string> sk = {"t", "position", "orientation",
                                                "gripper"};
    detail::forbid_unknown_keys(traj[i], sk, path);
    TrajectorySample sample;
    sample.t = detail::expect_number(detail::expect_key(traj[i], "t", path),
                                     path + ".t");
    sample.end_effector = parse_pose(traj[i], path);
    sample.gripper = detail::expect_number(
        detail::expect_key(traj[i], "gripper", path), path + ".gripper");
    episode.trajectory.samples.push_back(sample);
  }
  check_trajectory(episode.trajectory);
  const double t0 = episode.trajectory.samples.front().t;
  const double t1 = episode.trajectory.samples.back().t;

  const auto& events = detail::expect_array(
      detail::expect_key(doc, "events", "episode"), "episode.events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::string path = "episode.events[" + std::to_string(i) + "]";
    detail::expect_object(events[i], path);
    static const std::vector<std::string> ek = {"t", "kind", "object"};
    detail::forbid_unknown_keys(events[i], ek, path);
    Event event;
    event.t = detail::expect_number(detail::expect_key(events[i], "t", path),
                                    path + ".t");
    event.kind = detail::expect_string(
        detail::expect_key(events[i], "kind", path), path + ".kind");
    event.object = detail::expect_string(
        detail::expect_key(events[i], "object", path), path + ".object");
    const auto& kinds = event_kinds();
    if (std::find(kinds.begin(), kinds.end(), event.kind) == kinds.end()) {
      throw scene_model::SchemaError(path + ".kind \"" + event.kind +
                                     "\" is not a known event kind");
    }
    if (event.t < t0 - 1e-9 || event.t > t1 + 1e-9) {
      throw scene_model::SchemaError(path +
                                     ".t is outside the trajectory span");
    }
    episode.events.push_back(event);
  }

  if (doc.contains("final_state")) {
    const auto& fs = detail::expect_object(doc["final_state"],
                                           "episode.final_state");
    static const std::vector<std::string> fk = {"held", "gripper", "poses"};
    detail::forbid_unknown_keys(fs, fk, "episode.final_state");
    task_model::SceneState state;
    state.held = detail::expect_string(
        detail::expect_key(fs, "held", "episode.final_state"),
        "episode.final_state.held");
    state.gripper = detail::expect_number(
        detail::expect_key(fs, "gripper", "episode.final_state"),
        "episode.final_state.gripper");
    const auto& poses = detail::expect_object(
        detail::expect_key(fs, "poses", "episode.final_state"),
        "episode.final_state.poses");
    for (auto it = poses.begin(); it != poses.end(); ++it) {
      const std::string path = "episode.final_state.poses." + it.key();
      detail::expect_object(*it, path);
      static const std::vector<std::string> pk = {"position", "orientation"};
      detail::forbid_unknown_keys(*it, pk, path);
      state.poses.emplace(it.key(), parse_pose(*it, path));
    }
    episode.final_state = std::move(state);
  }
  return episode;
}

std::vector<EpisodeRecord> parse_episode_log(const std::string& text) {
  std::vector<EpisodeRecord> episodes;
  std::istringstream stream(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(stream, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      episodes.push_back(parse_episode(line));
    } catch (const std::exception& e) {
      throw scene_model::ParseError("episode log line " +
                                    std::to_string(lineno) + ": " + e.what());
    }
  }
  return episodes;
}

std::string serialize_episode(const EpisodeRecord& episode) {
  std::string out = "{\"task_id\": \"" + detail::json_escape(episode.task_id) +
                    "\", \"outcome\": " + (episode.outcome ? "1" : "0") +
                    ", \"theta\": {";
  bool first = true;
  for (const auto& [name, value] : episode.theta) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + detail::json_escape(name) + "\": " + detail::fmt_g6(value);
  }
  out += "}, \"trajectory\": [";
  for (std::size_t i = 0; i < episode.trajectory.samples.size(); ++i) {
    const auto& s = episode.trajectory.samples[i];
    if (i) out += ", ";
    out += "{\"t\": " + detail::fmt_g6(s.t) +
           ", \"position\": " + fmt_vec3(s.end_effector.position) +
           ", \"orientation\": " + fmt_quat(s.end_effector.orientation) +
           ", \"gripper\": " + detail::fmt_g6(s.gripper) + "}";
  }
  out += "], \"events\": [";
  for (std::size_t i = 0; i < episode.events.size(); ++i) {
    const auto& e = episode.events[i];
    if (i) out += ", ";
    out += "{\"t\": " + detail::fmt_g6(e.t) + ", \"kind\": \"" +
           detail::json_escape(e.kind) + "\", \"object\": \"" +
           detail::json_escape(e.object) + "\"}";
  }
  out += "]";
  if (episode.final_state.has_value()) {
    const auto& fs = *episode.final_state;
    out += ", \"final_state\": {\"held\": \"" + detail::json_escape(fs.held) +
           "\", \"gripper\": " + detail::fmt_g6(fs.gripper) + ", \"poses\": {";
    first = true;
    for (const auto& [name, pose] : fs.poses) {
      if (!first) out += ", ";
      first = false;
      out += "\"" + detail::json_escape(name) +
             "\": {\"position\": " + fmt_vec3(pose.position) +
             ", \"orientation\": " + fmt_quat(pose.orientation) + "}";
    }
    out += "}}";
  }
  out += "}";
  return out;
}

std::string serialize_summary(const MetricsSummary& summary) {
  std::string out = "{\n";
  out += "  \"episodes\": " + std::to_string(summary.episodes) + ",\n";
  out += "  \"success_rate\": " + detail::fmt_g6(summary.success_rate) + ",\n";
  out += "  \"graded_mean\": " +
         (summary.graded_mean.has_value() ? detail::fmt_g6(*summary.graded_mean)
                                          : std::string("null")) +
         ",\n";
  out += "  \"sparc_mean\": " + detail::fmt_g6(summary.sparc_mean) + ",\n";
  out += "  \"sparc_std\": " + detail::fmt_g6(summary.sparc_std) + ",\n";
  out += "  \"speed_mean_cm_s\": " + detail::fmt_g6(summary.speed_mean_cm_s) +
         ",\n";
  out += "  \"speed_std_cm_s\": " + detail::fmt_g6(summary.speed_std_cm_s) +
         ",\n";
  out += "  \"path_mean_m\": " + detail::fmt_g6(summary.path_mean_m) + ",\n";
  out += "  \"path_std_m\": " + detail::fmt_g6(summary.path_std_m) + ",\n";
  out += "  \"events\": {";
  bool first = true;
  for (const auto& [kind, count] : summary.failures.by_kind) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + detail::json_escape(kind) + "\": " + std::to_string(count);
  }
  out += "},\n  \"wrong_objects\": {";
  first = true;
  for (const auto& [name, count] : summary.failures.wrong_objects) {
    if (!first) out += ", ";
    first = false;
    out += "\"" + detail::json_escape(name) + "\": " + std::to_string(count);
  }
  out += "}\n}\n";
  return out;
}

std::string format_summary_table(const MetricsSummary& summary) {
  char row[256];
  std::string out =
      "Success %  Graded  SPARC            Speed (cm/s)     Path (m)\n";
  const std::string graded =
      summary.graded_mean.has_value()
          ? detail::fmt_fixed(*summary.graded_mean, 2)
          : std::string("n/a");
  std::snprintf(row, sizeof(row),
                "%-9.1f  %-6s  %6.2f ± %-6.2f  %6.2f ± %-6.2f  %.2f\n",
                summary.success_rate, graded.c_str(), summary.sparc_mean,
                summary.sparc_std, summary.speed_mean_cm_s,
                summary.speed_std_cm_s, summary.path_mean_m);
  out += row;
  out += "Events:";
  for (const auto& kind : event_kinds()) {
    out += " " + kind + "=" + std::to_string(summary.failures.by_kind.at(kind));
  }
  out += "\n";
  if (!summary.failures.wrong_objects.empty()) {
    out += "Wrong objects:";
    for (const auto& [name, count] : summary.failures.wrong_objects) {
      out += " " + name + "=" + std::to_string(count);
    }
    out += "\n";
  }
  return out;
}

}  // namespace scenebench::trajectory_metrics
