#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scenebench/geometry.hpp"
#include "scenebench/task_model.hpp"

namespace scenebench::trajectory_metrics {

struct TrajectorySample {
  double t = 0.0;
  geometry::Pose end_effector;
  double gripper = 1.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
};

inline const std::vector<std::string>& event_kinds() {
  static const std::vector<std::string> kinds = {
      "wrong_object_grasped", "object_dropped", "gripper_collision"};
  return kinds;
}

struct Event {
  double t = 0.0;
  std::string kind;
  std::string object;
};

struct EpisodeRecord {
  std::string task_id;
  bool outcome = false;
  std::map<std::string, double> theta;
  Trajectory trajectory;
  std::vector<Event> events;
  std::optional<task_model::SceneState> final_state;
};

// Speed at each original sample: central differences in the interior,
// one-sided at the ends. Throws on duplicate timestamps or < 2 samples.
std::vector<double> speed_profile(const Trajectory& traj);

// Linear interpolation of the speed profile onto a uniform grid at the
// median input rate; dt_out receives the grid step.
std::vector<double> uniform_speed(const Trajectory& traj, double& dt_out);

// Spectral arc length of a uniformly sampled speed profile. Always <= 0;
// throws if the profile is empty, negative anywhere, or identically zero.
double sparc(const std::vector<double>& speed, double dt,
             double cutoff_max = 10.0, double alpha = 0.05,
             int pad_factor = 4);

double path_length(const Trajectory& traj);

struct FailureCounts {
  std::map<std::string, int> by_kind;       // every known kind present
  std::map<std::string, int> wrong_objects; // per wrong-object name
  int total = 0;
};

FailureCounts failure_counts(const std::vector<EpisodeRecord>& episodes);

struct MetricsSummary {
  int episodes = 0;
  double success_rate = 0.0;  // percent
  std::optional<double> graded_mean;
  double sparc_mean = 0.0;
  double sparc_std = 0.0;
  double speed_mean_cm_s = 0.0;
  double speed_std_cm_s = 0.0;
  double path_mean_m = 0.0;
  double path_std_m = 0.0;
  FailureCounts failures;
};

MetricsSummary aggregate(const std::vector<EpisodeRecord>& episodes,
                         const task_model::TaskSet& tasks);

// One EpisodeRecord per line.
EpisodeRecord parse_episode(const std::string& line);
std::vector<EpisodeRecord> parse_episode_log(const std::string& text);
std::string serialize_episode(const EpisodeRecord& episode);

std::string serialize_summary(const MetricsSummary& summary);
std::string format_summary_table(const MetricsSummary& summary);

}  // namespace scenebench::trajectory_metrics
