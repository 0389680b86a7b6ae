#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scenebench/scene_model.hpp"
#include "scenebench/task_model.hpp"

namespace scenebench::genpipe::prompts {

std::string scene_system_prompt();
std::string scene_user_prompt(const std::string& theme,
                              const scene_model::Catalog& catalog,
                              int target_count);

// Appended to the user prompt on retry; feedback is the diagnostic text from
// the solver, placement, settling, or schema check that failed.
std::string feedback_block(const std::string& feedback);

std::string task_system_prompt();
std::string task_user_prompt(const scene_model::Scene& scene,
                             const std::string& scene_id,
                             const std::string& axis,
                             const std::string& subcategory,
                             const std::string& difficulty,
                             const std::vector<std::string>& prior_tasks);
std::string task_fix_prompt(const std::string& original_prompt,
                            const std::string& invalid_output,
                            const std::string& error_text);

std::string judge_system_prompt();
std::string judge_user_prompt(const task_model::TaskSpec& task);

// name -> template text for every template above that is static (no runtime
// fills), used to ship them as versioned files and keep the copies in sync.
std::vector<std::pair<std::string, std::string>> static_templates();

}  // namespace scenebench::genpipe::prompts
