#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "elue/envsim/point_nav.hpp"

namespace elue::envsim {

/// One task per line: family,task_id,goal_x,goal_y,rotation_angle,seed.
/// Reals are written with 17 significant digits so parsing is exact.
std::string format_tasks(const std::vector<TaskSpec>& tasks);
std::vector<TaskSpec> parse_tasks(std::string_view text);

void write_tasks_file(const std::string& path, const std::vector<TaskSpec>& tasks);
std::vector<TaskSpec> read_tasks_file(const std::string& path);

}  // namespace elue::envsim
