#include "elue/envsim/point_nav.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "elue/error.hpp"

namespace elue::envsim {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::radial_goal:
      return "radial_goal";
    case Family::rotated_dynamics:
      return "rotated_dynamics";
    case Family::shifted_goal:
      return "shifted_goal";
  }
  return "radial_goal";
}

Family parse_family(std::string_view text) {
  if (text == "radial_goal") return Family::radial_goal;
  if (text == "rotated_dynamics") return Family::rotated_dynamics;
  if (text == "shifted_goal") return Family::shifted_goal;
  throw ConfigError("unknown task family '" + std::string(text) + "'");
}

std::array<double, Transition::kFeatureWidth> Transition::features() const {
  return {state[0], state[1], action[0], action[1], reward, next_state[0], next_state[1]};
}

Transition Transition::from_features(std::span<const double> f) {
  if (f.size() != kFeatureWidth) {
    throw ShapeError("transition: expected " + std::to_string(kFeatureWidth) + " features, got " +
                     std::to_string(f.size()));
  }
  return Transition{{f[0], f[1]}, {f[2], f[3]}, f[4], {f[5], f[6]}};
}

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::vector<TaskSpec> sample_tasks(Family family, int n, std::uint64_t seed, std::int64_t first_id) {
  if (n < 1) throw ConfigError("sample_tasks: n must be >= 1, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TaskSpec> tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  const double two_pi = 2.0 * std::numbers::pi;
  const double offset = two_pi * unit(rng);
  for (int i = 0; i < n; ++i) {
    TaskSpec t;
    t.family = family;
    t.task_id = first_id + i;
    switch (family) {
      case Family::radial_goal:
      case Family::shifted_goal: {
        // Evenly spaced around the circle from a random offset, each jittered
        // by up to a quarter of the spacing.
        const double jitter = unit(rng) * 0.5 - 0.25;
        const double angle = offset + two_pi * (i + jitter) / n;
        const double radius = family == Family::radial_goal ? kRadialGoalRadius : kShiftedGoalRadius;
        t.goal = {radius * std::cos(angle), radius * std::sin(angle)};
        break;
      }
      case Family::rotated_dynamics: {
        const double angle = -0.5 * std::numbers::pi + std::numbers::pi * (i + unit(rng)) / n;
        t.goal = kRotatedGoal;
        t.rotation_angle = std::clamp(angle, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
        break;
      }
    }
    t.seed = rng();
    tasks.push_back(t);
  }
  return tasks;
}

EnvState reset(const TaskSpec&) { return EnvState{}; }

StepResult step(const TaskSpec& task, const EnvState& state, const Vec2& action, const EnvConfig& config) {
  if (state.step_index >= config.horizon) {
    throw Error("envsim step: episode already finished at step " + std::to_string(state.step_index));
  }
  if (!std::isfinite(action[0]) || !std::isfinite(action[1])) throw Error("envsim step: non-finite action");
  const double ax = std::clamp(action[0], -1.0, 1.0);
  const double ay = std::clamp(action[1], -1.0, 1.0);
  const double c = std::cos(task.rotation_angle);
  const double s = std::sin(task.rotation_angle);
  const double dx = config.action_scale * (c * ax - s * ay);
  const double dy = config.action_scale * (s * ax + c * ay);
  StepResult out;
  out.next.position = {std::clamp(state.position[0] + dx, -1.0, 1.0), std::clamp(state.position[1] + dy, -1.0, 1.0)};
  out.next.step_index = state.step_index + 1;
  out.reward = -distance(out.next.position, task.goal);
  out.done = out.next.step_index == config.horizon;
  return out;
}

Vec2 oracle_action(const TaskSpec& task, const EnvState& state, const EnvConfig& config) {
  const double gx = task.goal[0] - state.position[0];
  const double gy = task.goal[1] - state.position[1];
  const double dist = std::hypot(gx, gy);
  if (dist == 0.0) return {0.0, 0.0};
  const double len = std::min(1.0, dist / config.action_scale);
  const double ux = len * gx / dist;
  const double uy = len * gy / dist;
  // Invert the task rotation so the displacement points at the goal.
  const double c = std::cos(task.rotation_angle);
  const double s = std::sin(task.rotation_angle);
  return {c * ux + s * uy, -s * ux + c * uy};
}

double oracle_return(const TaskSpec& task, const EnvConfig& config) {
  const double d0 = distance(reset(task).position, task.goal);
  double total = 0.0;
  for (int t = 1; t <= config.horizon; ++t) total -= std::max(d0 - config.action_scale * t, 0.0);
  return total;
}

}  // namespace elue::envsim
