#pragma once

#include <array>
#include <compare>
#include <span>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace elue::envsim {

using Vec2 = std::array<double, 2>;

enum class Family { radial_goal, rotated_dynamics, shifted_goal };

std::string_view to_string(Family f);
Family parse_family(std::string_view text);

inline constexpr double kRadialGoalRadius = 0.5;
inline constexpr double kShiftedGoalRadius = 0.75;
inline constexpr Vec2 kRotatedGoal{0.5, 0.0};

/// Hidden parameters of one task instance.
struct TaskSpec {
  Family family = Family::radial_goal;
  Vec2 goal{0.0, 0.0};
  double rotation_angle = 0.0;
  std::int64_t task_id = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct EnvConfig {
  int horizon = 32;
  double action_scale = 0.1;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct EnvState {
  Vec2 position{0.0, 0.0};
  int step_index = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// One experience tuple (s, a, r, s').
struct Transition {
  Vec2 state{0.0, 0.0};
  Vec2 action{0.0, 0.0};
  double reward = 0.0;
  Vec2 next_state{0.0, 0.0};

  static constexpr std::size_t kFeatureWidth = 7;
  /// [s, a, r, s'] flattened.
  std::array<double, kFeatureWidth> features() const;
  static Transition from_features(std::span<const double> f);

  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition& a, const Transition& b) { return a.features() <=> b.features(); }
};

struct StepResult {
  double reward = 0.0;
  EnvState next;
  bool done = false;
};

/// n tasks of a family; deterministic in (family, n, seed). Task ids run 0..n-1
/// offset by `first_id`.
std::vector<TaskSpec> sample_tasks(Family family, int n, std::uint64_t seed, std::int64_t first_id = 0);

EnvState reset(const TaskSpec& task);
StepResult step(const TaskSpec& task, const EnvState& state, const Vec2& action, const EnvConfig& config = {});

/// The agent observes only the position.
inline Vec2 observe(const EnvState& s) { return s.position; }

/// Scripted reference controller: a unit-norm action toward the goal in the
/// task's true dynamics frame, shortened on the final approach so the goal is
/// hit exactly, zero once there.
Vec2 oracle_action(const TaskSpec& task, const EnvState& state, const EnvConfig& config = {});
/// Episode return of the scripted controller, computed in closed form.
double oracle_return(const TaskSpec& task, const EnvConfig& config = {});

double distance(const Vec2& a, const Vec2& b);

}  // namespace elue::envsim
