#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>

#include "stonewalk/foothold.hpp"
#include "stonewalk/rng.hpp"
#include "stonewalk/sensor.hpp"
#include "stonewalk/terrain.hpp"

namespace stonewalk {

struct Command {
  double vx = 0.0;    // m/s, base-frame forward
  double vy = 0.0;    // m/s, base-frame lateral
  double wyaw = 0.0;  // rad/s
};

// Stage 1: vx, vy ~ U(-1, 1), wyaw ~ U(-1, 1). Stage 2: vx ~ U(-1, 1),
// vy = wyaw = 0 exactly.
Command sample_command(int stage, Rng& rng);

// Evaluation protocol: forward-only vx ~ U(0.4, 1.0), vy = wyaw = 0, so
// every episode is commanded to traverse.
Command sample_eval_command(Rng& rng);

enum class DynamicsMode { kSoft, kHard };

struct EnvConfig {
  double step_duration = 0.7;  // seconds per footstep decision
  int max_steps = 60;
  double stance_width = 0.24;      // initial lateral foot separation
  double d_min = 0.18;             // feet-distance reward threshold
  // |dx|, |dy| clamp, meters. The base tracks the stance midpoint, so the
  // steady-state speed is (2/3) * stride / step_duration; 1.2 m strides keep
  // the full +-1 m/s command range reachable at the default cadence.
  double action_pos_limit = 1.2;
  double action_yaw_limit = 0.5;   // |dyaw| clamp, radians
  double track_sigma = 0.25;       // xy velocity tracking temperature
  double yaw_track_sigma = 0.25;   // yaw velocity tracking temperature
  double air_time_target = 0.5;    // seconds
  double stand_still_threshold = 0.1;  // on ||v_cmd||^2
  // Multiplies both reward groups at step time (components stay in natural
  // units; dense = reward_scale * components.sum()). The policy update is
  // invariant to this scale by construction, but the critics regress the
  // discounted returns directly, so it conditions their targets to the
  // optimizer's step size.
  double reward_scale = 0.05;

  // Dense locomotion group weights.
  double w_track_xy = 1.0;
  double w_track_yaw = 1.0;
  double w_action_rate = -0.01;
  double w_smoothness = -1e-3;
  double w_feet_distance = 0.5;
  double w_feet_air_time = 1.0;
  double w_stand_still = -0.05;

  FootholdConfig foothold;
  MapNoiseConfig noise;
  // Contact-side per-episode terrain height offset range (true heights shift
  // by U(-r, r) while the perceived map does not); 0 disables.
  double terrain_height_noise = 0.0;
  // Heading-command ablation: overwrite wyaw each step with
  // heading_gain * (heading error toward facing +x).
  bool heading_command = false;
  double heading_gain = 1.0;

  void validate() const;
};

inline constexpr int kCommandDim = 3;
inline constexpr int kProprioDim = 8;
inline constexpr int kPerceptDim = ElevationMap::kCells;
inline constexpr int kActionDim = 3;
inline constexpr int kObsDim = kCommandDim + kProprioDim + kPerceptDim + kActionDim;  // 239

// Weighted dense-group contributions; dense reward equals their sum.
struct RewardComponents {
  double track_xy = 0.0;
  double track_yaw = 0.0;
  double action_rate = 0.0;
  double smoothness = 0.0;
  double feet_distance = 0.0;
  double feet_air_time = 0.0;
  double stand_still = 0.0;

  double sum() const {
    return track_xy + track_yaw + action_rate + smoothness + feet_distance + feet_air_time +
           stand_still;
  }
};

struct RewardGroups {
  double dense = 0.0;   // locomotion group R1
  double sparse = 0.0;  // foothold group R2
  RewardComponents components;
};

struct StepInfo {
  bool success = false;
  bool misstep = false;
  bool collision = false;
  bool oob = false;
  bool timeout = false;
  double traverse = 0.0;  // running max progress fraction of the strip
  double support = 1.0;   // landing-foot support fraction against the task
  TouchdownEvent touchdown;
  Eigen::Vector2d velocity_world = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity_base = Eigen::Vector2d::Zero();
  double yaw_rate = 0.0;
};

// Kinematic footstep walker: one decision per footstep. The base tracks the
// stance midpoint; feet alternate strictly. Soft mode walks the flat twin
// while perceiving and being scored against the task terrain; Hard mode
// walks the task with misstep termination.
class FootstepEnv {
 public:
  explicit FootstepEnv(EnvConfig cfg);

  static int obs_dim() { return kObsDim; }
  static int action_dim() { return kActionDim; }

  Eigen::VectorXd reset(TerrainPair pair, DynamicsMode mode, Command command, Rng& rng);

  struct StepResult {
    Eigen::VectorXd obs;
    RewardGroups rewards;
    bool done = false;
    StepInfo info;
  };
  // Throws ContractError if called after done without reset.
  StepResult step(const Eigen::Vector3d& action, Rng& rng);

  bool episode_active() const { return active_; }
  const EnvConfig& config() const { return cfg_; }
  const TerrainPair& terrain() const { return pair_; }
  const Command& command() const { return command_; }
  DynamicsMode mode() const { return mode_; }
  int steps_taken() const { return step_count_; }
  double base_x() const { return base_x_; }
  double base_y() const { return base_y_; }
  double base_yaw() const { return base_yaw_; }
  const std::array<FootState, 2>& feet() const { return feet_; }
  int swing_index() const { return swing_index_; }

 private:
  EnvConfig cfg_;
  FootPrint print_;
  TerrainPair pair_;
  DynamicsMode mode_ = DynamicsMode::kSoft;
  Command command_;
  SensorState sensor_;

  double base_x_ = 0.0;
  double base_y_ = 0.0;
  double base_yaw_ = 0.0;
  std::array<FootState, 2> feet_;
  int swing_index_ = 0;
  int step_count_ = 0;
  bool active_ = false;
  int goal_dir_ = 1;  // +1 walk toward +x, -1 mirrored
  double platform_len_ = 1.0;
  double start_x_ = 0.0;
  double goal_x_ = 0.0;
  double max_progress_ = 0.0;
  double height_offset_ = 0.0;  // contact-side true-height shift
  Eigen::Vector2d last_vel_world_ = Eigen::Vector2d::Zero();
  Eigen::Vector3d prev_action_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d prev_prev_action_ = Eigen::Vector3d::Zero();

  const HeightField& walk_field() const {
    return mode_ == DynamicsMode::kSoft ? pair_.flat : pair_.task;
  }
  double effective_epsilon() const { return cfg_.foothold.epsilon - height_offset_; }
  double base_height() const;
  double progress_fraction() const;
  Eigen::VectorXd build_obs(const Eigen::Vector3d& last_action, Rng& rng);
};

struct EvalMetrics {
  double r_succ = 0.0;
  double r_trav = 0.0;
  double e_foot = 0.0;
  bool e_foot_empty = false;  // no touchdowns were logged
  int episodes = 0;
};

// Raw per-episode counts so every reported rate can be recounted from logs.
struct EvalEpisode {
  int index = 0;
  bool success = false;
  double traverse = 0.0;
  int steps = 0;
  int touchdowns = 0;
  long bad_samples = 0;
  long sole_samples = 0;
};

using ActorFn = std::function<Eigen::Vector3d(const Eigen::VectorXd& obs)>;

// Hard-mode evaluation campaign: `episodes` episodes on freshly generated
// terrains (per-episode seeds derived from `seed`), eval commands, metrics
// aggregated over episodes (R_succ, R_trav) and touchdowns (E_foot).
EvalMetrics evaluate(const ActorFn& actor, const TerrainSpec& terrain_spec, const EnvConfig& cfg,
                     int episodes, std::uint64_t seed,
                     std::vector<EvalEpisode>* episode_log = nullptr);

}  // namespace stonewalk
