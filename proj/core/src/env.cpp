#include "stonewalk/env.hpp"

#include <cmath>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

Eigen::Vector2d rotate(double yaw, double x, double y) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * x - s * y, s * x + c * y};
}

}  // namespace

Command sample_command(int stage, Rng& rng) {
  if (stage != 1 && stage != 2) {
    throw ConfigError("command stage must be 1 or 2");
  }
  Command cmd;
  cmd.vx = rng.uniform(-1.0, 1.0);
  if (stage == 1) {
    cmd.vy = rng.uniform(-1.0, 1.0);
    cmd.wyaw = rng.uniform(-1.0, 1.0);
  } else {
    cmd.vy = 0.0;
    cmd.wyaw = 0.0;
  }
  return cmd;
}

Command sample_eval_command(Rng& rng) {
  Command cmd;
  cmd.vx = rng.uniform(0.4, 1.0);
  cmd.vy = 0.0;
  cmd.wyaw = 0.0;
  return cmd;
}

void EnvConfig::validate() const {
  if (!(step_duration > 0.0)) throw ConfigError("step_duration must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (!(stance_width > 0.0) || !(d_min > 0.0)) {
    throw ConfigError("stance_width and d_min must be positive");
  }
  if (!(action_pos_limit > 0.0) || !(action_yaw_limit > 0.0)) {
    throw ConfigError("action limits must be positive");
  }
  if (!(track_sigma > 0.0) || !(yaw_track_sigma > 0.0)) {
    throw ConfigError("tracking temperatures must be positive");
  }
  if (terrain_height_noise < 0.0) {
    throw ConfigError("terrain_height_noise must be non-negative");
  }
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
  foothold.validate();
  noise.validate();
}

FootstepEnv::FootstepEnv(EnvConfig cfg) : cfg_(std::move(cfg)), print_(FootPrint::default_grid()) {
  cfg_.validate();
}

double FootstepEnv::base_height() const {
  const HeightField& field = walk_field();
  bool found = false;
  double best = 0.0;
  for (const FootState& foot : feet_) {
    if (!field.safe_at(foot.x, foot.y)) continue;
    const double h = field.height_at(foot.x, foot.y);
    best = found ? std::max(best, h) : h;
    found = true;
  }
  return (found ? best : 0.0) + height_offset_;
}

double FootstepEnv::progress_fraction() const {
  const double span = std::abs(goal_x_ - start_x_);
  if (!(span > 0.0)) return 1.0;
  const double traveled = goal_dir_ > 0 ? base_x_ - start_x_ : start_x_ - base_x_;
  return std::clamp(traveled / span, 0.0, 1.0);
}

Eigen::VectorXd FootstepEnv::build_obs(const Eigen::Vector3d& last_action, Rng& rng) {
  Eigen::VectorXd obs(kObsDim);
  obs(0) = command_.vx;
  obs(1) = command_.vy;
  obs(2) = command_.wyaw;

  const Eigen::Vector2d v_base = rotate(-base_yaw_, last_vel_world_.x(), last_vel_world_.y());
  const double yaw_err = wrap_angle(-base_yaw_);
  obs(3) = v_base.x();
  obs(4) = v_base.y();
  obs(5) = std::sin(yaw_err);
  obs(6) = std::cos(yaw_err);
  const FootState& swing = feet_[swing_index_];
  const FootState& stance = feet_[1 - swing_index_];
  const Eigen::Vector2d swing_rel = rotate(-base_yaw_, swing.x - base_x_, swing.y - base_y_);
  const Eigen::Vector2d stance_rel = rotate(-base_yaw_, stance.x - base_x_, stance.y - base_y_);
  obs(7) = swing_rel.x();
  obs(8) = swing_rel.y();
  obs(9) = stance_rel.x();
  obs(10) = stance_rel.y();

  const ElevationMap raw = sample_map(pair_.task, BasePose{base_x_, base_y_, base_yaw_});
  const ElevationMap noised = apply_noise(pair_.task, raw, sensor_, cfg_.noise, rng);
  const double base_z = base_height();
  for (int k = 0; k < ElevationMap::kCells; ++k) {
    obs(kCommandDim + kProprioDim + k) = noised.samples[k] - base_z;
  }

  obs.tail<kActionDim>() = last_action;
  return obs;
}

Eigen::VectorXd FootstepEnv::reset(TerrainPair pair, DynamicsMode mode, Command command,
                                   Rng& rng) {
  pair_ = std::move(pair);
  mode_ = mode;
  command_ = command;
  goal_dir_ = command_.vx < 0.0 ? -1 : 1;
  platform_len_ = curriculum_params(pair_.spec.kind, pair_.spec.level).platform_length;

  if (pair_.spec.kind == TerrainKind::kStonesEverywhere) {
    base_x_ = pair_.spec.extent_x / 2.0;
    base_y_ = pair_.spec.extent_y / 2.0;
  } else {
    base_x_ = goal_dir_ > 0 ? platform_len_ / 2.0 : pair_.spec.extent_x - platform_len_ / 2.0;
    base_y_ = pair_.spec.extent_y / 2.0;
  }
  base_yaw_ = 0.0;
  start_x_ = base_x_;
  goal_x_ = goal_dir_ > 0 ? pair_.spec.extent_x - platform_len_ : platform_len_;

  // Per-episode draw order: contact-side terrain height offset, then the
  // sensor's episode noise.
  height_offset_ = cfg_.terrain_height_noise > 0.0
                       ? rng.uniform(-cfg_.terrain_height_noise, cfg_.terrain_height_noise)
                       : 0.0;
  sensor_.reset(cfg_.noise, rng);

  for (int i = 0; i < 2; ++i) {
    const double side = i == 0 ? 1.0 : -1.0;
    const Eigen::Vector2d rel = rotate(base_yaw_, 0.0, side * cfg_.stance_width / 2.0);
    feet_[i] = FootState{base_x_ + rel.x(), base_y_ + rel.y(), base_yaw_, true, 0.0};
  }
  swing_index_ = 0;
  step_count_ = 0;
  active_ = true;
  last_vel_world_.setZero();
  prev_action_.setZero();
  prev_prev_action_.setZero();
  max_progress_ = progress_fraction();

  if (cfg_.heading_command) {
    command_.wyaw = cfg_.heading_gain * wrap_angle(-base_yaw_);
  }
  return build_obs(Eigen::Vector3d::Zero(), rng);
}

FootstepEnv::StepResult FootstepEnv::step(const Eigen::Vector3d& action, Rng& rng) {
  if (!active_) {
    throw ContractError("step called on a finished episode");
  }
  if (!action.allFinite()) {
    throw NumericError("non-finite action");
  }

  Eigen::Vector3d a = action;
  a.x() = std::clamp(a.x(), -cfg_.action_pos_limit, cfg_.action_pos_limit);
  a.y() = std::clamp(a.y(), -cfg_.action_pos_limit, cfg_.action_pos_limit);
  a.z() = std::clamp(a.z(), -cfg_.action_yaw_limit, cfg_.action_yaw_limit);

  const double old_x = base_x_;
  const double old_y = base_y_;
  const double new_yaw = wrap_angle(base_yaw_ + a.z());

  // The swing foot lands at the commanded offset in the decision-time frame.
  FootState& landing = feet_[swing_index_];
  FootState& stance = feet_[1 - swing_index_];
  const Eigen::Vector2d offset = rotate(base_yaw_, a.x(), a.y());
  landing.x = old_x + offset.x();
  landing.y = old_y + offset.y();
  landing.yaw = new_yaw;
  landing.air_time += cfg_.step_duration;
  landing.contact = true;
  stance.yaw = new_yaw;

  base_x_ = (landing.x + stance.x) / 2.0;
  base_y_ = (landing.y + stance.y) / 2.0;
  base_yaw_ = new_yaw;

  StepInfo info;
  info.velocity_world = Eigen::Vector2d(base_x_ - old_x, base_y_ - old_y) / cfg_.step_duration;
  info.velocity_base = rotate(-base_yaw_, info.velocity_world.x(), info.velocity_world.y());
  info.yaw_rate = a.z() / cfg_.step_duration;
  last_vel_world_ = info.velocity_world;
  max_progress_ = std::max(max_progress_, progress_fraction());
  info.traverse = max_progress_;

  // Dense locomotion group (weighted contributions).
  RewardGroups rewards;
  RewardComponents& rc = rewards.components;
  const double verr = (info.velocity_base - Eigen::Vector2d(command_.vx, command_.vy))
                          .squaredNorm();
  rc.track_xy = cfg_.w_track_xy * std::exp(-verr / cfg_.track_sigma);
  const double werr = info.yaw_rate - command_.wyaw;
  rc.track_yaw = cfg_.w_track_yaw * std::exp(-werr * werr / cfg_.yaw_track_sigma);
  rc.action_rate = cfg_.w_action_rate * (a - prev_action_).squaredNorm();
  rc.smoothness = cfg_.w_smoothness * (a - 2.0 * prev_action_ + prev_prev_action_).squaredNorm();
  const double py0 = rotate(-base_yaw_, feet_[0].x - base_x_, feet_[0].y - base_y_).y();
  const double py1 = rotate(-base_yaw_, feet_[1].x - base_x_, feet_[1].y - base_y_).y();
  rc.feet_distance =
      cfg_.w_feet_distance * std::max(0.0, std::abs(py0 - py1) - cfg_.d_min);
  rc.feet_air_time = cfg_.w_feet_air_time * (landing.air_time - cfg_.air_time_target);
  const double cmd_sq = command_.vx * command_.vx + command_.vy * command_.vy;
  const double disp_sq = (base_x_ - old_x) * (base_x_ - old_x) +
                         (base_y_ - old_y) * (base_y_ - old_y);
  rc.stand_still =
      cmd_sq < cfg_.stand_still_threshold ? cfg_.w_stand_still * disp_sq : 0.0;
  rewards.dense = cfg_.reward_scale * rc.sum();

  // Sparse foothold group: the landing foot is scored once, at touchdown,
  // against the task terrain.
  const double eps = effective_epsilon();
  const int bad = bad_sample_count(landing, print_, pair_.task, eps);
  info.touchdown = TouchdownEvent{bad, print_.count()};
  info.support = 1.0 - static_cast<double>(bad) / print_.count();
  {
    std::array<FootState, 2> scored = feet_;
    scored[swing_index_].contact = true;
    scored[1 - swing_index_].contact = false;
    FootholdConfig fcfg = cfg_.foothold;
    fcfg.epsilon = eps;
    rewards.sparse = cfg_.reward_scale * foothold_reward(scored, print_, pair_.task, fcfg);
  }

  // Terminations. Success takes precedence; timeout only fires alone.
  const bool crossed = goal_dir_ > 0 ? base_x_ > goal_x_ : base_x_ < goal_x_;
  const double stance_support = support_fraction(stance, print_, pair_.task, eps);
  const bool both_supported =
      info.support >= cfg_.foothold.support_threshold &&
      stance_support >= cfg_.foothold.support_threshold;
  info.success = crossed && both_supported;
  info.collision = std::hypot(feet_[0].x - feet_[1].x, feet_[0].y - feet_[1].y) <
                   0.5 * cfg_.d_min;
  info.oob = !pair_.task.in_bounds(base_x_, base_y_);
  info.misstep = mode_ == DynamicsMode::kHard &&
                 info.support < cfg_.foothold.support_threshold;

  ++step_count_;
  bool done = false;
  if (info.success) {
    done = true;
    info.misstep = false;
  } else if (info.collision || info.oob || info.misstep) {
    done = true;
  } else if (step_count_ >= cfg_.max_steps) {
    done = true;
    info.timeout = true;
  }

  landing.air_time = 0.0;
  swing_index_ = 1 - swing_index_;
  feet_[swing_index_].contact = false;
  feet_[swing_index_].air_time = 0.0;
  prev_prev_action_ = prev_action_;
  prev_action_ = a;
  if (cfg_.heading_command) {
    command_.wyaw = cfg_.heading_gain * wrap_angle(-base_yaw_);
  }

  StepResult result;
  result.rewards = rewards;
  result.info = info;
  result.done = done;
  result.obs = build_obs(a, rng);
  if (done) {
    active_ = false;
  }
  return result;
}

EvalMetrics evaluate(const ActorFn& actor, const TerrainSpec& terrain_spec, const EnvConfig& cfg,
                     int episodes, std::uint64_t seed, std::vector<EvalEpisode>* episode_log) {
  FootstepEnv env(cfg);
  std::vector<TouchdownEvent> touchdowns;
  int successes = 0;
  double trav_sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(hash_seeds(seed, static_cast<std::uint64_t>(e)), Rng::stream_id("eval/episode"));
    TerrainSpec spec = terrain_spec;
    spec.seed = hash_seeds(seed, static_cast<std::uint64_t>(e), 0x7e55u);
    const Command cmd = sample_eval_command(rng);
    Eigen::VectorXd obs = env.reset(generate(spec), DynamicsMode::kHard, cmd, rng);
    EvalEpisode record;
    record.index = e;
    while (true) {
      const FootstepEnv::StepResult r = env.step(actor(obs), rng);
      touchdowns.push_back(r.info.touchdown);
      ++record.steps;
      ++record.touchdowns;
      record.bad_samples += r.info.touchdown.bad_count;
      record.sole_samples += r.info.touchdown.sample_count;
      if (r.done) {
        successes += r.info.success ? 1 : 0;
        trav_sum += r.info.traverse;
        record.success = r.info.success;
        record.traverse = r.info.traverse;
        break;
      }
      obs = r.obs;
    }
    if (episode_log) episode_log->push_back(record);
  }
  EvalMetrics metrics;
  metrics.episodes = episodes;
  metrics.r_succ = episodes > 0 ? static_cast<double>(successes) / episodes : 0.0;
  metrics.r_trav = episodes > 0 ? trav_sum / episodes : 0.0;
  const FootholdErrorResult fe = foothold_error(touchdowns);
  metrics.e_foot = fe.error;
  metrics.e_foot_empty = fe.empty;
  return metrics;
}

}  // namespace stonewalk
