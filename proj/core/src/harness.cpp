#include "stonewalk/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

namespace fs = std::filesystem;

// Shortest round-trip decimal form, so logs are both readable and bit-exact.
std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = item.find_last_not_of(" \t");
    int value = 0;
    const auto res = std::from_chars(item.data() + begin, item.data() + end + 1, value);
    if (res.ec != std::errc() || res.ptr != item.data() + end + 1) {
      throw ConfigError("config key '" + key + "' has a bad integer list entry '" + item + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' must list at least one integer");
  return out;
}

const char* result_name(const StepInfo& info) {
  if (info.success) return "success";
  if (info.collision) return "collision";
  if (info.oob) return "oob";
  if (info.misstep) return "misstep";
  if (info.timeout) return "timeout";
  return "running";
}

struct EnvLane {
  FootstepEnv env;
  Rng rng;
  CurriculumSlot slot;
  TerrainKind kind = TerrainKind::kStonesEverywhere;
  Eigen::VectorXd obs;
  double ep_r1 = 0.0;
  double ep_r2 = 0.0;
  int ep_steps = 0;

  explicit EnvLane(const EnvConfig& cfg) : env(cfg) {}
};

TerrainKind lane_kind(int stage, int index) {
  if (stage == 1) return TerrainKind::kStonesEverywhere;
  return index % 2 == 0 ? TerrainKind::kSteppingStones : TerrainKind::kBalancingBeams;
}

void start_episode(EnvLane& lane, const RunConfig& rc) {
  const int level = rc.curriculum ? lane.slot.level : rc.fixed_level;
  const TerrainSpec spec = default_spec(lane.kind, level, lane.rng.next_u64());
  const Command cmd = sample_command(rc.stage, lane.rng);
  const DynamicsMode mode = rc.stage == 1 ? DynamicsMode::kSoft : DynamicsMode::kHard;
  lane.obs = lane.env.reset(generate(spec), mode, cmd, lane.rng);
  lane.ep_r1 = 0.0;
  lane.ep_r2 = 0.0;
  lane.ep_steps = 0;
}

AdamState adam_state(const Adam& opt) {
  return AdamState{opt.step_count(), opt.lr, opt.m(), opt.v()};
}

void restore_adam(Adam& opt, const AdamState& st) {
  opt.restore(st.t, st.m, st.v);
  opt.lr = st.lr;
}

Checkpoint snapshot(const PpoNets& nets, const RunConfig& rc, int iteration,
                    const std::vector<EnvLane>& lanes, const Rng& trainer_rng) {
  Checkpoint ckpt;
  ckpt.stage = rc.stage;
  ckpt.iteration = iteration;
  ckpt.seed = rc.seed;
  ckpt.single_critic = rc.ppo.single_critic;
  ckpt.policy_spec = nets.policy.mean_net().spec();
  ckpt.value_spec = nets.value1.spec();
  ckpt.policy_params = nets.policy.flat_params();
  ckpt.value1_params = nets.value1.params();
  ckpt.value2_params = nets.value2.params();
  ckpt.opt_policy = adam_state(nets.policy_opt);
  ckpt.opt_value1 = adam_state(nets.value1_opt);
  ckpt.opt_value2 = adam_state(nets.value2_opt);
  ckpt.obs_norm = NormalizerState{nets.obs_norm.count(), nets.obs_norm.mean(),
                                  nets.obs_norm.var()};
  ckpt.curriculum.reserve(lanes.size());
  ckpt.env_rngs.reserve(lanes.size());
  for (const EnvLane& lane : lanes) {
    ckpt.curriculum.push_back(lane.slot);
    ckpt.env_rngs.push_back(lane.rng.state());
  }
  ckpt.trainer_rng = trainer_rng.state();
  return ckpt;
}

void check_shapes(const Checkpoint& ckpt, const PpoNets& nets) {
  if (!(ckpt.policy_spec == nets.policy.mean_net().spec()) ||
      !(ckpt.value_spec == nets.value1.spec())) {
    throw ConfigError("checkpoint/config dimension mismatch (network shapes differ)");
  }
  if (ckpt.policy_params.size() != nets.policy.param_count() ||
      ckpt.value1_params.size() != nets.value1.param_count()) {
    throw ConfigError("checkpoint/config dimension mismatch (parameter counts differ)");
  }
}

// Parameters and observation statistics only: the stage-2 fine-tune path.
void load_params_only(PpoNets& nets, const Checkpoint& ckpt) {
  check_shapes(ckpt, nets);
  nets.policy.set_flat_params(ckpt.policy_params);
  nets.value1.params() = ckpt.value1_params;
  if (nets.value2.param_count() > 0 && ckpt.value2_params.size() == nets.value2.param_count()) {
    nets.value2.params() = ckpt.value2_params;
  }
  nets.obs_norm.restore(ckpt.obs_norm.count, ckpt.obs_norm.mean, ckpt.obs_norm.var);
}

// Full state: parameters, optimizer moments, and statistics (resume path).
void load_full(PpoNets& nets, const Checkpoint& ckpt) {
  check_shapes(ckpt, nets);
  if (nets.value2.param_count() != ckpt.value2_params.size()) {
    throw ConfigError("checkpoint/config dimension mismatch (critic layout differs)");
  }
  nets.policy.set_flat_params(ckpt.policy_params);
  nets.value1.params() = ckpt.value1_params;
  if (nets.value2.param_count() > 0) nets.value2.params() = ckpt.value2_params;
  restore_adam(nets.policy_opt, ckpt.opt_policy);
  restore_adam(nets.value1_opt, ckpt.opt_value1);
  restore_adam(nets.value2_opt, ckpt.opt_value2);
  nets.obs_norm.restore(ckpt.obs_norm.count, ckpt.obs_norm.mean, ckpt.obs_norm.var);
}

constexpr const char* kTrainCsvHeader =
    "iter,env_steps,episodes,successes,mean_level,ep_r1_mean,ep_r2_mean,track_xy,track_yaw,"
    "action_rate,smoothness,feet_distance,feet_air_time,stand_still,policy_loss,value_loss1,"
    "value_loss2,entropy,mean_kl,lr,grad_norm_policy,grad_norm_v1,grad_norm_v2,"
    "adv1_contribution,adv2_contribution";

constexpr const char* kEvalCsvHeader =
    "kind,level,episode,success,traverse,steps,touchdowns,bad_samples,sole_samples";

}  // namespace

void curriculum_update(CurriculumSlot& slot, bool success) {
  if (slot.passed_all) {
    slot.level = success ? std::min(slot.level + 1, kMaxLevel) : std::max(slot.level - 1, 0);
    slot.consecutive_successes = 0;
    return;
  }
  if (!success) {
    slot.consecutive_successes = 0;
    return;
  }
  slot.consecutive_successes += 1;
  if (slot.consecutive_successes >= kAdvanceStreak) {
    slot.consecutive_successes = 0;
    if (slot.level >= kMaxLevel) {
      slot.passed_all = true;
    } else {
      slot.level += 1;
    }
  }
}

void RunConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (iters < 0) throw ConfigError("train.iters must be non-negative");
  if (checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
  if (fixed_level < 0 || fixed_level > kMaxLevel) {
    throw ConfigError("curriculum.fixed_level must be in 0..8");
  }
  if (hidden.empty()) throw ConfigError("net.hidden must list at least one layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("net.hidden sizes must be positive");
  }
  if (stage == 2 && resume.empty() && stage2_init.empty() && !stage2_from_scratch) {
    throw ConfigError("stage 2 requires stage2.init (or stage2.from_scratch = true)");
  }
  ppo.validate();
  env.validate();
}

RunConfig run_config_from(const Config& cfg, int stage) {
  RunConfig rc;
  rc.stage = stage;
  rc.seed = cfg.get_u64("seed", rc.seed);
  rc.iters = cfg.get_int("train.iters", rc.iters);
  rc.checkpoint_every = cfg.get_int("train.checkpoint_every", rc.checkpoint_every);
  rc.out_dir = cfg.get_string("out", rc.out_dir.string());
  rc.resume = cfg.get_string("resume", "");
  rc.stage2_init = cfg.get_string("stage2.init", "");
  rc.stage2_from_scratch = cfg.get_bool("stage2.from_scratch", false);
  rc.curriculum = cfg.get_bool("curriculum.enabled", true);
  rc.fixed_level = cfg.get_int("curriculum.fixed_level", rc.fixed_level);
  rc.hidden = parse_int_list(cfg.get_string("net.hidden", "64,64"), "net.hidden");

  PpoConfig& ppo = rc.ppo;
  ppo.gamma = cfg.get_double("ppo.gamma", ppo.gamma);
  ppo.lam = cfg.get_double("ppo.lam", ppo.lam);
  ppo.clip = cfg.get_double("ppo.clip", ppo.clip);
  ppo.entropy_coef = cfg.get_double("ppo.entropy_coef", ppo.entropy_coef);
  ppo.desired_kl = cfg.get_double("ppo.desired_kl", ppo.desired_kl);
  ppo.epochs = cfg.get_int("ppo.epochs", ppo.epochs);
  ppo.minibatches = cfg.get_int("ppo.minibatches", ppo.minibatches);
  ppo.steps_per_iter = cfg.get_int("train.steps_per_iter", ppo.steps_per_iter);
  ppo.num_envs = cfg.get_int("train.num_envs", ppo.num_envs);
  ppo.w1 = cfg.get_double("ppo.w1", ppo.w1);
  ppo.w2 = cfg.get_double("ppo.w2", ppo.w2);
  ppo.value_loss_coef = cfg.get_double("ppo.value_loss_coef", ppo.value_loss_coef);
  ppo.lr = cfg.get_double("ppo.lr", ppo.lr);
  ppo.lr_min = cfg.get_double("ppo.lr_min", ppo.lr_min);
  ppo.lr_max = cfg.get_double("ppo.lr_max", ppo.lr_max);
  ppo.max_grad_norm = cfg.get_double("ppo.max_grad_norm", ppo.max_grad_norm);
  ppo.init_log_std = cfg.get_double("ppo.init_log_std", ppo.init_log_std);
  ppo.single_critic = cfg.get_bool("ppo.single_critic", ppo.single_critic);
  ppo.strict_td_targets = cfg.get_bool("ppo.strict_td_targets", ppo.strict_td_targets);
  ppo.adv_norm_per_minibatch =
      cfg.get_bool("ppo.adv_norm_per_minibatch", ppo.adv_norm_per_minibatch);

  EnvConfig& env = rc.env;
  env.step_duration = cfg.get_double("env.step_duration", env.step_duration);
  env.max_steps = cfg.get_int("env.max_steps", env.max_steps);
  env.stance_width = cfg.get_double("env.stance_width", env.stance_width);
  env.d_min = cfg.get_double("env.d_min", env.d_min);
  env.action_pos_limit = cfg.get_double("env.action_pos_limit", env.action_pos_limit);
  env.action_yaw_limit = cfg.get_double("env.action_yaw_limit", env.action_yaw_limit);
  env.track_sigma = cfg.get_double("env.track_sigma", env.track_sigma);
  env.yaw_track_sigma = cfg.get_double("env.yaw_track_sigma", env.yaw_track_sigma);
  env.air_time_target = cfg.get_double("env.air_time_target", env.air_time_target);
  env.stand_still_threshold =
      cfg.get_double("env.stand_still_threshold", env.stand_still_threshold);
  env.reward_scale = cfg.get_double("env.reward_scale", env.reward_scale);
  env.w_track_xy = cfg.get_double("env.w_track_xy", env.w_track_xy);
  env.w_track_yaw = cfg.get_double("env.w_track_yaw", env.w_track_yaw);
  env.w_action_rate = cfg.get_double("env.w_action_rate", env.w_action_rate);
  env.w_smoothness = cfg.get_double("env.w_smoothness", env.w_smoothness);
  env.w_feet_distance = cfg.get_double("env.w_feet_distance", env.w_feet_distance);
  env.w_feet_air_time = cfg.get_double("env.w_feet_air_time", env.w_feet_air_time);
  env.w_stand_still = cfg.get_double("env.w_stand_still", env.w_stand_still);
  env.heading_command = cfg.get_bool("env.heading_command", env.heading_command);
  env.heading_gain = cfg.get_double("env.heading_gain", env.heading_gain);
  env.terrain_height_noise = cfg.get_double("terrain.height_noise", env.terrain_height_noise);

  FootholdConfig& foot = env.foothold;
  foot.epsilon = cfg.get_double("foothold.epsilon", foot.epsilon);
  const std::string mode = cfg.get_string("foothold.mode", "continuous");
  if (mode == "continuous") {
    foot.mode = FootholdMode::kContinuous;
  } else if (mode == "binary") {
    foot.mode = FootholdMode::kBinaryPct;
  } else {
    throw ConfigError("foothold.mode must be continuous or binary, got '" + mode + "'");
  }
  foot.binary_pct = cfg.get_int("foothold.binary_pct", foot.binary_pct);
  foot.support_threshold = cfg.get_double("foothold.support_threshold", foot.support_threshold);

  MapNoiseConfig& noise = env.noise;
  if (!cfg.get_bool("noise.enabled", true)) {
    noise = MapNoiseConfig::zero();
  }
  noise.vertical_offset_range =
      cfg.get_double("noise.vertical_offset_range", noise.vertical_offset_range);
  noise.vertical_noise_range =
      cfg.get_double("noise.vertical_noise_range", noise.vertical_noise_range);
  noise.rp_bias_range = cfg.get_double("noise.rp_bias_range", noise.rp_bias_range);
  noise.yaw_noise_range = cfg.get_double("noise.yaw_noise_range", noise.yaw_noise_range);
  noise.foothold_extension_prob =
      cfg.get_double("noise.foothold_extension_prob", noise.foothold_extension_prob);
  noise.map_repeat_prob = cfg.get_double("noise.map_repeat_prob", noise.map_repeat_prob);

  rc.validate();
  return rc;
}

TrainOutput train(const RunConfig& rc) {
  rc.validate();
  fs::create_directories(rc.out_dir);

  const int N = rc.ppo.num_envs;
  const int T = rc.ppo.steps_per_iter;
  const bool single = rc.ppo.single_critic;

  PpoNets nets = make_ppo_nets(kObsDim, kActionDim, rc.hidden, rc.ppo, rc.seed);
  Rng trainer_rng(rc.seed, Rng::stream_id("train"));

  std::vector<EnvLane> lanes;
  lanes.reserve(N);
  for (int n = 0; n < N; ++n) {
    lanes.emplace_back(rc.env);
    lanes[n].rng = Rng(hash_seeds(rc.seed, static_cast<std::uint64_t>(n)),
                       Rng::stream_id("env"));
    lanes[n].kind = lane_kind(rc.stage, n);
  }

  int start_iter = 0;
  if (!rc.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(rc.resume);
    if (ckpt.stage != rc.stage) {
      throw ConfigError("resume checkpoint is stage " + std::to_string(ckpt.stage) +
                        ", expected stage " + std::to_string(rc.stage));
    }
    if (ckpt.single_critic != single) {
      throw ConfigError("resume checkpoint critic layout does not match config");
    }
    if (static_cast<int>(ckpt.curriculum.size()) != N ||
        static_cast<int>(ckpt.env_rngs.size()) != N) {
      throw ConfigError("resume checkpoint was written with a different env count");
    }
    load_full(nets, ckpt);
    for (int n = 0; n < N; ++n) {
      lanes[n].slot = ckpt.curriculum[n];
      lanes[n].rng.set_state(ckpt.env_rngs[n]);
    }
    trainer_rng.set_state(ckpt.trainer_rng);
    start_iter = ckpt.iteration;
  } else if (rc.stage == 2 && !rc.stage2_from_scratch) {
    const Checkpoint ckpt = load_checkpoint(rc.stage2_init);
    if (ckpt.stage != 1) {
      throw ConfigError("stage2.init must point at a stage-1 checkpoint");
    }
    load_params_only(nets, ckpt);
  }

  const bool fresh = rc.resume.empty();
  std::ofstream train_csv(rc.out_dir / "train.csv",
                          fresh ? std::ios::trunc : std::ios::app);
  std::ofstream events(rc.out_dir / "events.log", fresh ? std::ios::trunc : std::ios::app);
  if (!train_csv || !events) throw IoError("cannot open artifacts in " + rc.out_dir.string());
  if (fresh) train_csv << kTrainCsvHeader << '\n';

  for (EnvLane& lane : lanes) start_episode(lane, rc);

  RolloutBuffer buffer(T, N, kObsDim, kActionDim);
  Eigen::MatrixXd raw(kObsDim, N);

  TrainOutput out;
  Checkpoint final_ckpt = snapshot(nets, rc, start_iter, lanes, trainer_rng);

  for (int iter = start_iter; iter < rc.iters; ++iter) {
    buffer.behavior_log_std = nets.policy.log_std();
    buffer.done.setZero();
    buffer.timeout.setZero();
    buffer.term_v1.setZero();
    buffer.term_v2.setZero();

    RewardComponents comp_sum;
    double ep_r1_sum = 0.0, ep_r2_sum = 0.0;
    int episodes = 0, successes = 0;

    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < N; ++n) raw.col(n) = lanes[n].obs;
      const Eigen::MatrixXd normed = nets.obs_norm.normalize(raw);
      const Eigen::MatrixXd mean = nets.policy.mean(normed);
      const Eigen::MatrixXd v1_row = nets.value1.forward(normed);
      const Eigen::MatrixXd v2_row =
          single ? Eigen::MatrixXd::Zero(1, N) : nets.value2.forward(normed);

      for (int n = 0; n < N; ++n) {
        EnvLane& lane = lanes[n];
        const int idx = buffer.flat(t, n);
        const Eigen::MatrixXd action = nets.policy.sample(mean.col(n), lane.rng);
        buffer.obs.col(idx) = raw.col(n);
        buffer.actions.col(idx) = action.col(0);
        buffer.behavior_mean.col(idx) = mean.col(n);
        buffer.logp(idx) = nets.policy.log_prob(mean.col(n), action)(0);
        buffer.v1(t, n) = v1_row(0, n);
        buffer.v2(t, n) = v2_row(0, n);

        const FootstepEnv::StepResult sr = lane.env.step(action.col(0), lane.rng);
        buffer.r1(t, n) = sr.rewards.dense;
        buffer.r2(t, n) = sr.rewards.sparse;
        const RewardComponents& rcomp = sr.rewards.components;
        comp_sum.track_xy += rcomp.track_xy;
        comp_sum.track_yaw += rcomp.track_yaw;
        comp_sum.action_rate += rcomp.action_rate;
        comp_sum.smoothness += rcomp.smoothness;
        comp_sum.feet_distance += rcomp.feet_distance;
        comp_sum.feet_air_time += rcomp.feet_air_time;
        comp_sum.stand_still += rcomp.stand_still;
        lane.ep_r1 += sr.rewards.dense;
        lane.ep_r2 += sr.rewards.sparse;
        lane.ep_steps += 1;

        if (sr.done) {
          buffer.done(t, n) = 1;
          if (sr.info.timeout) {
            buffer.timeout(t, n) = 1;
            const Eigen::MatrixXd term_normed = nets.obs_norm.normalize(sr.obs);
            buffer.term_v1(t, n) = nets.value1.forward(term_normed)(0, 0);
            buffer.term_v2(t, n) =
                single ? 0.0 : nets.value2.forward(term_normed)(0, 0);
          }
          episodes += 1;
          successes += sr.info.success ? 1 : 0;
          ep_r1_sum += lane.ep_r1;
          ep_r2_sum += lane.ep_r2;
          const int level_before = rc.curriculum ? lane.slot.level : rc.fixed_level;
          if (rc.curriculum) curriculum_update(lane.slot, sr.info.success);
          events << "episode iter=" << iter << " env=" << n << " kind="
                 << to_string(lane.kind) << " level=" << level_before
                 << " result=" << result_name(sr.info) << " steps=" << lane.ep_steps
                 << " traverse=" << num(sr.info.traverse) << " r1=" << num(lane.ep_r1)
                 << " r2=" << num(lane.ep_r2)
                 << " new_level=" << (rc.curriculum ? lane.slot.level : rc.fixed_level)
                 << " streak=" << lane.slot.consecutive_successes
                 << " passed_all=" << (lane.slot.passed_all ? 1 : 0) << '\n';
          start_episode(lane, rc);
        } else {
          lane.obs = sr.obs;
        }
      }
    }

    for (int n = 0; n < N; ++n) raw.col(n) = lanes[n].obs;
    const Eigen::MatrixXd normed = nets.obs_norm.normalize(raw);
    buffer.boot_v1 = nets.value1.forward(normed).row(0).transpose();
    if (single) {
      buffer.boot_v2.setZero(N);
    } else {
      buffer.boot_v2 = nets.value2.forward(normed).row(0).transpose();
    }

    const UpdateStats stats = update(buffer, nets, rc.ppo, trainer_rng);
    nets.obs_norm.update(buffer.obs);

    double level_sum = 0.0;
    for (const EnvLane& lane : lanes) {
      level_sum += rc.curriculum ? lane.slot.level : rc.fixed_level;
    }
    const double mean_level = level_sum / N;
    const double steps_total = static_cast<double>(T) * N;

    train_csv << iter + 1 << ',' << static_cast<long long>(iter + 1) * T * N << ','
              << episodes << ',' << successes << ',' << num(mean_level) << ','
              << num(episodes > 0 ? ep_r1_sum / episodes : 0.0) << ','
              << num(episodes > 0 ? ep_r2_sum / episodes : 0.0) << ','
              << num(comp_sum.track_xy / steps_total) << ','
              << num(comp_sum.track_yaw / steps_total) << ','
              << num(comp_sum.action_rate / steps_total) << ','
              << num(comp_sum.smoothness / steps_total) << ','
              << num(comp_sum.feet_distance / steps_total) << ','
              << num(comp_sum.feet_air_time / steps_total) << ','
              << num(comp_sum.stand_still / steps_total) << ','
              << num(stats.policy_loss) << ',' << num(stats.value_loss1) << ','
              << num(stats.value_loss2) << ',' << num(stats.entropy) << ','
              << num(stats.mean_kl) << ',' << num(stats.lr) << ','
              << num(stats.grad_norm_policy) << ',' << num(stats.grad_norm_v1) << ','
              << num(stats.grad_norm_v2) << ',' << num(stats.adv1_contribution) << ','
              << num(stats.adv2_contribution) << '\n';

    if ((iter + 1) % rc.checkpoint_every == 0 || iter + 1 == rc.iters) {
      final_ckpt = snapshot(nets, rc, iter + 1, lanes, trainer_rng);
      save_checkpoint(rc.out_dir / ("ckpt_" + std::to_string(iter + 1) + ".bin"), final_ckpt);
      out.checkpoint_path = rc.out_dir / ("ckpt_" + std::to_string(iter + 1) + ".bin");
    }
  }

  if (out.checkpoint_path.empty()) {
    // Zero-iteration (or already-finished) run: still emit a loadable state.
    final_ckpt = snapshot(nets, rc, std::max(start_iter, rc.iters), lanes, trainer_rng);
    out.checkpoint_path = rc.out_dir / ("ckpt_" + std::to_string(final_ckpt.iteration) + ".bin");
    save_checkpoint(out.checkpoint_path, final_ckpt);
  }

  train_csv.flush();
  events.flush();
  if (!train_csv || !events) throw IoError("failed writing artifacts in " + rc.out_dir.string());

  double level_sum = 0.0;
  for (const EnvLane& lane : lanes) {
    level_sum += rc.curriculum ? lane.slot.level : rc.fixed_level;
  }
  out.checkpoint = std::move(final_ckpt);
  out.iterations = std::max(rc.iters - start_iter, 0);
  out.mean_terrain_level = level_sum / N;
  return out;
}

ActorFn make_actor(const Checkpoint& ckpt) {
  auto policy = std::make_shared<GaussianPolicy>();
  {
    Rng init_rng(ckpt.seed, Rng::stream_id("init/policy"));
    *policy = GaussianPolicy(ckpt.policy_spec, init_rng);
  }
  if (ckpt.policy_params.size() != policy->param_count()) {
    throw ConfigError("checkpoint policy parameter count does not match its shape header");
  }
  policy->set_flat_params(ckpt.policy_params);
  auto norm = std::make_shared<RunningNormalizer>(ckpt.policy_spec.input);
  norm->restore(ckpt.obs_norm.count, ckpt.obs_norm.mean, ckpt.obs_norm.var);
  return [policy, norm](const Eigen::VectorXd& obs) -> Eigen::Vector3d {
    const Eigen::MatrixXd normed = norm->normalize(obs);
    return Eigen::Vector3d(policy->mean(normed).col(0));
  };
}

EvalReport run_eval(const Checkpoint& ckpt, const EnvConfig& env_cfg, const EvalPlan& plan) {
  if (plan.episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  const ActorFn actor = make_actor(ckpt);

  std::ofstream csv;
  if (!plan.out_dir.empty()) {
    fs::create_directories(plan.out_dir);
    csv.open(plan.out_dir / "eval.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot open eval.csv in " + plan.out_dir.string());
    csv << kEvalCsvHeader << '\n';
  }

  EvalReport report;
  for (const TerrainKind kind : plan.kinds) {
    for (const int level : plan.levels) {
      const TerrainSpec spec = default_spec(kind, level, 0);
      std::vector<EvalEpisode> log;
      const std::uint64_t cell_seed =
          hash_seeds(plan.seed, static_cast<std::uint64_t>(kind) * 16u +
                                    static_cast<std::uint64_t>(level));
      const EvalMetrics metrics = evaluate(actor, spec, env_cfg, plan.episodes, cell_seed, &log);
      report.cells.push_back(EvalCell{kind, level, metrics});
      if (csv.is_open()) {
        for (const EvalEpisode& ep : log) {
          csv << to_string(kind) << ',' << level << ',' << ep.index << ','
              << (ep.success ? 1 : 0) << ',' << num(ep.traverse) << ',' << ep.steps << ','
              << ep.touchdowns << ',' << ep.bad_samples << ',' << ep.sole_samples << '\n';
        }
      }
    }
  }
  if (csv.is_open()) {
    csv.flush();
    if (!csv) throw IoError("failed writing eval.csv in " + plan.out_dir.string());
  }
  return report;
}

std::string format_eval_report(const EvalReport& report) {
  std::ostringstream out;
  out << "terrain            level  episodes  R_succ   R_trav   E_foot\n";
  for (const EvalCell& cell : report.cells) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %5d  %8d  %.4f   %.4f   %.4f%s\n",
                  to_string(cell.kind), cell.level, cell.metrics.episodes,
                  cell.metrics.r_succ, cell.metrics.r_trav, cell.metrics.e_foot,
                  cell.metrics.e_foot_empty ? " (no touchdowns)" : "");
    out << line;
  }
  return out.str();
}

AblationPlan ablation_plan_from(const Config& cfg) {
  AblationPlan plan;
  plan.base = run_config_from(cfg, 1);
  const std::string cells = cfg.get_string("ablate.cells", "ours,single_critic,no_soft");
  plan.cells.clear();
  std::stringstream ss(cells);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto begin = cell.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = cell.find_last_not_of(" \t");
    plan.cells.push_back(cell.substr(begin, end - begin + 1));
  }
  if (plan.cells.empty()) throw ConfigError("ablate.cells must list at least one cell");
  plan.seeds.clear();
  for (int s : parse_int_list(cfg.get_string("ablate.seeds", "1,2,3"), "ablate.seeds")) {
    if (s < 0) throw ConfigError("ablate.seeds must be non-negative");
    plan.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  plan.iters_stage1 = cfg.get_int("ablate.iters_stage1", plan.iters_stage1);
  plan.iters_stage2 = cfg.get_int("ablate.iters_stage2", plan.iters_stage2);
  plan.eval_kind = terrain_kind_from_string(cfg.get_string("ablate.eval_kind", "stepping_stones"));
  plan.eval_level = cfg.get_int("ablate.eval_level", plan.eval_level);
  plan.eval_episodes = cfg.get_int("ablate.eval_episodes", plan.eval_episodes);
  plan.eval_seed = cfg.get_u64("ablate.eval_seed", plan.eval_seed);
  plan.out_dir = cfg.get_string("out", plan.out_dir.string());
  return plan;
}

namespace {

void apply_cell(RunConfig& rc, const std::string& cell) {
  if (cell == "ours" || cell == "no_soft") return;  // no_soft is a flow change
  if (cell == "single_critic") {
    rc.ppo.single_critic = true;
    return;
  }
  if (cell == "foothold30" || cell == "foothold50" || cell == "foothold70") {
    rc.env.foothold.mode = FootholdMode::kBinaryPct;
    rc.env.foothold.binary_pct = std::stoi(cell.substr(8));
    return;
  }
  if (cell == "no_curriculum_medium") {
    rc.curriculum = false;
    rc.fixed_level = 6;
    return;
  }
  if (cell == "no_curriculum_hard") {
    rc.curriculum = false;
    rc.fixed_level = 8;
    return;
  }
  if (cell == "heading") {
    rc.env.heading_command = true;
    return;
  }
  throw ConfigError("unknown ablation cell '" + cell + "'");
}

}  // namespace

std::vector<AblationResult> run_ablation(const AblationPlan& plan) {
  if (plan.seeds.empty()) throw ConfigError("ablation needs at least one seed");
  fs::create_directories(plan.out_dir);
  std::ofstream csv(plan.out_dir / "ablate.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot open ablate.csv in " + plan.out_dir.string());
  csv << "cell,seed,episodes,r_succ,r_trav,e_foot,failed,error\n";

  std::vector<AblationResult> results;
  for (const std::string& cell : plan.cells) {
    for (const std::uint64_t seed : plan.seeds) {
      AblationResult res;
      res.cell = cell;
      res.seed = seed;
      try {
        RunConfig rc = plan.base;
        rc.seed = seed;
        rc.resume.clear();
        rc.stage2_init.clear();
        apply_cell(rc, cell);
        const fs::path cell_dir = plan.out_dir / cell / ("seed" + std::to_string(seed));

        Checkpoint final_ckpt;
        if (cell == "no_soft") {
          RunConfig s2 = rc;
          s2.stage = 2;
          s2.stage2_from_scratch = true;
          // Same total budget as the two-stage runs, all of it on hard
          // dynamics.
          s2.iters = plan.iters_stage1 + plan.iters_stage2;
          s2.out_dir = cell_dir / "stage2";
          TrainOutput o2 = train(s2);
          final_ckpt = std::move(o2.checkpoint);
          res.checkpoint_path = o2.checkpoint_path;
        } else {
          RunConfig s1 = rc;
          s1.stage = 1;
          s1.iters = plan.iters_stage1;
          s1.out_dir = cell_dir / "stage1";
          const TrainOutput o1 = train(s1);
          RunConfig s2 = rc;
          s2.stage = 2;
          s2.iters = plan.iters_stage2;
          s2.out_dir = cell_dir / "stage2";
          s2.stage2_init = o1.checkpoint_path;
          TrainOutput o2 = train(s2);
          final_ckpt = std::move(o2.checkpoint);
          res.checkpoint_path = o2.checkpoint_path;
        }

        EvalPlan ep;
        ep.kinds = {plan.eval_kind};
        ep.levels = {plan.eval_level};
        ep.episodes = plan.eval_episodes;
        ep.seed = plan.eval_seed;
        ep.out_dir = cell_dir;
        RunConfig eval_rc = plan.base;
        eval_rc.seed = seed;
        apply_cell(eval_rc, cell);
        const EvalReport report = run_eval(final_ckpt, eval_rc.env, ep);
        res.metrics = report.cells.front().metrics;
      } catch (const std::exception& e) {
        res.failed = true;
        res.error = e.what();
      }
      csv << res.cell << ',' << res.seed << ',' << res.metrics.episodes << ','
          << num(res.metrics.r_succ) << ',' << num(res.metrics.r_trav) << ','
          << num(res.metrics.e_foot) << ',' << (res.failed ? 1 : 0) << ',' << res.error << '\n';
      results.push_back(std::move(res));
    }
  }
  csv.flush();
  if (!csv) throw IoError("failed writing ablate.csv in " + plan.out_dir.string());
  return results;
}

std::string format_ablation_table(const std::vector<AblationResult>& results) {
  std::ostringstream out;
  out << "cell                     seeds  R_succ (mean/std)  R_trav (mean/std)  E_foot "
         "(mean/std)\n";
  std::vector<std::string> order;
  for (const AblationResult& res : results) {
    if (std::find(order.begin(), order.end(), res.cell) == order.end()) {
      order.push_back(res.cell);
    }
  }
  for (const std::string& cell : order) {
    std::vector<const AblationResult*> rows;
    for (const AblationResult& res : results) {
      if (res.cell == cell && !res.failed) rows.push_back(&res);
    }
    int failed = 0;
    for (const AblationResult& res : results) {
      if (res.cell == cell && res.failed) ++failed;
    }
    auto mean_std = [&rows](auto getter) {
      double mean = 0.0, var = 0.0;
      if (rows.empty()) return std::pair<double, double>{0.0, 0.0};
      for (const AblationResult* r : rows) mean += getter(*r);
      mean /= static_cast<double>(rows.size());
      for (const AblationResult* r : rows) {
        const double d = getter(*r) - mean;
        var += d * d;
      }
      var /= static_cast<double>(rows.size());
      return std::pair<double, double>{mean, std::sqrt(var)};
    };
    const auto succ = mean_std([](const AblationResult& r) { return r.metrics.r_succ; });
    const auto trav = mean_std([](const AblationResult& r) { return r.metrics.r_trav; });
    const auto foot = mean_std([](const AblationResult& r) { return r.metrics.e_foot; });
    char line[200];
    std::snprintf(line, sizeof(line), "%-24s %5zu  %.4f / %.4f    %.4f / %.4f    %.4f / %.4f",
                  cell.c_str(), rows.size(), succ.first, succ.second, trav.first, trav.second,
                  foot.first, foot.second);
    out << line;
    if (failed > 0) out << "  (" << failed << " failed)";
    out << '\n';
  }
  return out.str();
}

}  // namespace stonewalk
