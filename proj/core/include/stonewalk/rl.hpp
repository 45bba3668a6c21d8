#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "stonewalk/nn.hpp"
#include "stonewalk/rng.hpp"

namespace stonewalk {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.01;
  double desired_kl = 0.01;
  int epochs = 5;
  int minibatches = 4;
  int steps_per_iter = 100;
  int num_envs = 64;
  double w1 = 1.0;   // dense locomotion advantage weight
  double w2 = 0.25;  // sparse foothold advantage weight
  double value_loss_coef = 1.0;
  double lr = 1e-3;
  double lr_min = 1e-5;
  double lr_max = 1e-2;
  double max_grad_norm = 1.0;
  // Fresh policies start at this exploration width (std = e^init_log_std).
  // Strides are hard-clamped by the env, so a unit-width init saturates the
  // clamp on most draws and buries the tracking gradient in flat samples.
  double init_log_std = -1.0;
  bool single_critic = false;         // merged-reward ablation path
  bool strict_td_targets = false;     // one-step TD value targets
  bool adv_norm_per_minibatch = false;  // default: statistics over the iteration

  void validate() const;  // throws ConfigError
};

// Time-major rollout storage: flat sample index = t * num_envs + env.
struct RolloutBuffer {
  int steps = 0;
  int num_envs = 0;

  Eigen::MatrixXd obs;            // obs_dim x (steps*num_envs), raw (unnormalized)
  Eigen::MatrixXd actions;        // act_dim x (steps*num_envs)
  Eigen::MatrixXd behavior_mean;  // act_dim x (steps*num_envs), for the KL estimate
  Eigen::VectorXd behavior_log_std;  // act_dim, frozen at collection time
  Eigen::VectorXd logp;           // steps*num_envs
  Eigen::MatrixXd r1, r2;         // steps x num_envs
  Eigen::MatrixXd v1, v2;         // steps x num_envs, behavior-time value estimates
  MaskMatrix done;                // steps x num_envs
  MaskMatrix timeout;             // steps x num_envs, subset of done
  Eigen::MatrixXd term_v1, term_v2;  // steps x num_envs, V(s_T) where timeout is set
  Eigen::VectorXd boot_v1, boot_v2;  // num_envs, horizon bootstrap values

  RolloutBuffer() = default;
  RolloutBuffer(int steps, int num_envs, int obs_dim, int act_dim);

  int sample_count() const { return steps * num_envs; }
  int flat(int t, int n) const { return t * num_envs + n; }
};

struct GaeResult {
  Eigen::MatrixXd advantages;  // steps x num_envs
  Eigen::MatrixXd returns;     // lambda-returns (advantages + values)
};

// Backward-recursion GAE. Done steps cut the accumulation; a done step's
// next-state value is 0 for failures and terminal_values for timeouts; the
// horizon end bootstraps with `bootstrap` when the last step is not done.
GaeResult compute_gae(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                      const Eigen::VectorXd& bootstrap, const MaskMatrix& dones, double gamma,
                      double lam);
GaeResult compute_gae(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                      const Eigen::VectorXd& bootstrap, const MaskMatrix& dones,
                      const MaskMatrix& timeouts, const Eigen::MatrixXd& terminal_values,
                      double gamma, double lam);

// One-step TD targets r + gamma * V(next), honoring done/timeout bootstraps;
// used when strict_td_targets is set.
Eigen::MatrixXd one_step_targets(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                                 const Eigen::VectorXd& bootstrap, const MaskMatrix& dones,
                                 const MaskMatrix& timeouts,
                                 const Eigen::MatrixXd& terminal_values, double gamma);

// (x - mean) / max(population std, 1e-8) over the whole vector.
Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv);

// Weighted fusion of independently normalized group advantages.
Eigen::VectorXd fuse_advantages(const Eigen::VectorXd& adv1, const Eigen::VectorXd& adv2,
                                double w1, double w2);

// Mean squared error against fixed targets.
double value_loss(const Eigen::VectorXd& values, const Eigen::VectorXd& targets);

// Clipped-surrogate policy loss (negated objective, pre-entropy).
double policy_loss(const Eigen::VectorXd& logp_new, const Eigen::VectorXd& logp_old,
                   const Eigen::VectorXd& adv, double clip);

struct UpdateStats {
  double mean_kl = 0.0;
  double policy_loss = 0.0;
  double value_loss1 = 0.0;
  double value_loss2 = 0.0;
  double entropy = 0.0;
  double grad_norm_policy = 0.0;
  double grad_norm_v1 = 0.0;
  double grad_norm_v2 = 0.0;
  double lr = 0.0;             // learning rate after adaptation
  double adv1_contribution = 0.0;  // mean |w1 * normalized adv1|
  double adv2_contribution = 0.0;  // mean |w2 * normalized adv2|
};

// The networks and optimizers the update mutates. value2/value2_opt are
// empty in single-critic mode.
struct PpoNets {
  GaussianPolicy policy;
  Mlp value1;
  Mlp value2;
  RunningNormalizer obs_norm;
  Adam policy_opt;
  Adam value1_opt;
  Adam value2_opt;
};

PpoNets make_ppo_nets(int obs_dim, int act_dim, const std::vector<int>& hidden,
                      const PpoConfig& cfg, std::uint64_t seed);

// One PPO iteration over a full buffer: both GAE passes, per-group
// normalization and fusion, clipped-surrogate policy update with entropy
// bonus and KL-adaptive learning rate, independent critic regressions.
// Observation-normalizer statistics are frozen for the whole call; the
// caller feeds the raw batch to nets.obs_norm.update afterwards.
UpdateStats update(const RolloutBuffer& buffer, PpoNets& nets, const PpoConfig& cfg, Rng& rng);

}  // namespace stonewalk
