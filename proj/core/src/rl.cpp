#include "stonewalk/rl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& m, const std::vector<int>& idx, int begin,
                            int end) {
  Eigen::MatrixXd out(m.rows(), end - begin);
  for (int k = begin; k < end; ++k) {
    out.col(k - begin) = m.col(idx[k]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx, int begin,
                       int end) {
  Eigen::VectorXd out(end - begin);
  for (int k = begin; k < end; ++k) {
    out(k - begin) = v(idx[k]);
  }
  return out;
}

// Diagonal-Gaussian KL(old || new), averaged over the minibatch.
double mean_kl(const Eigen::MatrixXd& old_mean, const Eigen::VectorXd& old_log_std,
               const Eigen::MatrixXd& new_mean, const Eigen::VectorXd& new_log_std) {
  const Eigen::ArrayXd var_old = (2.0 * old_log_std.array()).exp();
  const Eigen::ArrayXd inv_var_new = (-2.0 * new_log_std.array()).exp();
  const Eigen::ArrayXXd sq = (old_mean - new_mean).array().square();
  const Eigen::ArrayXd log_ratio = new_log_std.array() - old_log_std.array();
  double total = 0.0;
  for (Eigen::Index b = 0; b < old_mean.cols(); ++b) {
    total += (log_ratio + (var_old + sq.col(b)) * inv_var_new * 0.5 - 0.5).sum();
  }
  return total / static_cast<double>(old_mean.cols());
}

}  // namespace

void PpoConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0 || lam < 0.0 || lam > 1.0) {
    throw ConfigError("ppo gamma/lam must lie in [0, 1]");
  }
  if (!(clip > 0.0)) throw ConfigError("ppo clip must be positive");
  if (w1 < 0.0 || w2 < 0.0) throw ConfigError("ppo advantage weights must be non-negative");
  if (epochs < 1 || minibatches < 1) throw ConfigError("ppo epochs/minibatches must be >= 1");
  if (steps_per_iter < 1 || num_envs < 1) throw ConfigError("ppo steps/envs must be >= 1");
  if (!(lr > 0.0) || !(lr_min > 0.0) || lr_max < lr_min) {
    throw ConfigError("ppo learning-rate bounds are inconsistent");
  }
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo max_grad_norm must be positive");
  if (entropy_coef < 0.0 || value_loss_coef < 0.0 || desired_kl < 0.0) {
    throw ConfigError("ppo coefficients must be non-negative");
  }
  if (init_log_std < kLogStdMin || init_log_std > kLogStdMax) {
    throw ConfigError("ppo init_log_std must lie within the policy's log-std clamp");
  }
}

RolloutBuffer::RolloutBuffer(int steps, int num_envs, int obs_dim, int act_dim)
    : steps(steps), num_envs(num_envs) {
  const int n = steps * num_envs;
  obs = Eigen::MatrixXd::Zero(obs_dim, n);
  actions = Eigen::MatrixXd::Zero(act_dim, n);
  behavior_mean = Eigen::MatrixXd::Zero(act_dim, n);
  behavior_log_std = Eigen::VectorXd::Zero(act_dim);
  logp = Eigen::VectorXd::Zero(n);
  r1 = Eigen::MatrixXd::Zero(steps, num_envs);
  r2 = Eigen::MatrixXd::Zero(steps, num_envs);
  v1 = Eigen::MatrixXd::Zero(steps, num_envs);
  v2 = Eigen::MatrixXd::Zero(steps, num_envs);
  done = MaskMatrix::Zero(steps, num_envs);
  timeout = MaskMatrix::Zero(steps, num_envs);
  term_v1 = Eigen::MatrixXd::Zero(steps, num_envs);
  term_v2 = Eigen::MatrixXd::Zero(steps, num_envs);
  boot_v1 = Eigen::VectorXd::Zero(num_envs);
  boot_v2 = Eigen::VectorXd::Zero(num_envs);
}

GaeResult compute_gae(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                      const Eigen::VectorXd& bootstrap, const MaskMatrix& dones,
                      const MaskMatrix& timeouts, const Eigen::MatrixXd& terminal_values,
                      double gamma, double lam) {
  const Eigen::Index T = rewards.rows();
  const Eigen::Index N = rewards.cols();
  if (values.rows() != T || values.cols() != N || dones.rows() != T || dones.cols() != N ||
      timeouts.rows() != T || timeouts.cols() != N || terminal_values.rows() != T ||
      terminal_values.cols() != N || bootstrap.size() != N) {
    throw ContractError("compute_gae: shape mismatch");
  }
  GaeResult result;
  result.advantages.resize(T, N);
  for (Eigen::Index n = 0; n < N; ++n) {
    double gae = 0.0;
    for (Eigen::Index t = T - 1; t >= 0; --t) {
      double v_next;
      if (dones(t, n)) {
        v_next = timeouts(t, n) ? terminal_values(t, n) : 0.0;
      } else {
        v_next = t + 1 < T ? values(t + 1, n) : bootstrap(n);
      }
      const double delta = rewards(t, n) + gamma * v_next - values(t, n);
      gae = delta + gamma * lam * (dones(t, n) ? 0.0 : 1.0) * gae;
      result.advantages(t, n) = gae;
    }
  }
  result.returns = result.advantages + values;
  return result;
}

GaeResult compute_gae(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                      const Eigen::VectorXd& bootstrap, const MaskMatrix& dones, double gamma,
                      double lam) {
  const MaskMatrix no_timeouts = MaskMatrix::Zero(rewards.rows(), rewards.cols());
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(rewards.rows(), rewards.cols());
  return compute_gae(rewards, values, bootstrap, dones, no_timeouts, zeros, gamma, lam);
}

Eigen::MatrixXd one_step_targets(const Eigen::MatrixXd& rewards, const Eigen::MatrixXd& values,
                                 const Eigen::VectorXd& bootstrap, const MaskMatrix& dones,
                                 const MaskMatrix& timeouts,
                                 const Eigen::MatrixXd& terminal_values, double gamma) {
  const Eigen::Index T = rewards.rows();
  const Eigen::Index N = rewards.cols();
  Eigen::MatrixXd targets(T, N);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index t = 0; t < T; ++t) {
      double v_next;
      if (dones(t, n)) {
        v_next = timeouts(t, n) ? terminal_values(t, n) : 0.0;
      } else {
        v_next = t + 1 < T ? values(t + 1, n) : bootstrap(n);
      }
      targets(t, n) = rewards(t, n) + gamma * v_next;
    }
  }
  return targets;
}

Eigen::VectorXd normalize_advantages(const Eigen::VectorXd& adv) {
  if (adv.size() < 2) {
    throw ContractError("advantage normalization requires a batch of at least 2");
  }
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().sum() / static_cast<double>(adv.size());
  const double std = std::max(std::sqrt(var), 1e-8);
  return (adv.array() - mean) / std;
}

Eigen::VectorXd fuse_advantages(const Eigen::VectorXd& adv1, const Eigen::VectorXd& adv2,
                                double w1, double w2) {
  if (adv1.size() != adv2.size()) {
    throw ContractError("fuse_advantages: group size mismatch");
  }
  return w1 * normalize_advantages(adv1) + w2 * normalize_advantages(adv2);
}

double value_loss(const Eigen::VectorXd& values, const Eigen::VectorXd& targets) {
  if (values.size() != targets.size()) {
    throw ContractError("value_loss: size mismatch");
  }
  return (values - targets).squaredNorm() / static_cast<double>(values.size());
}

double policy_loss(const Eigen::VectorXd& logp_new, const Eigen::VectorXd& logp_old,
                   const Eigen::VectorXd& adv, double clip) {
  if (logp_new.size() != logp_old.size() || logp_new.size() != adv.size()) {
    throw ContractError("policy_loss: size mismatch");
  }
  const Eigen::ArrayXd ratio = (logp_new - logp_old).array().exp();
  const Eigen::ArrayXd surr1 = ratio * adv.array();
  const Eigen::ArrayXd surr2 =
      ratio.max(1.0 - clip).min(1.0 + clip) * adv.array();
  return -surr1.min(surr2).mean();
}

PpoNets make_ppo_nets(int obs_dim, int act_dim, const std::vector<int>& hidden,
                      const PpoConfig& cfg, std::uint64_t seed) {
  PpoNets nets;
  MlpSpec policy_spec{obs_dim, hidden, act_dim};
  MlpSpec value_spec{obs_dim, hidden, 1};
  {
    Rng rng(seed, Rng::stream_id("init/policy"));
    nets.policy = GaussianPolicy(policy_spec, rng);
    nets.policy.log_std().setConstant(cfg.init_log_std);
  }
  {
    Rng rng(seed, Rng::stream_id("init/value1"));
    nets.value1 = Mlp(value_spec, std::sqrt(2.0), 1.0, rng);
  }
  if (!cfg.single_critic) {
    Rng rng(seed, Rng::stream_id("init/value2"));
    nets.value2 = Mlp(value_spec, std::sqrt(2.0), 1.0, rng);
  }
  nets.obs_norm = RunningNormalizer(obs_dim);
  nets.policy_opt = Adam(nets.policy.param_count(), cfg.lr);
  nets.value1_opt = Adam(nets.value1.param_count(), cfg.lr);
  nets.value2_opt = Adam(nets.value2.param_count(), cfg.lr);
  return nets;
}

UpdateStats update(const RolloutBuffer& buffer, PpoNets& nets, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  const int B = buffer.sample_count();
  if (B < 2) {
    throw ContractError("update requires at least 2 samples");
  }

  const Eigen::MatrixXd norm_obs = nets.obs_norm.normalize(buffer.obs);

  // Per-group GAE with behavior-time values; flattened to the sample order.
  Eigen::VectorXd adv1_raw(B), adv2_raw(B), ret1(B), ret2(B);
  Eigen::VectorXd adv_combined(B);
  double contrib1 = 0.0;
  double contrib2 = 0.0;
  if (cfg.single_critic) {
    const Eigen::MatrixXd merged = buffer.r1 + buffer.r2;
    const GaeResult g = compute_gae(merged, buffer.v1, buffer.boot_v1, buffer.done,
                                    buffer.timeout, buffer.term_v1, cfg.gamma, cfg.lam);
    const Eigen::MatrixXd targets =
        cfg.strict_td_targets ? one_step_targets(merged, buffer.v1, buffer.boot_v1, buffer.done,
                                                 buffer.timeout, buffer.term_v1, cfg.gamma)
                              : g.returns;
    for (int t = 0; t < buffer.steps; ++t) {
      for (int n = 0; n < buffer.num_envs; ++n) {
        const int k = buffer.flat(t, n);
        adv1_raw(k) = g.advantages(t, n);
        ret1(k) = targets(t, n);
      }
    }
    adv2_raw.setZero();
    ret2.setZero();
    adv_combined = cfg.w1 * normalize_advantages(adv1_raw);
    contrib1 = adv_combined.cwiseAbs().mean();
  } else {
    const GaeResult g1 = compute_gae(buffer.r1, buffer.v1, buffer.boot_v1, buffer.done,
                                     buffer.timeout, buffer.term_v1, cfg.gamma, cfg.lam);
    const GaeResult g2 = compute_gae(buffer.r2, buffer.v2, buffer.boot_v2, buffer.done,
                                     buffer.timeout, buffer.term_v2, cfg.gamma, cfg.lam);
    const Eigen::MatrixXd t1 =
        cfg.strict_td_targets ? one_step_targets(buffer.r1, buffer.v1, buffer.boot_v1,
                                                 buffer.done, buffer.timeout, buffer.term_v1,
                                                 cfg.gamma)
                              : g1.returns;
    const Eigen::MatrixXd t2 =
        cfg.strict_td_targets ? one_step_targets(buffer.r2, buffer.v2, buffer.boot_v2,
                                                 buffer.done, buffer.timeout, buffer.term_v2,
                                                 cfg.gamma)
                              : g2.returns;
    for (int t = 0; t < buffer.steps; ++t) {
      for (int n = 0; n < buffer.num_envs; ++n) {
        const int k = buffer.flat(t, n);
        adv1_raw(k) = g1.advantages(t, n);
        adv2_raw(k) = g2.advantages(t, n);
        ret1(k) = t1(t, n);
        ret2(k) = t2(t, n);
      }
    }
    const Eigen::VectorXd z1 = cfg.w1 * normalize_advantages(adv1_raw);
    const Eigen::VectorXd z2 = cfg.w2 * normalize_advantages(adv2_raw);
    adv_combined = z1 + z2;
    contrib1 = z1.cwiseAbs().mean();
    contrib2 = z2.cwiseAbs().mean();
  }

  UpdateStats stats;
  stats.adv1_contribution = contrib1;
  stats.adv2_contribution = contrib2;

  std::vector<int> perm(B);
  std::iota(perm.begin(), perm.end(), 0);
  double lr = nets.policy_opt.lr;
  int steps_done = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = B - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int begin = static_cast<int>(static_cast<std::int64_t>(B) * mb / cfg.minibatches);
      const int end = static_cast<int>(static_cast<std::int64_t>(B) * (mb + 1) / cfg.minibatches);
      const int bs = end - begin;
      if (bs < 1) continue;

      const Eigen::MatrixXd obs_mb = gather_cols(norm_obs, perm, begin, end);
      const Eigen::MatrixXd act_mb = gather_cols(buffer.actions, perm, begin, end);
      const Eigen::MatrixXd old_mean_mb = gather_cols(buffer.behavior_mean, perm, begin, end);
      const Eigen::VectorXd old_logp_mb = gather(buffer.logp, perm, begin, end);
      const Eigen::VectorXd ret1_mb = gather(ret1, perm, begin, end);
      const Eigen::VectorXd ret2_mb = gather(ret2, perm, begin, end);
      Eigen::VectorXd adv_mb;
      if (cfg.adv_norm_per_minibatch) {
        adv_mb = cfg.single_critic
                     ? Eigen::VectorXd(cfg.w1 * normalize_advantages(
                                           gather(adv1_raw, perm, begin, end)))
                     : fuse_advantages(gather(adv1_raw, perm, begin, end),
                                       gather(adv2_raw, perm, begin, end), cfg.w1, cfg.w2);
      } else {
        adv_mb = gather(adv_combined, perm, begin, end);
      }

      // Policy pass.
      const GaussianPolicy::Eval eval = nets.policy.evaluate(obs_mb, act_mb);
      const double kl =
          mean_kl(old_mean_mb, buffer.behavior_log_std, eval.mean, nets.policy.log_std());
      if (cfg.desired_kl > 0.0) {
        if (kl > 2.0 * cfg.desired_kl) {
          lr = std::max(cfg.lr_min, lr / 1.5);
        } else if (kl < cfg.desired_kl / 2.0 && kl > 0.0) {
          lr = std::min(cfg.lr_max, lr * 1.5);
        }
        nets.policy_opt.lr = lr;
        nets.value1_opt.lr = lr;
        nets.value2_opt.lr = lr;
      }

      const Eigen::ArrayXd ratio = (eval.log_prob - old_logp_mb).array().exp();
      const Eigen::ArrayXd surr1 = ratio * adv_mb.array();
      const Eigen::ArrayXd surr2 = ratio.max(1.0 - cfg.clip).min(1.0 + cfg.clip) * adv_mb.array();
      const double pol_loss = -surr1.min(surr2).mean();
      const double total_policy_objective = pol_loss - cfg.entropy_coef * eval.entropy;
      if (!std::isfinite(total_policy_objective)) {
        throw NumericError("non-finite policy loss in update");
      }

      // d(loss)/d(logp_b): the unclipped branch carries the gradient.
      Eigen::VectorXd logp_coef(bs);
      for (int b = 0; b < bs; ++b) {
        const bool unclipped = surr1(b) <= surr2(b);
        logp_coef(b) = unclipped ? -(ratio(b) * adv_mb(b)) / bs : 0.0;
      }
      Eigen::VectorXd pol_grad =
          nets.policy.backward(eval, act_mb, logp_coef, -cfg.entropy_coef);
      stats.grad_norm_policy += clip_global_norm(pol_grad, cfg.max_grad_norm);
      Eigen::VectorXd pol_params = nets.policy.flat_params();
      nets.policy_opt.step(pol_params, pol_grad);
      nets.policy.set_flat_params(pol_params);
      nets.policy.clamp_log_std();

      // Critic passes (independent nets, independent clipping/optimizers).
      auto train_value = [&](Mlp& net, Adam& opt, const Eigen::VectorXd& targets,
                             double& loss_acc, double& norm_acc) {
        Mlp::Cache cache;
        const Eigen::MatrixXd pred = net.forward(obs_mb, cache);
        const double loss =
            (pred.row(0).transpose() - targets).squaredNorm() / static_cast<double>(bs);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite value loss in update");
        }
        loss_acc += loss;
        Eigen::MatrixXd out_grad =
            cfg.value_loss_coef * 2.0 / bs * (pred.row(0).transpose() - targets).transpose();
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.param_count());
        net.backward(cache, out_grad, grad);
        norm_acc += clip_global_norm(grad, cfg.max_grad_norm);
        opt.step(net.params(), grad);
      };
      train_value(nets.value1, nets.value1_opt, ret1_mb, stats.value_loss1,
                  stats.grad_norm_v1);
      if (!cfg.single_critic) {
        train_value(nets.value2, nets.value2_opt, ret2_mb, stats.value_loss2,
                    stats.grad_norm_v2);
      }

      stats.mean_kl += kl;
      stats.policy_loss += pol_loss;
      stats.entropy += eval.entropy;
      ++steps_done;
    }
  }

  const double inv = steps_done > 0 ? 1.0 / steps_done : 0.0;
  stats.mean_kl *= inv;
  stats.policy_loss *= inv;
  stats.value_loss1 *= inv;
  stats.value_loss2 *= inv;
  stats.entropy *= inv;
  stats.grad_norm_policy *= inv;
  stats.grad_norm_v1 *= inv;
  stats.grad_norm_v2 *= inv;
  stats.lr = lr;
  return stats;
}

}  // namespace stonewalk
