#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stonewalk/rng.hpp"

namespace stonewalk {

struct MlpSpec {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;

  bool operator==(const MlpSpec& other) const = default;
};

// Fully-connected net with ELU hidden activations and a linear output layer.
// Parameters live in one flat vector (per-layer weight then bias, layers in
// order, weights column-major) so the optimizer, gradient clipping, and the
// checkpoint format all see plain contiguous arrays.
class Mlp {
 public:
  Mlp() = default;
  // Orthogonal init: hidden layers scaled by hidden_gain, output layer by
  // output_gain; biases zero.
  Mlp(MlpSpec spec, double hidden_gain, double output_gain, Rng& rng);

  const MlpSpec& spec() const { return spec_; }
  int layer_count() const { return static_cast<int>(spec_.hidden.size()) + 1; }
  int param_count() const { return static_cast<int>(params_.size()); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  struct Cache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;  // pre-activation per layer
    std::vector<Eigen::MatrixXd> act;  // post-activation per hidden layer
  };

  // Inputs/outputs hold one sample per column.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache& cache) const;

  // Accumulates parameter gradients into `grad` (flat, same layout as
  // params) and returns the gradient w.r.t. the input.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                           Eigen::VectorXd& grad) const;

 private:
  MlpSpec spec_;
  std::vector<int> weight_offsets_;
  std::vector<int> bias_offsets_;
  std::vector<int> in_sizes_;
  std::vector<int> out_sizes_;
  Eigen::VectorXd params_;

  void build_layout();
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal-Gaussian policy: an MLP mean head plus a state-independent,
// learnable log-std vector (init 0, clamped to [-5, 2] after each update).
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(MlpSpec spec, Rng& rng);

  const Mlp& mean_net() const { return mean_net_; }
  Mlp& mean_net() { return mean_net_; }
  const Eigen::VectorXd& log_std() const { return log_std_; }
  Eigen::VectorXd& log_std() { return log_std_; }
  int action_dim() const { return mean_net_.spec().output; }
  int param_count() const { return mean_net_.param_count() + action_dim(); }

  // Flat view for the optimizer: [mean-net params..., log_std...].
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& flat);
  void clamp_log_std();

  Eigen::MatrixXd mean(const Eigen::MatrixXd& obs) const;
  // One action per column: mean + std * z with z drawn per element.
  Eigen::MatrixXd sample(const Eigen::MatrixXd& mean, Rng& rng) const;
  // Density of already-taken actions under the current parameters.
  Eigen::VectorXd log_prob(const Eigen::MatrixXd& mean, const Eigen::MatrixXd& actions) const;
  // Entropy is state-independent: one scalar for any observation.
  double entropy() const;

  struct Eval {
    Eigen::MatrixXd mean;
    Eigen::VectorXd log_prob;
    double entropy = 0.0;
    Mlp::Cache cache;
  };
  Eval evaluate(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const;

  // Backprop d(loss)/d(log_prob_b) = logp_coef[b] and d(loss)/d(entropy) =
  // entropy_coef through the density into flat gradients.
  Eigen::VectorXd backward(const Eval& eval, const Eigen::MatrixXd& actions,
                           const Eigen::VectorXd& logp_coef, double entropy_coef) const;

 private:
  Mlp mean_net_;
  Eigen::VectorXd log_std_;
};

// Standard Adam with bias correction; lr is public so the KL-adaptive rule
// can retune it between minibatches.
class Adam {
 public:
  Adam() = default;
  Adam(int param_count, double lr);

  double lr = 1e-3;
  std::uint64_t step_count() const { return t_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::VectorXd& v() const { return v_; }
  void restore(std::uint64_t t, const Eigen::VectorXd& m, const Eigen::VectorXd& v);

  // Throws NumericError on non-finite gradients.
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  std::uint64_t t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

// Scales grad to max_norm when its L2 norm exceeds it; returns the pre-clip
// norm.
double clip_global_norm(Eigen::VectorXd& grad, double max_norm);

// Running observation normalizer (Welford/Chan batch merge), shared by the
// policy and both critics. Output clipped to [-clip, clip].
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim);

  int dim() const { return static_cast<int>(mean_.size()); }
  double count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& var() const { return var_; }
  void restore(double count, const Eigen::VectorXd& mean, const Eigen::VectorXd& var);

  // One sample per column.
  void update(const Eigen::MatrixXd& batch);
  Eigen::MatrixXd normalize(const Eigen::MatrixXd& batch) const;

  static constexpr double kClip = 10.0;
  static constexpr double kVarEps = 1e-8;

 private:
  double count_ = 0.0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd var_;  // population variance
};

}  // namespace stonewalk
