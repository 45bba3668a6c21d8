#include "stonewalk/nn.hpp"

#include <cmath>

#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

Eigen::MatrixXd elu(const Eigen::MatrixXd& x) {
  return (x.array() > 0.0).select(x.array(), x.array().exp() - 1.0);
}

// ELU derivative from (pre, post) pairs: 1 above zero, exp(x) = post + 1 below.
Eigen::ArrayXXd elu_grad(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post) {
  return (pre.array() > 0.0).select(Eigen::ArrayXXd::Ones(pre.rows(), pre.cols()),
                                    post.array() + 1.0);
}

// Orthogonal matrix via QR of a standard-normal draw, with the sign of R's
// diagonal folded in so the distribution is uniform over the orthogonal group.
Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);
  Eigen::MatrixXd a(n, m);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      a(r, c) = rng.normal();
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(m);
  for (int c = 0; c < m; ++c) {
    if (r(c, c) < 0.0) {
      q.col(c) = -q.col(c);
    }
  }
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

}  // namespace

void Mlp::build_layout() {
  in_sizes_.clear();
  out_sizes_.clear();
  weight_offsets_.clear();
  bias_offsets_.clear();
  int prev = spec_.input;
  int offset = 0;
  auto add_layer = [&](int out) {
    in_sizes_.push_back(prev);
    out_sizes_.push_back(out);
    weight_offsets_.push_back(offset);
    offset += out * prev;
    bias_offsets_.push_back(offset);
    offset += out;
    prev = out;
  };
  for (int h : spec_.hidden) add_layer(h);
  add_layer(spec_.output);
  params_ = Eigen::VectorXd::Zero(offset);
}

Mlp::Mlp(MlpSpec spec, double hidden_gain, double output_gain, Rng& rng) : spec_(std::move(spec)) {
  if (spec_.input <= 0 || spec_.output <= 0) {
    throw ContractError("Mlp requires positive input/output dims");
  }
  for (int h : spec_.hidden) {
    if (h <= 0) throw ContractError("Mlp hidden sizes must be positive");
  }
  build_layout();
  const int layers = layer_count();
  for (int l = 0; l < layers; ++l) {
    const double gain = l + 1 == layers ? output_gain : hidden_gain;
    weight(l) = orthogonal(out_sizes_[l], in_sizes_[l], gain, rng);
    bias(l).setZero();
  }
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + weight_offsets_[layer], out_sizes_[layer], in_sizes_[layer]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + weight_offsets_[layer], out_sizes_[layer], in_sizes_[layer]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offsets_[layer], out_sizes_[layer]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offsets_[layer], out_sizes_[layer]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  if (input.rows() != spec_.input) {
    throw ContractError("Mlp forward: input dim mismatch");
  }
  Eigen::MatrixXd a = input;
  const int layers = layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::MatrixXd pre = (weight(l) * a).colwise() + bias(l);
    a = l + 1 == layers ? std::move(pre) : elu(pre);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache& cache) const {
  if (input.rows() != spec_.input) {
    throw ContractError("Mlp forward: input dim mismatch");
  }
  cache.input = input;
  cache.pre.clear();
  cache.act.clear();
  const Eigen::MatrixXd* a = &cache.input;
  const int layers = layer_count();
  for (int l = 0; l < layers; ++l) {
    cache.pre.push_back((weight(l) * (*a)).colwise() + bias(l));
    if (l + 1 == layers) {
      return cache.pre.back();
    }
    cache.act.push_back(elu(cache.pre.back()));
    a = &cache.act.back();
  }
  throw ContractError("Mlp has no layers");
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& output_grad,
                              Eigen::VectorXd& grad) const {
  const int layers = layer_count();
  if (static_cast<int>(cache.pre.size()) != layers) {
    throw ContractError("Mlp backward: cache does not match network");
  }
  if (grad.size() != params_.size()) {
    throw ContractError("Mlp backward: gradient buffer size mismatch");
  }
  Eigen::MatrixXd g = output_grad;
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& layer_in = l == 0 ? cache.input : cache.act[l - 1];
    Eigen::Map<Eigen::MatrixXd> dw(grad.data() + weight_offsets_[l], out_sizes_[l], in_sizes_[l]);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + bias_offsets_[l], out_sizes_[l]);
    dw.noalias() += g * layer_in.transpose();
    db.noalias() += g.rowwise().sum();
    Eigen::MatrixXd below = weight(l).transpose() * g;
    if (l == 0) {
      return below;
    }
    g = below.array() * elu_grad(cache.pre[l - 1], cache.act[l - 1]);
  }
  throw ContractError("Mlp has no layers");
}

GaussianPolicy::GaussianPolicy(MlpSpec spec, Rng& rng)
    : mean_net_(std::move(spec), std::sqrt(2.0), 0.01, rng),
      log_std_(Eigen::VectorXd::Zero(mean_net_.spec().output)) {}

Eigen::VectorXd GaussianPolicy::flat_params() const {
  Eigen::VectorXd flat(param_count());
  flat.head(mean_net_.param_count()) = mean_net_.params();
  flat.tail(action_dim()) = log_std_;
  return flat;
}

void GaussianPolicy::set_flat_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count()) {
    throw ContractError("GaussianPolicy: flat parameter size mismatch");
  }
  mean_net_.params() = flat.head(mean_net_.param_count());
  log_std_ = flat.tail(action_dim());
}

void GaussianPolicy::clamp_log_std() {
  log_std_ = log_std_.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

Eigen::MatrixXd GaussianPolicy::mean(const Eigen::MatrixXd& obs) const {
  return mean_net_.forward(obs);
}

Eigen::MatrixXd GaussianPolicy::sample(const Eigen::MatrixXd& mean, Rng& rng) const {
  Eigen::MatrixXd actions(mean.rows(), mean.cols());
  const Eigen::VectorXd std = log_std_.array().exp();
  for (Eigen::Index b = 0; b < mean.cols(); ++b) {
    for (Eigen::Index d = 0; d < mean.rows(); ++d) {
      actions(d, b) = mean(d, b) + std(d) * rng.normal();
    }
  }
  return actions;
}

Eigen::VectorXd GaussianPolicy::log_prob(const Eigen::MatrixXd& mean,
                                         const Eigen::MatrixXd& actions) const {
  const Eigen::ArrayXd inv_std = (-log_std_.array()).exp();
  const Eigen::ArrayXXd u = (actions - mean).array().colwise() * inv_std;
  const double base = log_std_.sum() + 0.5 * kLog2Pi * action_dim();
  return (-0.5 * u.square().colwise().sum() - base).transpose();
}

double GaussianPolicy::entropy() const {
  return log_std_.sum() + 0.5 * (1.0 + kLog2Pi) * action_dim();
}

GaussianPolicy::Eval GaussianPolicy::evaluate(const Eigen::MatrixXd& obs,
                                              const Eigen::MatrixXd& actions) const {
  Eval eval;
  eval.mean = mean_net_.forward(obs, eval.cache);
  eval.log_prob = log_prob(eval.mean, actions);
  eval.entropy = entropy();
  return eval;
}

Eigen::VectorXd GaussianPolicy::backward(const Eval& eval, const Eigen::MatrixXd& actions,
                                         const Eigen::VectorXd& logp_coef,
                                         double entropy_coef) const {
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(param_count());
  const Eigen::ArrayXd inv_var = (-2.0 * log_std_.array()).exp();
  const Eigen::ArrayXXd diff = (actions - eval.mean).array();
  // d logp / d mean = (a - mu) / sigma^2, scaled per sample by logp_coef.
  Eigen::MatrixXd mean_grad =
      (diff.colwise() * inv_var).rowwise() * logp_coef.transpose().array();
  Eigen::VectorXd net_grad(mean_net_.param_count());
  net_grad.setZero();
  mean_net_.backward(eval.cache, mean_grad, net_grad);
  flat.head(mean_net_.param_count()) = net_grad;
  // d logp / d log_std = u^2 - 1; d entropy / d log_std = 1.
  const Eigen::ArrayXXd u2 = (diff.colwise() * (-log_std_.array()).exp()).square();
  flat.tail(action_dim()) =
      (u2.matrix() * logp_coef).array() - logp_coef.sum() + entropy_coef;
  return flat;
}

Adam::Adam(int param_count, double lr)
    : lr(lr), m_(Eigen::VectorXd::Zero(param_count)), v_(Eigen::VectorXd::Zero(param_count)) {}

void Adam::restore(std::uint64_t t, const Eigen::VectorXd& m, const Eigen::VectorXd& v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw ContractError("Adam restore: moment size mismatch");
  }
  t_ = t;
  m_ = m;
  v_ = v;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw ContractError("Adam step: size mismatch");
  }
  if (!grad.allFinite()) {
    throw NumericError("non-finite gradient in optimizer step");
  }
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_.array() + (1.0 - kBeta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  params.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + kEps);
}

double clip_global_norm(Eigen::VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) {
    grad *= max_norm / norm;
  }
  return norm;
}

RunningNormalizer::RunningNormalizer(int dim)
    : mean_(Eigen::VectorXd::Zero(dim)), var_(Eigen::VectorXd::Ones(dim)) {}

void RunningNormalizer::restore(double count, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& var) {
  if (mean.size() != mean_.size() || var.size() != var_.size()) {
    throw ContractError("RunningNormalizer restore: size mismatch");
  }
  count_ = count;
  mean_ = mean;
  var_ = var;
}

void RunningNormalizer::update(const Eigen::MatrixXd& batch) {
  if (batch.rows() != mean_.size()) {
    throw ContractError("RunningNormalizer update: dim mismatch");
  }
  const double nb = static_cast<double>(batch.cols());
  if (nb == 0.0) return;
  const Eigen::VectorXd mb = batch.rowwise().mean();
  const Eigen::VectorXd vb =
      (batch.colwise() - mb).array().square().rowwise().sum() / nb;
  if (count_ == 0.0) {
    count_ = nb;
    mean_ = mb;
    var_ = vb;
    return;
  }
  const double total = count_ + nb;
  const Eigen::VectorXd delta = mb - mean_;
  mean_ += delta * (nb / total);
  var_ = (count_ * var_ + nb * vb).array() / total +
         delta.array().square() * (count_ * nb / (total * total));
  count_ = total;
}

Eigen::MatrixXd RunningNormalizer::normalize(const Eigen::MatrixXd& batch) const {
  if (batch.rows() != mean_.size()) {
    throw ContractError("RunningNormalizer normalize: dim mismatch");
  }
  Eigen::MatrixXd z;
  if (count_ == 0.0) {
    z = batch;
  } else {
    const Eigen::ArrayXd inv = 1.0 / (var_.array() + kVarEps).sqrt();
    z = (batch.colwise() - mean_).array().colwise() * inv;
  }
  return z.cwiseMax(-kClip).cwiseMin(kClip);
}

}  // namespace stonewalk
