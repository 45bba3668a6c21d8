#include "stonewalk/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "stonewalk/common.hpp"

namespace stonewalk {
namespace {

constexpr char kMagic[9] = "SWCKPT01";

void write_vec(std::ostream& out, const Eigen::VectorXd& v) {
  binio::write_pod(out, static_cast<std::uint64_t>(v.size()));
  binio::write_array(out, v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd read_vec(std::istream& in) {
  const auto n = binio::read_pod<std::uint64_t>(in);
  if (n > (1u << 28)) throw IoError("checkpoint vector length is implausible");
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  binio::read_array(in, v.data(), static_cast<std::size_t>(n));
  return v;
}

void write_spec(std::ostream& out, const MlpSpec& spec) {
  binio::write_pod(out, static_cast<std::int32_t>(spec.input));
  binio::write_pod(out, static_cast<std::int32_t>(spec.output));
  binio::write_pod(out, static_cast<std::uint32_t>(spec.hidden.size()));
  for (int h : spec.hidden) binio::write_pod(out, static_cast<std::int32_t>(h));
}

MlpSpec read_spec(std::istream& in) {
  MlpSpec spec;
  spec.input = binio::read_pod<std::int32_t>(in);
  spec.output = binio::read_pod<std::int32_t>(in);
  const auto n = binio::read_pod<std::uint32_t>(in);
  if (n > 64) throw IoError("checkpoint layer count is implausible");
  spec.hidden.resize(n);
  for (auto& h : spec.hidden) h = binio::read_pod<std::int32_t>(in);
  if (spec.input <= 0 || spec.output <= 0) throw IoError("checkpoint spec has bad dims");
  for (int h : spec.hidden) {
    if (h <= 0) throw IoError("checkpoint spec has bad hidden size");
  }
  return spec;
}

void write_adam(std::ostream& out, const AdamState& st) {
  binio::write_pod(out, st.t);
  binio::write_pod(out, st.lr);
  write_vec(out, st.m);
  write_vec(out, st.v);
}

AdamState read_adam(std::istream& in) {
  AdamState st;
  st.t = binio::read_pod<std::uint64_t>(in);
  st.lr = binio::read_pod<double>(in);
  st.m = read_vec(in);
  st.v = read_vec(in);
  return st;
}

void write_rng(std::ostream& out, const Rng::State& st) {
  for (std::uint64_t w : st.words) binio::write_pod(out, w);
  binio::write_pod(out, st.cached_normal);
  binio::write_pod(out, st.has_cached_normal);
}

Rng::State read_rng(std::istream& in) {
  Rng::State st;
  for (auto& w : st.words) w = binio::read_pod<std::uint64_t>(in);
  st.cached_normal = binio::read_pod<double>(in);
  st.has_cached_normal = binio::read_pod<std::uint8_t>(in);
  return st;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  binio::write_magic(out, kMagic);
  binio::write_pod(out, ckpt.stage);
  binio::write_pod(out, ckpt.iteration);
  binio::write_pod(out, ckpt.seed);
  binio::write_pod(out, static_cast<std::uint8_t>(ckpt.single_critic ? 1 : 0));

  write_spec(out, ckpt.policy_spec);
  write_spec(out, ckpt.value_spec);
  write_vec(out, ckpt.policy_params);
  write_vec(out, ckpt.value1_params);
  write_vec(out, ckpt.value2_params);

  write_adam(out, ckpt.opt_policy);
  write_adam(out, ckpt.opt_value1);
  write_adam(out, ckpt.opt_value2);

  binio::write_pod(out, ckpt.obs_norm.count);
  write_vec(out, ckpt.obs_norm.mean);
  write_vec(out, ckpt.obs_norm.var);

  binio::write_pod(out, static_cast<std::uint32_t>(ckpt.curriculum.size()));
  for (const CurriculumSlot& slot : ckpt.curriculum) {
    binio::write_pod(out, slot.level);
    binio::write_pod(out, slot.consecutive_successes);
    binio::write_pod(out, static_cast<std::uint8_t>(slot.passed_all ? 1 : 0));
  }

  write_rng(out, ckpt.trainer_rng);
  binio::write_pod(out, static_cast<std::uint32_t>(ckpt.env_rngs.size()));
  for (const Rng::State& st : ckpt.env_rngs) write_rng(out, st);

  if (!out) throw IoError("failed to write checkpoint stream");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  save_checkpoint(out, ckpt);
  out.flush();
  if (!out) throw IoError("failed to write checkpoint: " + path.string());
}

Checkpoint load_checkpoint(std::istream& in) {
  binio::expect_magic(in, kMagic, "checkpoint");
  Checkpoint ckpt;
  ckpt.stage = binio::read_pod<std::int32_t>(in);
  ckpt.iteration = binio::read_pod<std::int32_t>(in);
  ckpt.seed = binio::read_pod<std::uint64_t>(in);
  ckpt.single_critic = binio::read_pod<std::uint8_t>(in) != 0;

  ckpt.policy_spec = read_spec(in);
  ckpt.value_spec = read_spec(in);
  ckpt.policy_params = read_vec(in);
  ckpt.value1_params = read_vec(in);
  ckpt.value2_params = read_vec(in);

  ckpt.opt_policy = read_adam(in);
  ckpt.opt_value1 = read_adam(in);
  ckpt.opt_value2 = read_adam(in);

  ckpt.obs_norm.count = binio::read_pod<double>(in);
  ckpt.obs_norm.mean = read_vec(in);
  ckpt.obs_norm.var = read_vec(in);

  const auto n_envs = binio::read_pod<std::uint32_t>(in);
  if (n_envs > (1u << 20)) throw IoError("checkpoint env count is implausible");
  ckpt.curriculum.resize(n_envs);
  for (CurriculumSlot& slot : ckpt.curriculum) {
    slot.level = binio::read_pod<std::int32_t>(in);
    slot.consecutive_successes = binio::read_pod<std::int32_t>(in);
    slot.passed_all = binio::read_pod<std::uint8_t>(in) != 0;
  }

  ckpt.trainer_rng = read_rng(in);
  const auto n_rng = binio::read_pod<std::uint32_t>(in);
  if (n_rng > (1u << 20)) throw IoError("checkpoint rng count is implausible");
  ckpt.env_rngs.resize(n_rng);
  for (Rng::State& st : ckpt.env_rngs) st = read_rng(in);

  if (ckpt.stage != 1 && ckpt.stage != 2) throw IoError("checkpoint stage must be 1 or 2");
  if (ckpt.iteration < 0) throw IoError("checkpoint iteration must be non-negative");
  if (!ckpt.policy_params.allFinite() || !ckpt.value1_params.allFinite() ||
      !ckpt.value2_params.allFinite()) {
    throw IoError("checkpoint parameters contain non-finite values");
  }
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return load_checkpoint(in);
}

std::string describe_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream out;
  out << "stage: " << ckpt.stage << '\n';
  out << "iteration: " << ckpt.iteration << '\n';
  out << "seed: " << ckpt.seed << '\n';
  out << "critics: " << (ckpt.single_critic ? "single" : "double") << '\n';
  auto shape = [](const MlpSpec& spec) {
    std::ostringstream s;
    s << spec.input;
    for (int h : spec.hidden) s << " -> " << h;
    s << " -> " << spec.output;
    return s.str();
  };
  out << "policy: " << shape(ckpt.policy_spec) << " (" << ckpt.policy_params.size()
      << " params incl. log_std)" << '\n';
  out << "value: " << shape(ckpt.value_spec) << " x" << (ckpt.single_critic ? 1 : 2) << '\n';
  out << "adam steps: policy " << ckpt.opt_policy.t << ", value1 " << ckpt.opt_value1.t
      << ", value2 " << ckpt.opt_value2.t << '\n';
  out << "lr: " << ckpt.opt_policy.lr << '\n';
  out << "obs normalizer count: " << ckpt.obs_norm.count << '\n';
  out << "envs: " << ckpt.curriculum.size() << '\n';
  if (!ckpt.curriculum.empty()) {
    double level_sum = 0.0;
    int passed = 0;
    for (const CurriculumSlot& slot : ckpt.curriculum) {
      level_sum += slot.level;
      passed += slot.passed_all ? 1 : 0;
    }
    out << "mean terrain level: " << level_sum / static_cast<double>(ckpt.curriculum.size())
        << '\n';
    out << "envs passed all levels: " << passed << '\n';
  }
  return out.str();
}

}  // namespace stonewalk
