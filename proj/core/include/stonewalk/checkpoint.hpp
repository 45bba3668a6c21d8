#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "stonewalk/nn.hpp"
#include "stonewalk/rng.hpp"

namespace stonewalk {

// Per-environment terrain curriculum state. Levels never demote before the
// environment has passed the hardest level once.
struct CurriculumSlot {
  std::int32_t level = 0;
  std::int32_t consecutive_successes = 0;
  bool passed_all = false;
};

struct AdamState {
  std::uint64_t t = 0;
  double lr = 1e-3;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

struct NormalizerState {
  double count = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

// Everything a training run needs to resume bit-exact: parameters, optimizer
// moments, observation statistics, curriculum, and rng lanes.
struct Checkpoint {
  std::int32_t stage = 1;
  std::int32_t iteration = 0;
  std::uint64_t seed = 0;
  bool single_critic = false;

  MlpSpec policy_spec;  // mean-net shape; log_std tail is appended to params
  MlpSpec value_spec;
  Eigen::VectorXd policy_params;
  Eigen::VectorXd value1_params;
  Eigen::VectorXd value2_params;  // empty in single-critic runs

  AdamState opt_policy;
  AdamState opt_value1;
  AdamState opt_value2;
  NormalizerState obs_norm;

  std::vector<CurriculumSlot> curriculum;
  Rng::State trainer_rng;
  std::vector<Rng::State> env_rngs;
};

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Human-readable summary (one key: value per line) for the CLI inspector.
std::string describe_checkpoint(const Checkpoint& ckpt);

}  // namespace stonewalk
