#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stonewalk/checkpoint.hpp"
#include "stonewalk/config.hpp"
#include "stonewalk/env.hpp"
#include "stonewalk/rl.hpp"
#include "stonewalk/terrain.hpp"

namespace stonewalk {

inline constexpr int kMaxLevel = 8;
inline constexpr int kAdvanceStreak = 3;

// Terrain curriculum rule: advance one level after three consecutive
// successes; failures reset the streak but never demote until the
// environment has passed the hardest level once, after which each success
// moves up a level and each failure moves down one.
void curriculum_update(CurriculumSlot& slot, bool success);

// One training run (either stage), fully specified.
struct RunConfig {
  int stage = 1;
  std::uint64_t seed = 0;
  int iters = 10000;
  int checkpoint_every = 100;
  std::filesystem::path out_dir = "run";
  std::filesystem::path resume;       // same-stage checkpoint to continue
  std::filesystem::path stage2_init;  // stage-1 checkpoint to fine-tune from
  bool stage2_from_scratch = false;   // skip the soft stage (ablation)

  bool curriculum = true;
  int fixed_level = 0;  // used when the curriculum is off

  std::vector<int> hidden = {64, 64};
  EnvConfig env;
  PpoConfig ppo;

  void validate() const;  // throws ConfigError
};

// Reads the flat config keys (ppo.*, env.*, foothold.*, noise.*, terrain.*,
// curriculum.*, train.*, net.*) into a RunConfig; unknown keys are the
// caller's to reject via Config::ensure_all_consumed.
RunConfig run_config_from(const Config& cfg, int stage);

struct TrainOutput {
  Checkpoint checkpoint;
  std::filesystem::path checkpoint_path;
  int iterations = 0;
  double mean_terrain_level = 0.0;
};

// Runs stage-1 (Soft dynamics on StonesEverywhere) or stage-2 (Hard dynamics
// on a 50/50 SteppingStones/BalancingBeams split) training; writes
// train.csv, events.log, and periodic ckpt_<iter>.bin under out_dir.
TrainOutput train(const RunConfig& rc);

// Deterministic mean-action controller for evaluation.
ActorFn make_actor(const Checkpoint& ckpt);

struct EvalPlan {
  std::vector<TerrainKind> kinds = {TerrainKind::kSteppingStones, TerrainKind::kBalancingBeams,
                                    TerrainKind::kSteppingBeams, TerrainKind::kGaps};
  std::vector<int> levels = {6, 8};  // medium, hard
  int episodes = 100;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;  // empty: no eval.csv written
};

struct EvalCell {
  TerrainKind kind = TerrainKind::kSteppingStones;
  int level = 0;
  EvalMetrics metrics;
};

struct EvalReport {
  std::vector<EvalCell> cells;
};

EvalReport run_eval(const Checkpoint& ckpt, const EnvConfig& env_cfg, const EvalPlan& plan);
std::string format_eval_report(const EvalReport& report);

// Ablation matrix. Cell names: "ours", "single_critic", "no_soft",
// "foothold30" / "foothold50" / "foothold70", "no_curriculum_medium",
// "no_curriculum_hard", "heading".
struct AblationPlan {
  std::vector<std::string> cells = {"ours", "single_critic", "no_soft"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  RunConfig base;  // template; stage/out_dir/seed are set per cell
  int iters_stage1 = 100;
  int iters_stage2 = 100;
  TerrainKind eval_kind = TerrainKind::kSteppingStones;
  int eval_level = 4;
  int eval_episodes = 50;
  std::uint64_t eval_seed = 900;
  std::filesystem::path out_dir = "ablate";
};

AblationPlan ablation_plan_from(const Config& cfg);

struct AblationResult {
  std::string cell;
  std::uint64_t seed = 0;
  EvalMetrics metrics;
  std::filesystem::path checkpoint_path;
  bool failed = false;       // cell crashed; error recorded, matrix continued
  std::string error;
};

std::vector<AblationResult> run_ablation(const AblationPlan& plan);
std::string format_ablation_table(const std::vector<AblationResult>& results);

}  // namespace stonewalk
