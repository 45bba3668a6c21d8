#include "stonewalk/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stonewalk/common.hpp"
#include "stonewalk/config.hpp"
#include "stonewalk/harness.hpp"
#include "stonewalk/terrain_io.hpp"

namespace stonewalk {
namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string seed;
  std::string out;
  std::string iters;
  std::string resume;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (flat key = value)");
  cmd->add_option("--seed", args.seed, "Master seed (overrides config key 'seed')");
  cmd->add_option("--out", args.out, "Output directory (overrides config key 'out')");
  cmd->add_option("--iters", args.iters, "Iteration count (overrides 'train.iters')");
  cmd->add_option("--resume", args.resume, "Checkpoint to resume (overrides 'resume')");
  cmd->add_option("--set", args.sets, "Override any config key, key=value (repeatable)");
}

Config build_config(const CommonArgs& args) {
  Config cfg;
  if (!args.config_path.empty()) cfg = Config::load(args.config_path);
  for (const std::string& assignment : args.sets) cfg.set_override(assignment);
  if (!args.seed.empty()) cfg.set("seed", args.seed);
  if (!args.out.empty()) cfg.set("out", args.out);
  if (!args.iters.empty()) cfg.set("train.iters", args.iters);
  if (!args.resume.empty()) cfg.set("resume", args.resume);
  return cfg;
}

std::vector<TerrainKind> parse_kinds(const std::string& text) {
  std::vector<TerrainKind> kinds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = item.find_last_not_of(" \t");
    kinds.push_back(terrain_kind_from_string(item.substr(begin, end - begin + 1)));
  }
  if (kinds.empty()) throw ConfigError("eval.kinds must list at least one terrain kind");
  return kinds;
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto begin = item.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    levels.push_back(std::stoi(item));
  }
  if (levels.empty()) throw ConfigError("eval.levels must list at least one level");
  for (int level : levels) {
    if (level < 0 || level > kMaxLevel) throw ConfigError("eval.levels entries must be in 0..8");
  }
  return levels;
}

int run_train(const CommonArgs& args, int stage) {
  Config cfg = build_config(args);
  const RunConfig rc = run_config_from(cfg, stage);
  cfg.ensure_all_consumed();
  const TrainOutput out = train(rc);
  std::cout << "stage " << stage << " finished: " << out.iterations << " iterations, "
            << "mean terrain level " << out.mean_terrain_level << ", checkpoint "
            << out.checkpoint_path.string() << '\n';
  return 0;
}

int run_eval_cmd(const CommonArgs& args, const std::string& ckpt_flag) {
  Config cfg = build_config(args);
  const RunConfig rc = run_config_from(cfg, 1);
  std::string ckpt_path = ckpt_flag;
  if (ckpt_path.empty()) ckpt_path = cfg.get_string("eval.checkpoint", "");
  if (ckpt_path.empty()) {
    throw ConfigError("eval needs a checkpoint (--ckpt or eval.checkpoint)");
  }
  EvalPlan plan;
  plan.kinds = parse_kinds(cfg.get_string(
      "eval.kinds", "stepping_stones,balancing_beams,stepping_beams,gaps"));
  plan.levels = parse_levels(cfg.get_string("eval.levels", "6,8"));
  plan.episodes = cfg.get_int("eval.episodes", 100);
  plan.seed = cfg.get_u64("eval.seed", rc.seed);
  plan.out_dir = rc.out_dir;
  cfg.ensure_all_consumed();

  const Checkpoint ckpt = load_checkpoint(fs::path(ckpt_path));
  const EvalReport report = run_eval(ckpt, rc.env, plan);
  std::cout << format_eval_report(report);
  return 0;
}

int run_ablate(const CommonArgs& args) {
  Config cfg = build_config(args);
  AblationPlan plan = ablation_plan_from(cfg);
  if (!args.iters.empty()) {
    // --iters caps both stages for quick smoke runs.
    plan.iters_stage1 = cfg.get_int("train.iters", plan.iters_stage1);
    plan.iters_stage2 = plan.iters_stage1;
  }
  cfg.ensure_all_consumed();
  const std::vector<AblationResult> results = run_ablation(plan);
  std::cout << format_ablation_table(results);
  int failed = 0;
  for (const AblationResult& res : results) failed += res.failed ? 1 : 0;
  if (failed > 0) std::cout << failed << " cell runs failed; see ablate.csv\n";
  return 0;
}

int run_gen_terrain(const CommonArgs& args) {
  Config cfg = build_config(args);
  const TerrainKind kind = terrain_kind_from_string(
      cfg.get_string("terrain.kind", "stepping_stones"));
  const int level = cfg.get_int("terrain.level", 0);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  const fs::path out_dir = cfg.get_string("out", "terrains");
  const bool ascii = cfg.get_bool("terrain.ascii", false);
  TerrainSpec spec = default_spec(kind, level, seed);
  spec.cell_size = cfg.get_double("terrain.cell_size", spec.cell_size);
  spec.extent_x = cfg.get_double("terrain.extent_x", spec.extent_x);
  spec.extent_y = cfg.get_double("terrain.extent_y", spec.extent_y);
  cfg.ensure_all_consumed();

  const TerrainPair pair = generate(spec);
  fs::create_directories(out_dir);
  std::ostringstream stem;
  stem << to_string(kind) << "_l" << level << "_s" << seed;
  const fs::path task_path = out_dir / (stem.str() + ".hgt");
  const fs::path flat_path = out_dir / (stem.str() + "_flat.hgt");
  save_heightfield(task_path.string(), spec, pair.task);
  save_heightfield(flat_path.string(), spec, pair.flat);

  long safe_cells = 0;
  for (std::uint8_t s : pair.task.safe) safe_cells += s ? 1 : 0;
  std::cout << "wrote " << task_path.string() << " and " << flat_path.string() << '\n'
            << "grid " << pair.task.rows << "x" << pair.task.cols << ", safe fraction "
            << static_cast<double>(safe_cells) / static_cast<double>(pair.task.safe.size())
            << '\n';
  if (ascii) std::cout << to_ascii(pair.task);
  return 0;
}

int run_inspect(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(fs::path(path));
  std::cout << describe_checkpoint(ckpt);
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Sparse-foothold footstep-walker RL workbench"};
  app.require_subcommand(1);

  CommonArgs train1_args, train2_args, eval_args, ablate_args, gen_args;
  std::string eval_ckpt, inspect_path;

  CLI::App* train1 = app.add_subcommand("train-stage1",
                                        "Soft-dynamics pretraining on stone fields");
  add_common(train1, train1_args);
  CLI::App* train2 = app.add_subcommand("train-stage2",
                                        "Hard-dynamics fine-tuning on sparse strips");
  add_common(train2, train2_args);
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluation campaign over a terrain matrix");
  add_common(eval_cmd, eval_args);
  eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint to evaluate");
  CLI::App* ablate = app.add_subcommand("ablate", "Train and compare ablation cells");
  add_common(ablate, ablate_args);
  CLI::App* gen = app.add_subcommand("gen-terrain", "Generate and export a terrain pair");
  add_common(gen, gen_args);
  CLI::App* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary");
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train1->parsed()) return run_train(train1_args, 1);
    if (train2->parsed()) return run_train(train2_args, 2);
    if (eval_cmd->parsed()) return run_eval_cmd(eval_args, eval_ckpt);
    if (ablate->parsed()) return run_ablate(ablate_args);
    if (gen->parsed()) return run_gen_terrain(gen_args);
    if (inspect->parsed()) return run_inspect(inspect_path);
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace stonewalk
