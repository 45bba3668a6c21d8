#pragma once

namespace stonewalk {

// Full command-line driver: subcommands train-stage1, train-stage2, eval,
// ablate, gen-terrain, inspect-checkpoint. Returns the process exit code:
// 0 success, 2 config error, 3 numeric abort, 4 I/O error.
int cli_main(int argc, char** argv);

}  // namespace stonewalk
