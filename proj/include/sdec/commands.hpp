#pragma once

// Command implementations behind the `sdec` executable.

#include <ostream>
#include <string>
#include <vector>

#include "sdec/config.hpp"
#include "sdec/datagen.hpp"
#include "sdec/training.hpp"

namespace sdec {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitNotDifferentiable = 4,
};

/// Task corpora named by `data`, or generated from the task.* keys.
TaskData load_or_generate(const Config& cfg);
TrainConfig make_train_config(const Config& cfg, TaskKind kind);
ModelShape make_model_shape(const Config& cfg, std::size_t vocab);

/// <out>/<name>
std::string run_dir(const Config& cfg);

int cmd_gen_data(const Config& cfg, std::ostream& out, std::ostream& err);
int cmd_train(const Config& cfg, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const Config& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const Config& cfg, std::ostream& out, std::ostream& err);

struct EvaluateArgs {
  std::string metric = "accuracy";
  std::string pred;
  std::string gold;
  std::string checkpoint;
  std::string corpus;
  std::string vocab;
  std::string csv;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);

/// Full command line, argv[0] included.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace sdec
