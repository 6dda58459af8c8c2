// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "run_config.h"

namespace esgnn::cli {

// The tcp launcher re-executes this binary per rank; it needs the original
// argument vector.
void set_launch_argv(char** argv);

int cmd_forward(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_bench_throughput(const RunConfig& cfg, const std::vector<int>& batches);

}  // namespace esgnn::cli
