// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include "esgnn/core/error.h"
#include "esgnn/model/network.h"

namespace esgnn::cli {

// One flat settings bundle shared by every command. A key=value config file
// fills the same fields; command-line flags win over the file.
struct RunConfig {
  std::string structure;
  std::string basis;
  std::string targets;     // block matrix file (training)
  std::string assignment;  // precomputed node-to-part file, optional
  std::string checkpoint;  // parameters to start from, optional
  std::string out_dir = "out";

  double r_cut = 4.0;
  int l_max = 2;
  int e_width = 8;
  int layers = 2;
  int n_radial = 32;
  uint64_t seed = 1;

  int depth = -1;    // bisection depth; negative derives it from n_parts
  int n_parts = 0;   // zero derives it from depth (or world size)
  std::string method = "lownn";

  std::string precision = "double";
  std::string transport = "inproc";
  int world = 1;
  std::string master_addr = "127.0.0.1";
  int master_port = 29500;

  int steps = 200;
  double lr = 5e-3;

  model::ModelConfig model() const {
    model::ModelConfig m;
    m.l_max = l_max;
    m.e_width = e_width;
    m.layers = layers;
    m.n_radial = n_radial;
    m.r_cut = r_cut;
    m.seed = seed;
    return m;
  }

  void validate() const {
    model().validate();
    if (precision != "single" && precision != "double")
      throw UsageError("precision must be single or double");
    if (transport != "inproc" && transport != "tcp")
      throw UsageError("transport must be inproc or tcp");
    if (method != "lownn" && method != "mincut" && method != "both")
      throw UsageError("method must be lownn, mincut, or both");
    if (world < 1) throw UsageError("world size must be >= 1");
    if (steps < 0) throw UsageError("step count must be >= 0");
    if (lr < 0) throw UsageError("learning rate must be >= 0");
    if (master_port < 1 || master_port > 65535) throw UsageError("master_port out of range");
  }

  // Stored inside checkpoints so a parameter file says what produced it.
  std::string text() const {
    std::ostringstream os;
    os << "l_max=" << l_max << "\ne_width=" << e_width << "\nlayers=" << layers
       << "\nn_radial=" << n_radial << "\nr_cut=" << r_cut << "\nseed=" << seed
       << "\nprecision=" << precision << "\n";
    return os.str();
  }
};

}  // namespace esgnn::cli
