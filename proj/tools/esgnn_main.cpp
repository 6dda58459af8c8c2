// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "esgnn/core/elements.h"
#include "esgnn/model/block_matrix.h"
#include "esgnn/model/synthetic.h"
#include "esgnn/partition/partition.h"
#include "esgnn/structures/extxyz.h"
#include "esgnn/structures/graph.h"
#include "model_run.h"
#include "run_config.h"

namespace esgnn::cli {
namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

int cmd_build_graph(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.structure.empty()) throw UsageError("no structure file given");
  const auto s = structures::read_extxyz_file(cfg.structure);
  const auto g = structures::build_graph(s, cfg.r_cut);
  long max_degree = 0;
  for (const int d : g.in_degrees()) max_degree = std::max(max_degree, long(d));
  nlohmann::json j;
  j["n_nodes"] = g.n_nodes;
  j["n_edges"] = g.n_edges();
  j["r_cut"] = cfg.r_cut;
  j["mean_degree"] = g.n_nodes ? double(g.n_edges()) / g.n_nodes : 0.0;
  j["max_degree"] = max_degree;
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/graph.json", j.dump(2) + "\n");
  std::cout << "graph: " << g.n_nodes << " nodes, " << g.n_edges() << " edges within "
            << cfg.r_cut << " -> " << cfg.out_dir << "/graph.json\n";
  return 0;
}

int cmd_tile(const RunConfig& cfg, int nx, int ny, int nz, std::string out_file) {
  cfg.validate();
  if (cfg.structure.empty()) throw UsageError("no structure file given");
  const auto s = structures::read_extxyz_file(cfg.structure);
  const auto t = structures::tile(s, {nx, ny, nz});
  if (out_file.empty()) {
    fs::create_directories(cfg.out_dir);
    out_file = cfg.out_dir + "/tiled.xyz";
  } else if (fs::path(out_file).has_parent_path()) {
    fs::create_directories(fs::path(out_file).parent_path());
  }
  structures::write_extxyz_file(out_file, t);
  std::cout << "tiled " << s.n_atoms() << " atoms " << nx << "x" << ny << "x" << nz << " -> "
            << t.n_atoms() << " atoms (" << out_file << ")\n";
  return 0;
}

int cmd_partition(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.structure.empty()) throw UsageError("no structure file given");
  const auto s = structures::read_extxyz_file(cfg.structure);
  const auto g = structures::build_graph(s, cfg.r_cut);

  int depth = cfg.depth, parts = cfg.n_parts;
  if (depth < 0 && parts <= 0) throw UsageError("give --depth or --parts");
  if (depth < 0) {
    depth = 0;
    while ((1 << depth) < parts) ++depth;
  }
  if (parts <= 0) parts = 1 << depth;
  const bool run_lownn = cfg.method == "lownn" || cfg.method == "both";
  const bool run_mincut = cfg.method == "mincut" || cfg.method == "both";
  if (run_lownn && parts != (1 << depth))
    throw UsageError("bisection partitioning needs a power-of-two part count, got " +
                     std::to_string(parts));

  fs::create_directories(cfg.out_dir);
  const auto report = [&](const char* name, const partition::Assignment& a, double seconds) {
    const auto m = partition::compute_metrics(g, a);
    partition::write_assignment_file(cfg.out_dir + "/assignment_" + name + ".txt", a);
    write_text_file(cfg.out_dir + "/metrics_" + name + ".json", partition::metrics_json(m) + "\n");
    std::ofstream dot(cfg.out_dir + "/topology_" + name + ".dot");
    partition::write_dot(dot, g, a);
    if (!dot) throw DataError("write failed: topology_" + std::string(name) + ".dot");
    std::cout << name << ": " << a.n_parts << " parts, node imbalance " << m.node_imbalance
              << ", edge imbalance " << m.edge_imbalance << ", mean neighbors "
              << m.mean_neighbors << ", max neighbors " << m.max_neighbors << ", cut edges "
              << m.cut_edges << ", " << seconds << " s\n";
  };
  using clock = std::chrono::steady_clock;
  if (run_lownn) {
    const auto t0 = clock::now();
    const auto a = partition::lownn_partition(s, g, depth, cfg.r_cut);
    report("lownn", a, std::chrono::duration<double>(clock::now() - t0).count());
  }
  if (run_mincut) {
    const auto t0 = clock::now();
    const auto a = partition::mincut_partition(g, parts, cfg.seed);
    report("mincut", a, std::chrono::duration<double>(clock::now() - t0).count());
  }
  return 0;
}

int cmd_gen_synthetic(const RunConfig& cfg, int n_atoms, double spacing, double jitter,
                      const std::vector<std::string>& species_names) {
  cfg.validate();
  if (n_atoms < 1) throw UsageError("need at least one atom");
  if (spacing <= 0) throw UsageError("spacing must be positive");
  if (jitter < 0) throw UsageError("jitter must be >= 0");
  if (species_names.empty()) throw UsageError("need at least one species");
  std::vector<int> cycle;
  for (const auto& name : species_names) cycle.push_back(atomic_number(name));

  const auto s = model::make_jittered_lattice(n_atoms, spacing, jitter, cycle, cfg.seed);
  const auto g = structures::build_graph(s, cfg.r_cut);

  structures::BasisSet basis;
  std::ostringstream basis_text;
  for (const int z : std::set<int>(cycle.begin(), cycle.end())) {
    basis.add_species(z, {0, 1});
    basis_text << element_symbol(z) << " 0 1\n";
  }
  const auto target = model::toy_hamiltonian(s, basis, g);

  fs::create_directories(cfg.out_dir);
  structures::write_extxyz_file(cfg.out_dir + "/structure.xyz", s);
  write_text_file(cfg.out_dir + "/basis.txt", basis_text.str());
  model::write_blocks_file(cfg.out_dir + "/target.blocks", target);
  std::cout << "synthetic: " << s.n_atoms() << " atoms, " << g.n_edges() << " edges, "
            << target.entries.size() << " target blocks -> " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace
}  // namespace esgnn::cli

int main(int argc, char** argv) {
  using namespace esgnn;
  cli::set_launch_argv(argv);

  CLI::App app{"distributed equivariant network for electronic-structure block matrices"};
  app.require_subcommand(1);
  app.fallthrough();  // shared flags may follow the subcommand name
  app.set_config("--config", "", "key=value settings file; flags override it");

  cli::RunConfig cfg;
  app.add_option("--structure", cfg.structure, "extended-XYZ input");
  app.add_option("--basis", cfg.basis, "per-species shell table");
  app.add_option("--targets", cfg.targets, "target block matrix file");
  app.add_option("--assignment", cfg.assignment, "precomputed node-to-part file");
  app.add_option("--checkpoint", cfg.checkpoint, "parameters to start from");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--r-cut", cfg.r_cut, "neighbor cutoff radius");
  app.add_option("--l-max", cfg.l_max, "spherical harmonic degree limit");
  app.add_option("--width", cfg.e_width, "embedding channels per harmonic");
  app.add_option("--layers", cfg.layers, "message passing layers");
  app.add_option("--n-radial", cfg.n_radial, "radial basis size");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--depth", cfg.depth, "bisection depth");
  app.add_option("--parts", cfg.n_parts, "part count");
  app.add_option("--method", cfg.method, "partitioner: lownn, mincut, or both");
  app.add_option("--precision", cfg.precision, "single or double");
  app.add_option("--transport", cfg.transport, "inproc or tcp");
  app.add_option("--world", cfg.world, "rank count");
  app.add_option("--master-addr", cfg.master_addr, "tcp rendezvous address");
  app.add_option("--master-port", cfg.master_port, "tcp rendezvous base port");
  app.add_option("--steps", cfg.steps, "training steps");
  app.add_option("--lr", cfg.lr, "learning rate");

  auto* c_graph = app.add_subcommand("build-graph", "build the cutoff graph and report its shape");
  auto* c_tile = app.add_subcommand("tile", "replicate a periodic structure");
  int nx = 1, ny = 1, nz = 1;
  std::string tile_out;
  c_tile->add_option("nx", nx, "replicas along the first lattice vector")->required();
  c_tile->add_option("ny", ny, "replicas along the second lattice vector")->required();
  c_tile->add_option("nz", nz, "replicas along the third lattice vector")->required();
  c_tile->add_option("--out-file", tile_out, "output path (default <out>/tiled.xyz)");
  auto* c_part = app.add_subcommand("partition", "partition the graph and report quality");
  auto* c_fwd = app.add_subcommand("forward", "predict block matrices for a structure");
  auto* c_train = app.add_subcommand("train", "fit the model to a target block matrix");
  auto* c_bench = app.add_subcommand("bench-throughput", "sweep message batch sizes");
  std::vector<int> batches{1, 4, 16, 64, 256, 1024, 4096, 16384};
  c_bench->add_option("--batches", batches, "batch sizes to sweep")->delimiter(',');
  auto* c_gen = app.add_subcommand("gen-synthetic", "generate a structure with analytic targets");
  int gen_n = 50;
  double gen_spacing = 2.2, gen_jitter = 0.3;
  std::vector<std::string> gen_species{"H", "O"};
  c_gen->add_option("--n-atoms", gen_n, "atom count");
  c_gen->add_option("--spacing", gen_spacing, "lattice constant");
  c_gen->add_option("--jitter", gen_jitter, "random displacement amplitude");
  c_gen->add_option("--species", gen_species, "species cycle")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_graph) return cli::cmd_build_graph(cfg);
    if (*c_tile) return cli::cmd_tile(cfg, nx, ny, nz, tile_out);
    if (*c_part) return cli::cmd_partition(cfg);
    if (*c_fwd) return cli::cmd_forward(cfg);
    if (*c_train) return cli::cmd_train(cfg);
    if (*c_bench) return cli::cmd_bench_throughput(cfg, batches);
    if (*c_gen) return cli::cmd_gen_synthetic(cfg, gen_n, gen_spacing, gen_jitter, gen_species);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
