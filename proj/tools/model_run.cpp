// SPDX-License-Identifier: Apache-2.0
#include "model_run.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "esgnn/model/checkpoint.h"
#include "esgnn/partition/partition.h"
#include "esgnn/runtime/distributed.h"
#include "esgnn/runtime/inproc.h"
#include "esgnn/runtime/tcp.h"
#include "esgnn/structures/extxyz.h"

namespace esgnn::cli {
namespace {

namespace fs = std::filesystem;
using runtime::Transport;

char** g_argv = nullptr;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

// Everything the ranks share read-only.
struct Inputs {
  structures::AtomicStructure s;
  structures::BasisSet basis;
  structures::Graph g;
  partition::Assignment assign;
  model::BlockMatrix targets;
};

partition::Assignment choose_partition(const RunConfig& cfg, const structures::AtomicStructure& s,
                                       const structures::Graph& g) {
  if (!cfg.assignment.empty()) {
    auto a = partition::read_assignment_file(cfg.assignment);
    if (a.n_parts != cfg.world)
      throw UsageError("assignment has " + std::to_string(a.n_parts) +
                       " parts but the world size is " + std::to_string(cfg.world));
    if (static_cast<int>(a.node_to_part.size()) != g.n_nodes)
      throw DataError("assignment covers " + std::to_string(a.node_to_part.size()) +
                      " nodes, structure has " + std::to_string(g.n_nodes));
    return a;
  }
  if (cfg.world == 1) return {1, std::vector<int>(g.n_nodes, 0)};
  if (cfg.method == "mincut") return partition::mincut_partition(g, cfg.world, cfg.seed);
  int depth = 0;
  while ((1 << depth) < cfg.world) ++depth;
  if ((1 << depth) != cfg.world)
    throw UsageError("bisection partitioning needs a power-of-two world size, got " +
                     std::to_string(cfg.world));
  return partition::lownn_partition(s, g, depth, cfg.r_cut);
}

Inputs load_inputs(const RunConfig& cfg, bool need_targets) {
  if (cfg.structure.empty()) throw UsageError("no structure file given");
  if (cfg.basis.empty()) throw UsageError("no basis file given");
  Inputs in;
  in.s = structures::read_extxyz_file(cfg.structure);
  in.basis = structures::parse_basis_file(cfg.basis);
  in.g = structures::build_graph(in.s, cfg.r_cut);
  in.assign = choose_partition(cfg, in.s, in.g);
  if (need_targets) {
    if (cfg.targets.empty()) throw UsageError("training needs --targets");
    in.targets = model::read_blocks_file(cfg.targets);
  }
  return in;
}

// Rank 0 collects every rank's text; the others return empty.
std::string gather_text(const std::string& mine, Transport& tr) {
  const int tag = tr.fresh_tag();
  if (tr.rank() != 0) {
    tr.send(0, tag, mine.data(), mine.size());
    return {};
  }
  std::string all = mine;
  for (int r = 1; r < tr.world_size(); ++r) {
    const auto bytes = tr.recv(r, tag);
    all.append(bytes.begin(), bytes.end());
  }
  return all;
}

// Ownership is disjoint across ranks, so merging per-rank block matrices
// reassembles the full one on rank 0.
model::BlockMatrix gather_blocks(const model::BlockMatrix& mine, Transport& tr) {
  std::ostringstream os;
  model::write_blocks(os, mine);
  const std::string body = os.str();
  const int tag = tr.fresh_tag();
  if (tr.rank() != 0) {
    tr.send(0, tag, body.data(), body.size());
    return {};
  }
  model::BlockMatrix all = mine;
  for (int r = 1; r < tr.world_size(); ++r) {
    const auto bytes = tr.recv(r, tag);
    std::istringstream is(std::string(bytes.begin(), bytes.end()));
    model::BlockMatrix part = model::read_blocks(is);
    for (auto& [key, block] : part.entries) all.entries.insert_or_assign(key, std::move(block));
  }
  return all;
}

std::string phase_rows(const runtime::PhaseLog& log) {
  std::ostringstream os;
  for (const auto& r : log.rows)
    os << r.rank << ',' << r.layer << ',' << r.phase << ',' << r.seconds << '\n';
  return os.str();
}

template <typename T>
void forward_rank(const RunConfig& cfg, const Inputs& in, Transport& tr) {
  model::Network<T> net(cfg.model(), in.basis);
  net.init_params();
  if (!cfg.checkpoint.empty()) model::load_checkpoint(cfg.checkpoint, net.params());
  runtime::CommPlan plan = runtime::build_comm_plan(in.g, in.s.species, in.assign, tr.rank());
  runtime::PhaseLog log;
  runtime::DistributedRunner<T> runner(net, plan, tr, &log);
  const auto prep = runner.prepare();
  model::Tape<T> tape;
  const auto fwd = runner.forward(tape, prep);

  const model::BlockMatrix coupled = gather_blocks(
      net.assemble_blocks(runner.plan().view, tape.val(fwd.node_out), tape.val(fwd.edge_out)),
      tr);
  const std::string timing = gather_text(phase_rows(log), tr);
  if (tr.rank() != 0) return;

  fs::create_directories(cfg.out_dir);
  model::write_blocks_file(cfg.out_dir + "/blocks_coupled.txt", coupled);
  model::write_blocks_file(
      cfg.out_dir + "/blocks_uncoupled.txt",
      model::blocks_to_uncoupled(coupled, in.basis, in.s.species));
  write_text_file(cfg.out_dir + "/timing.csv", "rank,layer,phase,seconds\n" + timing);
  std::cout << "forward: " << in.g.n_nodes << " nodes, " << in.g.n_edges() << " edges, world "
            << tr.world_size() << ", " << coupled.entries.size() << " blocks -> " << cfg.out_dir
            << "\n";
}

template <typename T>
void train_rank(const RunConfig& cfg, const Inputs& in, Transport& tr) {
  model::Network<T> net(cfg.model(), in.basis);
  net.init_params();
  if (!cfg.checkpoint.empty()) model::load_checkpoint(cfg.checkpoint, net.params());
  runtime::CommPlan plan = runtime::build_comm_plan(in.g, in.s.species, in.assign, tr.rank());
  runtime::PhaseLog log;
  runtime::DistributedRunner<T> runner(net, plan, tr, &log);
  const auto prep = runner.prepare();
  const auto tb = net.build_targets(prep.view, in.targets);
  const long n_total = runtime::allreduce_count(tb.local_count, tr);

  model::OptimizerConfig ocfg;
  ocfg.lr = cfg.lr;
  model::Optimizer<T> opt(net.params(), ocfg);

  std::ostringstream curve;
  curve.precision(17);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < cfg.steps; ++step) {
    const auto res = runner.train_step(prep, tb, n_total, opt);
    if (step == 0) first = res.loss;
    last = res.loss;
    if (tr.rank() == 0) curve << step << ',' << res.loss << ',' << opt.lr() << '\n';
  }

  const std::string timing = gather_text(phase_rows(log), tr);
  if (tr.rank() != 0) return;

  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/loss.csv", "step,loss,lr\n" + curve.str());
  model::save_checkpoint(cfg.out_dir + "/model.ckpt", net.params(), cfg.text());
  write_text_file(cfg.out_dir + "/timing.csv", "rank,layer,phase,seconds\n" + timing);
  std::cout << "train: " << cfg.steps << " steps on " << n_total << " matrix elements, loss "
            << first << " -> " << last << ", world " << tr.world_size() << " -> " << cfg.out_dir
            << "\n";
}

template <typename T>
void run_rank(const RunConfig& cfg, const Inputs& in, Transport& tr, bool train) {
  if (train)
    train_rank<T>(cfg, in, tr);
  else
    forward_rank<T>(cfg, in, tr);
}

void run_rank_any(const RunConfig& cfg, const Inputs& in, Transport& tr, bool train) {
  if (cfg.precision == "single")
    run_rank<float>(cfg, in, tr, train);
  else
    run_rank<double>(cfg, in, tr, train);
}

// Re-executes this binary once per rank with the rendezvous passed through
// the environment, then reports the most specific child failure.
int launch_tcp(const RunConfig& cfg) {
  if (!g_argv) throw Error("launcher argv not set");
  std::vector<pid_t> pids;
  for (int r = 0; r < cfg.world; ++r) {
    const pid_t pid = fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      setenv("RANK", std::to_string(r).c_str(), 1);
      setenv("WORLD_SIZE", std::to_string(cfg.world).c_str(), 1);
      setenv("MASTER_ADDR", cfg.master_addr.c_str(), 1);
      setenv("MASTER_PORT", std::to_string(cfg.master_port).c_str(), 1);
      execv("/proc/self/exe", g_argv);
      _exit(127);
    }
    pids.push_back(pid);
  }
  int worst = 0;
  for (const pid_t pid : pids) {
    int status = 0;
    waitpid(pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
    if (code == 0) continue;
    // usage/data/divergence codes beat the generic failures they cascade into
    const bool specific = code == 2 || code == 3 || code == 4;
    const bool worst_specific = worst == 2 || worst == 3 || worst == 4;
    if (worst == 0 || (specific && !worst_specific)) worst = code;
  }
  return worst;
}

int run_command(const RunConfig& cfg, bool train) {
  cfg.validate();
  if (cfg.transport == "tcp") {
    if (std::getenv("RANK") == nullptr) return launch_tcp(cfg);
    const auto tr = runtime::TcpTransport::from_env();
    if (tr->world_size() != cfg.world)
      throw UsageError("WORLD_SIZE in the environment does not match --world");
    const Inputs in = load_inputs(cfg, train);
    run_rank_any(cfg, in, *tr, train);
    return 0;
  }

  const Inputs in = load_inputs(cfg, train);
  runtime::InprocWorld world(cfg.world);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(cfg.world);
  for (int r = 0; r < cfg.world; ++r)
    threads.emplace_back([&, r] {
      try {
        runtime::InprocTransport tr(world, r);
        run_rank_any(cfg, in, tr, train);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return 0;
}

template <typename T>
void add_so2_weights(model::ParamStore<T>& store, const std::string& base,
                     const model::MMajorLayout& lay, int cin, int cout) {
  const int nd0 = lay.n_degrees(0);
  store.add(base + "/m0", nd0 * cout, nd0 * cin, nd0 * cin);
  for (int m = 1; m <= lay.l_max; ++m) {
    const int nd = lay.n_degrees(m);
    store.add(base + "/m" + std::to_string(m) + "r", nd * cout, nd * cin, nd * cin);
    store.add(base + "/m" + std::to_string(m) + "i", nd * cout, nd * cin, nd * cin);
  }
}

template <typename T>
model::ops::So2ParamVars adopt_so2_weights(model::Tape<T>& tape, model::ParamStore<T>& store,
                                           const std::string& base, int l_max) {
  model::ops::So2ParamVars v;
  v.m0 = tape.adopt(store.at(base + "/m0"));
  for (int m = 1; m <= l_max; ++m) {
    v.wr.push_back(tape.adopt(store.at(base + "/m" + std::to_string(m) + "r")));
    v.wi.push_back(tape.adopt(store.at(base + "/m" + std::to_string(m) + "i")));
  }
  return v;
}

// Times the message transform (wide linear, gate, narrow linear) over a
// batch of already-aligned messages; reports the median after warmup.
template <typename T>
int bench_impl(const RunConfig& cfg, const std::vector<int>& batches) {
  const auto& lay = model::MMajorLayout::get(cfg.l_max);
  const int h = lay.h, e = cfg.e_width;
  std::cout << "message payload: " << 3 * h * e << " values, " << 3 * h * e * sizeof(T)
            << " bytes (" << cfg.precision << ")\n";

  model::ParamStore<T> store;
  add_so2_weights(store, "lin1", lay, 3 * e, 2 * e);
  add_so2_weights(store, "lin2", lay, 2 * e, e);
  store.init(cfg.seed);

  constexpr int kWarmup = 20, kRepeats = 120;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::ostringstream csv;
  csv << "batch,messages_per_sec\n";
  for (const int b : batches) {
    model::Tensor<T> x(b, h, 3 * e);
    for (auto& v : x.v) v = static_cast<T>(uni(rng));
    std::vector<double> times(kRepeats);
    for (int it = 0; it < kWarmup + kRepeats; ++it) {
      model::Tape<T> tape;
      const auto w1 = adopt_so2_weights(tape, store, "lin1", cfg.l_max);
      const auto w2 = adopt_so2_weights(tape, store, "lin2", cfg.l_max);
      const int xv = tape.create(x);
      const auto t0 = std::chrono::steady_clock::now();
      const int hid = model::ops::so2_linear(tape, xv, w1, lay, 3 * e, 2 * e);
      const int gated = model::ops::gate(tape, hid, true);
      model::ops::so2_linear(tape, gated, w2, lay, 2 * e, e);
      const double dt = runtime::detail::seconds_since(t0);
      if (it >= kWarmup) times[it - kWarmup] = dt;
    }
    std::nth_element(times.begin(), times.begin() + kRepeats / 2, times.end());
    const double rate = b / times[kRepeats / 2];
    csv << b << ',' << rate << '\n';
    std::cout << "batch " << b << ": " << rate << " messages/s\n";
  }
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/throughput.csv", csv.str());
  return 0;
}

}  // namespace

void set_launch_argv(char** argv) { g_argv = argv; }

int cmd_forward(const RunConfig& cfg) { return run_command(cfg, false); }

int cmd_train(const RunConfig& cfg) { return run_command(cfg, true); }

int cmd_bench_throughput(const RunConfig& cfg, const std::vector<int>& batches) {
  cfg.validate();
  if (batches.empty()) throw UsageError("need at least one batch size");
  for (const int b : batches)
    if (b < 1) throw UsageError("batch sizes must be positive");
  return cfg.precision == "single" ? bench_impl<float>(cfg, batches)
                                   : bench_impl<double>(cfg, batches);
}

}  // namespace esgnn::cli
