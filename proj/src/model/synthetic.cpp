// SPDX-License-Identifier: Apache-2.0
#include "esgnn/model/synthetic.h"

#include <cmath>
#include <random>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/clebsch_gordan.h"
#include "esgnn/harmonics/real_sh.h"

namespace esgnn::model {

using structures::AtomicStructure;
using structures::BasisSet;
using structures::Graph;

AtomicStructure make_jittered_lattice(int n_atoms, double spacing, double jitter,
                                      const std::vector<int>& species_cycle, uint64_t seed) {
  if (n_atoms < 1) throw UsageError("need at least one atom");
  if (species_cycle.empty()) throw UsageError("species cycle is empty");
  if (spacing <= 0.0) throw UsageError("lattice spacing must be positive");
  int n = 1;
  while (n * n * n < n_atoms) ++n;

  AtomicStructure s;
  s.cell = Eigen::Matrix3d::Identity() * (n * spacing);
  s.pbc = {true, true, true};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  int placed = 0;
  for (int ix = 0; ix < n && placed < n_atoms; ++ix)
    for (int iy = 0; iy < n && placed < n_atoms; ++iy)
      for (int iz = 0; iz < n && placed < n_atoms; ++iz) {
        Eigen::Vector3d pos((ix + 0.5) * spacing, (iy + 0.5) * spacing, (iz + 0.5) * spacing);
        for (int d = 0; d < 3; ++d) pos[d] += u(rng);
        s.positions.push_back(pos);
        s.species.push_back(species_cycle[placed % static_cast<int>(species_cycle.size())]);
        ++placed;
      }
  return s;
}

namespace {

// Sum over L of scale/(1+L) * exp(-r/sigma_L) * C_L^T Y_L(u), written into
// the (2la+1) x (2lb+1) rectangle at (row0, col0). The coupled expansion
// makes each term transform as D_la B D_lb^T when u rotates.
void add_pair_term(Eigen::MatrixXd& block, int row0, int col0, int la, int lb,
                   const Eigen::Vector3d& u, double r, double decay, double scale, int salt) {
  const Eigen::VectorXd ysh = harmonics::real_sh(la + lb, u);
  const int rows = 2 * la + 1, cols = 2 * lb + 1;
  Eigen::VectorXd vec = Eigen::VectorXd::Zero(rows * cols);
  for (int L = std::abs(la - lb); L <= la + lb; ++L) {
    const double sigma = decay / (1.0 + 0.3 * L);
    const double a = scale * (0.6 + 0.1 * ((salt + 3 * (la + 1) * (lb + 1) + L) % 5)) / (1.0 + L);
    const auto& c = harmonics::coupling_matrix(la, lb, L);
    vec.noalias() += (a * std::exp(-r / sigma)) * (c.transpose() * ysh.segment(L * L, 2 * L + 1));
  }
  block.block(row0, col0, rows, cols) +=
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          vec.data(), rows, cols);
}

}  // namespace

BlockMatrix toy_hamiltonian(const AtomicStructure& s, const BasisSet& basis, const Graph& g,
                            const ToyHamiltonianParams& p) {
  BlockMatrix h;
  h.mode = BlockBasis::uncoupled;

  const int n = static_cast<int>(s.positions.size());
  for (int i = 0; i < n; ++i) {
    const int z = s.species[i];
    h.entries[{i, i, {0, 0, 0}}] =
        Eigen::MatrixXd::Zero(basis.n_orbitals(z), basis.n_orbitals(z));
  }

  // Off-site blocks: compute the canonical direction once, mirror by transpose.
  for (const auto& e : g.edges) {
    BlockKey key{e.src, e.dst, e.shift};
    BlockKey mirror{e.dst, e.src, {-e.shift[0], -e.shift[1], -e.shift[2]}};
    if (mirror < key) continue;
    const int za = s.species[e.src], zb = s.species[e.dst];
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(basis.n_orbitals(za), basis.n_orbitals(zb));
    const Eigen::Vector3d u = e.displacement / e.distance;
    const auto& sa = basis.shells(za);
    const auto& sb = basis.shells(zb);
    for (int a = 0; a < static_cast<int>(sa.size()); ++a)
      for (int b = 0; b < static_cast<int>(sb.size()); ++b)
        add_pair_term(block, basis.orbital_offset(za, a), basis.orbital_offset(zb, b), sa[a],
                      sb[b], u, e.distance, p.decay, p.pair_scale, za + 2 * zb);
    h.entries[key] = block;
    h.entries[mirror] = block.transpose();
  }

  // On-site blocks: neighbor environment sums, symmetrized, with per-shell
  // diagonal levels.
  for (const auto& e : g.edges) {
    const int i = e.dst;
    const int z = s.species[i];
    auto& block = h.entries.at({i, i, {0, 0, 0}});
    const Eigen::Vector3d u = -e.displacement / e.distance;
    const auto& sh = basis.shells(z);
    for (int a = 0; a < static_cast<int>(sh.size()); ++a)
      for (int b = 0; b < static_cast<int>(sh.size()); ++b)
        add_pair_term(block, basis.orbital_offset(z, a), basis.orbital_offset(z, b), sh[a],
                      sh[b], u, e.distance, p.decay, p.onsite_scale, z + s.species[e.src]);
  }
  for (int i = 0; i < n; ++i) {
    const int z = s.species[i];
    auto& block = h.entries.at({i, i, {0, 0, 0}});
    block = ((block + block.transpose()) * 0.5).eval();
    const auto& sh = basis.shells(z);
    for (int a = 0; a < static_cast<int>(sh.size()); ++a) {
      const double level = -1.0 - 0.25 * a - 0.01 * z;
      const int off = basis.orbital_offset(z, a);
      for (int m = 0; m < 2 * sh[a] + 1; ++m) block(off + m, off + m) += level;
    }
  }
  return h;
}

}  // namespace esgnn::model
