// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "esgnn/model/block_matrix.h"
#include "esgnn/structures/basis.h"
#include "esgnn/structures/graph.h"
#include "esgnn/structures/structure.h"

namespace esgnn::model {

// Periodic cubic lattice with the first n_atoms sites occupied, positions
// jittered uniformly in [-jitter, jitter] per component. Species cycle over
// sites in lexicographic site order.
structures::AtomicStructure make_jittered_lattice(int n_atoms, double spacing, double jitter,
                                                  const std::vector<int>& species_cycle,
                                                  uint64_t seed);

struct ToyHamiltonianParams {
  double decay = 2.0;        // radial decay length of pair interactions
  double pair_scale = 1.0;
  double onsite_scale = 0.5;
};

// Analytic rotation-covariant target: every pair block is a sum over coupled
// degrees L of radial_L(r) * C_L^T Y_L(direction), reshaped into the shell
// rectangle; on-site blocks sum the same form over the neighbor environment,
// then get symmetrized plus a per-shell diagonal level. Mirror-image pair
// blocks are exact transposes, so the full matrix is symmetric.
BlockMatrix toy_hamiltonian(const structures::AtomicStructure& s,
                            const structures::BasisSet& basis, const structures::Graph& g,
                            const ToyHamiltonianParams& p = {});

}  // namespace esgnn::model
