// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "esgnn/structures/basis.h"

namespace esgnn::model {

// Block-sparse Hamiltonian: H_ii on-site blocks keyed (i, i, 0) and H_ij
// pair blocks keyed (i, j, image). Blocks are n_orb(Z_i) x n_orb(Z_j).
// In coupled mode each shell-pair sub-block stores its Clebsch-Gordan
// coefficients (same element count) in the same rectangle, L segments
// ascending, row-major.
struct BlockKey {
  int i = 0, j = 0;
  std::array<int, 3> image = {0, 0, 0};
  auto operator<=>(const BlockKey&) const = default;
};

enum class BlockBasis { coupled, uncoupled };

struct BlockMatrix {
  BlockBasis mode = BlockBasis::uncoupled;
  std::map<BlockKey, Eigen::MatrixXd> entries;
};

// Full-matrix dimension: sum of orbital counts over all atoms.
long matrix_dimension(const structures::BasisSet& basis, const std::vector<int>& species);

void check_block_shapes(const BlockMatrix& bm, const structures::BasisSet& basis,
                        const std::vector<int>& species);

// Shell-pair-wise coupled <-> uncoupled conversion of every block.
BlockMatrix blocks_to_coupled(const BlockMatrix& bm, const structures::BasisSet& basis,
                              const std::vector<int>& species);
BlockMatrix blocks_to_uncoupled(const BlockMatrix& bm, const structures::BasisSet& basis,
                                const std::vector<int>& species, bool symmetrize_onsite = false);

// Text form, one block per line: i j ix iy iz rows cols values...
void write_blocks(std::ostream& out, const BlockMatrix& bm);
void write_blocks_file(const std::string& path, const BlockMatrix& bm);
BlockMatrix read_blocks(std::istream& in);
BlockMatrix read_blocks_file(const std::string& path);

}  // namespace esgnn::model
