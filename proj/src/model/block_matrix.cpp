// SPDX-License-Identifier: Apache-2.0
#include "esgnn/model/block_matrix.h"

#include <fstream>
#include <sstream>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/clebsch_gordan.h"

namespace esgnn::model {

long matrix_dimension(const structures::BasisSet& basis, const std::vector<int>& species) {
  long n = 0;
  for (int z : species) n += basis.n_orbitals(z);
  return n;
}

void check_block_shapes(const BlockMatrix& bm, const structures::BasisSet& basis,
                        const std::vector<int>& species) {
  const int na = static_cast<int>(species.size());
  for (const auto& [key, block] : bm.entries) {
    if (key.i < 0 || key.i >= na || key.j < 0 || key.j >= na)
      throw DataError("block index out of range");
    if (block.rows() != basis.n_orbitals(species[key.i]) ||
        block.cols() != basis.n_orbitals(species[key.j]))
      throw ShapeError("block shape does not match species basis");
  }
}

namespace {

template <typename F>
void for_each_shell_pair(const structures::BasisSet& basis, int za, int zb, F&& f) {
  const auto& sha = basis.shells(za);
  const auto& shb = basis.shells(zb);
  for (size_t a = 0; a < sha.size(); ++a)
    for (size_t b = 0; b < shb.size(); ++b)
      f(static_cast<int>(a), static_cast<int>(b), sha[a], shb[b],
        basis.orbital_offset(za, static_cast<int>(a)), basis.orbital_offset(zb, static_cast<int>(b)));
}

}  // namespace

BlockMatrix blocks_to_coupled(const BlockMatrix& bm, const structures::BasisSet& basis,
                              const std::vector<int>& species) {
  if (bm.mode != BlockBasis::uncoupled) throw ShapeError("expected uncoupled blocks");
  check_block_shapes(bm, basis, species);
  BlockMatrix out;
  out.mode = BlockBasis::coupled;
  for (const auto& [key, block] : bm.entries) {
    Eigen::MatrixXd cb = Eigen::MatrixXd::Zero(block.rows(), block.cols());
    for_each_shell_pair(basis, species[key.i], species[key.j],
                        [&](int, int, int la, int lb, int oa, int ob) {
                          const int da = 2 * la + 1, db = 2 * lb + 1;
                          const Eigen::VectorXd c =
                              harmonics::to_coupled(la, lb, block.block(oa, ob, da, db));
                          for (int r = 0; r < da; ++r)
                            for (int ccol = 0; ccol < db; ++ccol)
                              cb(oa + r, ob + ccol) = c[r * db + ccol];
                        });
    out.entries.emplace(key, std::move(cb));
  }
  return out;
}

BlockMatrix blocks_to_uncoupled(const BlockMatrix& bm, const structures::BasisSet& basis,
                                const std::vector<int>& species, bool symmetrize_onsite) {
  if (bm.mode != BlockBasis::coupled) throw ShapeError("expected coupled blocks");
  check_block_shapes(bm, basis, species);
  BlockMatrix out;
  out.mode = BlockBasis::uncoupled;
  for (const auto& [key, block] : bm.entries) {
    Eigen::MatrixXd ub = Eigen::MatrixXd::Zero(block.rows(), block.cols());
    for_each_shell_pair(basis, species[key.i], species[key.j],
                        [&](int, int, int la, int lb, int oa, int ob) {
                          const int da = 2 * la + 1, db = 2 * lb + 1;
                          Eigen::VectorXd c(da * db);
                          for (int r = 0; r < da; ++r)
                            for (int ccol = 0; ccol < db; ++ccol)
                              c[r * db + ccol] = block(oa + r, ob + ccol);
                          ub.block(oa, ob, da, db) = harmonics::to_block(la, lb, c);
                        });
    if (symmetrize_onsite && key.i == key.j && key.image == std::array<int, 3>{0, 0, 0})
      ub = 0.5 * (ub + ub.transpose()).eval();
    out.entries.emplace(key, std::move(ub));
  }
  return out;
}

void write_blocks(std::ostream& out, const BlockMatrix& bm) {
  out.precision(17);
  for (const auto& [key, block] : bm.entries) {
    out << key.i << " " << key.j << " " << key.image[0] << " " << key.image[1] << " "
        << key.image[2] << " " << block.rows() << " " << block.cols();
    for (int r = 0; r < block.rows(); ++r)
      for (int c = 0; c < block.cols(); ++c) out << " " << block(r, c);
    out << "\n";
  }
}

void write_blocks_file(const std::string& path, const BlockMatrix& bm) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  write_blocks(out, bm);
}

BlockMatrix read_blocks(std::istream& in) {
  BlockMatrix bm;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    BlockKey key;
    long rows = 0, cols = 0;
    if (!(ss >> key.i >> key.j >> key.image[0] >> key.image[1] >> key.image[2] >> rows >> cols))
      throw ParseError("expected 'i j ix iy iz rows cols values...'", lineno);
    if (rows < 1 || cols < 1) throw ParseError("bad block shape", lineno);
    Eigen::MatrixXd block(rows, cols);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c)
        if (!(ss >> block(r, c))) throw ParseError("short block value list", lineno);
    if (!bm.entries.emplace(key, std::move(block)).second)
      throw ParseError("duplicate block key", lineno);
  }
  return bm;
}

BlockMatrix read_blocks_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return read_blocks(in);
}

}  // namespace esgnn::model
