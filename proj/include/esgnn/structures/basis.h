// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace esgnn::structures {

// Per-species shell lists, e.g. Hf -> [0, 0, 1, 2] for an s,s,p,d basis.
// Shell order is as declared; each shell of angular momentum l spans 2l+1
// orbitals with m = -l..l.
class BasisSet {
public:
  void add_species(int z, std::vector<int> shell_l);

  bool has(int z) const { return shells_.count(z) != 0; }
  const std::vector<int>& shells(int z) const;
  int n_orbitals(int z) const;
  int orbital_offset(int z, int shell) const;

  // Padded shell-slot view across all species: slot s covers the s-th shell
  // of every species that has one; its angular momentum is the max over them.
  int n_slots() const;
  int slot_l(int slot) const;
  int max_shell_l() const;

  const std::map<int, std::vector<int>>& all() const { return shells_; }

private:
  std::map<int, std::vector<int>> shells_;
};

// Text format: one species per line, "Symbol l l l ...". Blank lines and
// '#' comments allowed.
BasisSet parse_basis(std::istream& in);
BasisSet parse_basis_file(const std::string& path);

}  // namespace esgnn::structures
