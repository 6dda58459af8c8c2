// SPDX-License-Identifier: Apache-2.0
#include "esgnn/structures/basis.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "esgnn/core/elements.h"
#include "esgnn/core/error.h"

namespace esgnn::structures {

void BasisSet::add_species(int z, std::vector<int> shell_l) {
  if (shell_l.empty()) throw DataError("basis for " + element_symbol(z) + " has no shells");
  for (int l : shell_l)
    if (l < 0 || l > 6)
      throw DataError("shell angular momentum out of range: " + std::to_string(l));
  shells_[z] = std::move(shell_l);
}

const std::vector<int>& BasisSet::shells(int z) const {
  auto it = shells_.find(z);
  if (it == shells_.end()) throw DataError("no basis for element " + element_symbol(z));
  return it->second;
}

int BasisSet::n_orbitals(int z) const {
  int n = 0;
  for (int l : shells(z)) n += 2 * l + 1;
  return n;
}

int BasisSet::orbital_offset(int z, int shell) const {
  const auto& sh = shells(z);
  if (shell < 0 || shell >= static_cast<int>(sh.size()))
    throw ShapeError("shell index out of range");
  int off = 0;
  for (int i = 0; i < shell; ++i) off += 2 * sh[i] + 1;
  return off;
}

int BasisSet::n_slots() const {
  size_t n = 0;
  for (const auto& [z, sh] : shells_) n = std::max(n, sh.size());
  return static_cast<int>(n);
}

int BasisSet::slot_l(int slot) const {
  if (slot < 0 || slot >= n_slots()) throw ShapeError("slot index out of range");
  int l = -1;
  for (const auto& [z, sh] : shells_)
    if (slot < static_cast<int>(sh.size())) l = std::max(l, sh[slot]);
  return l;
}

int BasisSet::max_shell_l() const {
  int l = 0;
  for (const auto& [z, sh] : shells_)
    for (int x : sh) l = std::max(l, x);
  return l;
}

BasisSet parse_basis(std::istream& in) {
  BasisSet basis;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string sym;
    if (!(ss >> sym)) continue;
    const int z = atomic_number(sym);
    std::vector<int> ls;
    std::string tok;
    while (ss >> tok) {
      try {
        size_t pos = 0;
        int l = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        ls.push_back(l);
      } catch (const std::exception&) {
        throw ParseError("bad shell value '" + tok + "'", lineno);
      }
    }
    if (ls.empty()) throw ParseError("species " + sym + " lists no shells", lineno);
    basis.add_species(z, std::move(ls));
  }
  if (basis.all().empty()) throw DataError("basis file defines no species");
  return basis;
}

BasisSet parse_basis_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return parse_basis(in);
}

}  // namespace esgnn::structures
