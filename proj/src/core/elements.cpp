// SPDX-License-Identifier: Apache-2.0
#include "esgnn/core/elements.h"

#include <array>
#include <unordered_map>

#include "esgnn/core/error.h"

namespace esgnn {

namespace {

constexpr int kMaxZ = 103;

const std::array<const char*, kMaxZ + 1> kSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn",
    "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr",
    "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb",
    "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr"};

const std::unordered_map<std::string, int>& symbol_index() {
  static const std::unordered_map<std::string, int> table = [] {
    std::unordered_map<std::string, int> t;
    for (int z = 1; z <= kMaxZ; ++z) t.emplace(kSymbols[z], z);
    return t;
  }();
  return table;
}

}  // namespace

int atomic_number(const std::string& symbol) {
  auto it = symbol_index().find(symbol);
  if (it == symbol_index().end()) throw DataError("unknown element symbol: '" + symbol + "'");
  return it->second;
}

const std::string& element_symbol(int z) {
  static const std::array<std::string, kMaxZ + 1> names = [] {
    std::array<std::string, kMaxZ + 1> n;
    for (int z = 0; z <= kMaxZ; ++z) n[z] = kSymbols[z];
    return n;
  }();
  if (z < 1 || z > kMaxZ) throw DataError("atomic number out of range: " + std::to_string(z));
  return names[z];
}

}  // namespace esgnn
