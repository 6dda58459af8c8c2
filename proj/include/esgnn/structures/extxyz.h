// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "esgnn/structures/structure.h"

namespace esgnn::structures {

// Extended xyz: atom count, then a comment line of key=value pairs (values
// may be double-quoted), then one "Symbol x y z ..." line per atom. Reads
// Lattice (9 numbers, lattice vectors row-major) and pbc ("T T T"); other
// keys and trailing atom columns are ignored.
AtomicStructure read_extxyz(std::istream& in);
AtomicStructure read_extxyz_file(const std::string& path);

void write_extxyz(std::ostream& out, const AtomicStructure& s);
void write_extxyz_file(const std::string& path, const AtomicStructure& s);

}  // namespace esgnn::structures
