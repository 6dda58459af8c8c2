// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace esgnn {

// Atomic numbers 1..103, standard symbols.
int atomic_number(const std::string& symbol);
const std::string& element_symbol(int z);

}  // namespace esgnn
