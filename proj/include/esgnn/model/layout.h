// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "esgnn/core/error.h"
#include "esgnn/harmonics/real_sh.h"
#include "esgnn/structures/basis.h"

namespace esgnn::model {

// Reordering between the degree-major component layout h = l^2 + l + m and
// the order-major layout used inside aligned-frame linear maps: first all
// m = 0 components (l ascending), then for each m >= 1 the -m column
// followed by the +m column, each l = m..l_max.
struct MMajorLayout {
  int l_max = 0;
  int h = 0;
  std::vector<int> to_m;      // degree-major row -> order-major row
  std::vector<int> to_l;      // inverse
  std::vector<int> m_offset;  // per m: start of its block in order-major rows

  int n_degrees(int m) const { return l_max - m + 1; }

  static const MMajorLayout& get(int l_max);
};

inline MMajorLayout build_m_major(int l_max) {
  MMajorLayout lay;
  lay.l_max = l_max;
  lay.h = harmonics::n_sh(l_max);
  lay.to_m.assign(lay.h, -1);
  lay.to_l.assign(lay.h, -1);
  lay.m_offset.assign(l_max + 1, 0);
  int pos = 0;
  lay.m_offset[0] = 0;
  for (int l = 0; l <= l_max; ++l) lay.to_m[harmonics::sh_index(l, 0)] = pos++;
  for (int m = 1; m <= l_max; ++m) {
    lay.m_offset[m] = pos;
    for (int l = m; l <= l_max; ++l) lay.to_m[harmonics::sh_index(l, -m)] = pos++;
    for (int l = m; l <= l_max; ++l) lay.to_m[harmonics::sh_index(l, m)] = pos++;
  }
  for (int i = 0; i < lay.h; ++i) lay.to_l[lay.to_m[i]] = i;
  return lay;
}

inline const MMajorLayout& MMajorLayout::get(int l_max) {
  static const std::vector<MMajorLayout> table = [] {
    std::vector<MMajorLayout> t;
    for (int l = 0; l <= 8; ++l) t.push_back(build_m_major(l));
    return t;
  }();
  if (l_max < 0 || l_max >= static_cast<int>(table.size()))
    throw ShapeError("unsupported l_max");
  return table[l_max];
}

// One output head per (shell slot a, shell slot b, L): an E -> 1 projection
// of the degree-L feature plane. Slots pad the shell lists across species;
// L runs over 0..l_a+l_b so every species pair's coupled range is covered.
// Segments are laid out in key order, each 2L+1 long.
struct HeadKey {
  int slot_a = 0, slot_b = 0, L = 0;
};

struct HeadLayout {
  std::vector<HeadKey> keys;
  std::vector<int> offsets;  // per key
  int out_len = 0;
  int max_l_required = 0;  // minimum l_max the features must carry

  int segment(int slot_a, int slot_b, int L) const {
    for (size_t k = 0; k < keys.size(); ++k)
      if (keys[k].slot_a == slot_a && keys[k].slot_b == slot_b && keys[k].L == L)
        return offsets[k];
    throw ShapeError("no head for requested slots");
  }

  static HeadLayout build(const structures::BasisSet& basis) {
    HeadLayout lay;
    const int s = basis.n_slots();
    for (int sa = 0; sa < s; ++sa)
      for (int sb = 0; sb < s; ++sb) {
        const int l_top = basis.slot_l(sa) + basis.slot_l(sb);
        for (int L = 0; L <= l_top; ++L) {
          lay.keys.push_back({sa, sb, L});
          lay.offsets.push_back(lay.out_len);
          lay.out_len += 2 * L + 1;
          if (L > lay.max_l_required) lay.max_l_required = L;
        }
      }
    return lay;
  }
};

}  // namespace esgnn::model
