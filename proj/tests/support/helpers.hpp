#pragma once

#include "causalreach/geometry.hpp"
#include "causalreach/rng.hpp"

namespace testing_support {

using causalreach::Box;
using causalreach::Vec;

inline Vec random_point(const Box& b, causalreach::Philox& g) {
  Vec p(b.dim());
  for (int i = 0; i < b.dim(); ++i) p[i] = g.uniform(b.lo[i], b.hi[i]);
  return p;
}

/// Admissible point at least `margin` inside the domain.
inline Vec random_admissible(const causalreach::SubSpaceTime& st, causalreach::Philox& g,
                             double margin = 0.05) {
  const Box inner(st.domain().lo.array() + margin, st.domain().hi.array() - margin);
  while (true) {
    Vec p = random_point(inner, g);
    if (st.admissible(p)) return p;
  }
}

}  // namespace testing_support
