#pragma once

#include <cstddef>

namespace gsc {

/// Resource caps. Defaults can be overridden through the environment
/// variables GSC_MAX_CELLS, GSC_MAX_VERTICES and GSC_MAX_UNKNOWNS.
struct Limits {
  std::size_t max_cells = 20'000'000;
  std::size_t max_vertices = 5'000'000;
  std::size_t max_unknowns = 2'000'000;

  static Limits from_environment();
};

/// Process-wide limits, read once from the environment on first use.
const Limits& default_limits();

}  // namespace gsc
