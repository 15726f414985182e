#include "gsc/limits.hpp"

#include <cstdlib>
#include <string>

namespace gsc {

namespace {

void read_env(const char* name, std::size_t& target) {
  if (const char* v = std::getenv(name); v && *v) {
    try {
      target = static_cast<std::size_t>(std::stoull(v));
    } catch (const std::exception&) {
      // ignore unparsable values and keep the default
    }
  }
}

}  // namespace

Limits Limits::from_environment() {
  Limits l;
  read_env("GSC_MAX_CELLS", l.max_cells);
  read_env("GSC_MAX_VERTICES", l.max_vertices);
  read_env("GSC_MAX_UNKNOWNS", l.max_unknowns);
  return l;
}

const Limits& default_limits() {
  static const Limits limits = Limits::from_environment();
  return limits;
}

}  // namespace gsc
