#include "vantage/random.hpp"

#include <limits>

#include "vantage/error.hpp"

namespace vantage {

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_argument, "uniform_index over an empty range");
  constexpr auto top = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = top - top % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

}  // namespace vantage
