#pragma once

#include <cstddef>
#include <functional>

namespace arcnp {

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 or 1 runs
/// inline). Index i is handled by worker i % threads. The first exception
/// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace arcnp
