#ifndef CAFPCA_PARALLEL_HPP
#define CAFPCA_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace cafpca {

// Hard cap on worker threads: min(CAFPCA_THREADS, hardware concurrency).
// CAFPCA_THREADS <= 1 disables threading entirely.
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Iterations must be independent; each writes only
// its own output slot, so results are identical for any thread count. Nested
// calls from inside a worker run serially. Exceptions are rethrown on the
// calling thread; if several iterations throw, the lowest index wins.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cafpca

#endif  // CAFPCA_PARALLEL_HPP
