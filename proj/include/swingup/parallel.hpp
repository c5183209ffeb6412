#pragma once

#include <cstddef>
#include <functional>

namespace swingup {

/// Environment variable overriding the number of evaluation workers.
inline constexpr const char* kWorkersEnv = "SWINGUP_WORKERS";

/// SWINGUP_WORKERS when set to a positive integer, otherwise the hardware concurrency.
std::size_t worker_count();

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// processed exactly once; results must be written to per-index slots. The
/// exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace swingup
