#pragma once

#include <cstddef>
#include <functional>

namespace lope {

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; callers write into per-index slots, so results do not depend
/// on the worker count. The exception from the lowest failing index is
/// rethrown after every thread has joined.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace lope
