#pragma once

#include "imba/core.hpp"

#include <functional>

namespace imba {

/// Runs `fn(i)` for every i in [0, count) on up to `jobs` threads. Callers
/// write results into slot i so output order never depends on scheduling.
/// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(Index count, int jobs, const std::function<void(Index)>& fn);

}  // namespace imba
