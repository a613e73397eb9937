#pragma once

#include <cstddef>
#include <functional>

namespace metaseg {

/// Runs fn(0) .. fn(n-1) on up to `jobs` threads. Work items are claimed in
/// index order; callers write results into pre-sized slots so the outcome is
/// independent of scheduling. If any item throws, the exception of the
/// lowest failing index is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace metaseg
