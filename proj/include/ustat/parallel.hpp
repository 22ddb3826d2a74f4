#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace ustat {

// Runs body(i) for i in [0, count) on up to `workers` threads. Work is handed out
// by an atomic counter, so results must only depend on i (never on the thread).
// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace ustat
