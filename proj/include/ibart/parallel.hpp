#pragma once

#include <cstddef>
#include <functional>

namespace ibart {

// Process-wide worker count used by parallel_for. Zero means "all cores".
void set_thread_count(std::size_t threads);
std::size_t thread_count();

// Runs body(i) for i in [0, count). Callers write into pre-sized,
// index-addressed outputs so reductions stay ordered by index.
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& body);

}  // namespace ibart
