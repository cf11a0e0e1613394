#pragma once

#include <cstddef>
#include <functional>

namespace asep {

/// Worker cap: set_thread_cap() if called, else ASEP_THREADS, else hardware concurrency.
unsigned thread_cap();
void set_thread_cap(unsigned threads);

/// Runs body(i) for i in [0, count); indices are claimed dynamically.
/// Exceptions from workers are rethrown (first one wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace asep
