#pragma once

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fastglz/types.hpp"

namespace fastglz::detail {

/// Runs body(i) for i in [0, count) on up to `threads` OpenMP threads. The
/// first exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(Index count, int threads, Body&& body) {
    std::exception_ptr failure;
    std::mutex guard;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(threads > 0 ? threads : 1)
#endif
    for (Index i = 0; i < count; ++i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
        }
    }
    (void)threads;
    if (failure) std::rethrow_exception(failure);
}

}  // namespace fastglz::detail
