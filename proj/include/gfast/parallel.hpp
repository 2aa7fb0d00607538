#pragma once

#include <exception>
#include <mutex>

namespace gfast {

// Runs fn(i) for i in [0, n), spread over OpenMP threads when `parallel` is set.
// The first exception thrown by any iteration is rethrown on the calling thread.
template <typename Fn>
void parallel_for(long n, bool parallel, Fn&& fn) {
    std::exception_ptr error;
    std::mutex mu;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long i = 0; i < n; ++i) {
        try {
            fn(i);
        } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

} // namespace gfast
