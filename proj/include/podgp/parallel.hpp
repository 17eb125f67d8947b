#pragma once

#include "podgp/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

// Deterministic data parallelism: contiguous index blocks, each worker
// writing only its own slots, so results are independent of thread count.

namespace podgp {

namespace detail {
inline int& thread_count_ref() {
    static int n = 1;
    return n;
}
} // namespace detail

/// 0 = auto (hardware concurrency).
inline void set_num_threads(int n) {
    if (n < 0) throw validation_error("thread count must be >= 0");
    if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
    detail::thread_count_ref() = std::max(1, n);
}

inline int num_threads() { return detail::thread_count_ref(); }

/// fn(i) for i in [0, n); workers own disjoint contiguous blocks. If any
/// block throws, the exception from the lowest block is rethrown.
template <typename Fn>
void parallel_for(Eigen::Index n, Fn&& fn) {
    const int want = std::min<Eigen::Index>(num_threads(), n) > 0
                         ? static_cast<int>(std::min<Eigen::Index>(num_threads(), n))
                         : 1;
    if (want <= 1) {
        for (Eigen::Index i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(want));
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(want));
    const Eigen::Index chunk = (n + want - 1) / want;
    for (int w = 0; w < want; ++w) {
        const Eigen::Index begin = static_cast<Eigen::Index>(w) * chunk;
        const Eigen::Index end = std::min(n, begin + chunk);
        workers.emplace_back([&, w, begin, end] {
            try {
                for (Eigen::Index i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace podgp
