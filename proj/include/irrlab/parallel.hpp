#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace irrlab {

/// Worker count: `requested` if positive, else hardware concurrency.
inline unsigned resolve_workers(int requested)
{
    if (requested > 0)
        return static_cast<unsigned>(requested);
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items are
/// claimed dynamically; callers write results by index so output order never
/// depends on scheduling. The first exception is rethrown after all threads
/// join.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    const unsigned nw = std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (nw <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load())
                return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true))
                    err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(nw);
    for (unsigned w = 0; w < nw; ++w)
        pool.emplace_back(body);
    pool.clear();
    if (err)
        std::rethrow_exception(err);
}

}  // namespace irrlab
