#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qpm {

/// Worker count used when the caller asks for 0 ("as many as the machine has").
inline unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested != 0)
        return requested;
    unsigned const hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Calls `body(i)` for every i in [0, count) using up to `threads` workers.
///
/// Indices are split into contiguous blocks. Callers write results into slot i, so the
/// output does not depend on the worker count. The first exception thrown by any worker
/// is rethrown on the calling thread after all workers have joined.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
    unsigned const workers = static_cast<unsigned>(
        std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t const block = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t const begin = w * block;
        std::size_t const end = std::min(count, begin + block);
        if (begin >= end)
            break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace qpm
