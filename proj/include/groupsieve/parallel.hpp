#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace groupsieve {

// Deterministic sharded execution: `job(i)` computes shard i, results are
// returned indexed by shard, so any worker count yields the same vector.
template <class R>
std::vector<R> run_shards(std::size_t shards, unsigned threads,
                          const std::function<R(std::size_t)>& job) {
    std::vector<R> results(shards);
    if (threads <= 1 || shards <= 1) {
        for (std::size_t i = 0; i < shards; ++i) results[i] = job(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= shards) return;
            try {
                results[i] = job(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    unsigned n = std::min<std::size_t>(threads, shards);
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace groupsieve
