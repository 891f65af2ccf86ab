#include "fraclayer/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace fraclayer {

namespace {
std::atomic<int> g_workers{1};
}

void set_workers(int n) { g_workers.store(std::max(1, n)); }
int workers() { return g_workers.load(); }

void parallel_blocks(std::size_t n_blocks, const std::function<void(std::size_t)>& body) {
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers()), n_blocks);
    if (nw <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) body(b);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            // strided assignment: block b always runs the same code on the same data
            for (std::size_t b = w; b < n_blocks; b += nw) {
                try {
                    body(b);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

double blocked_sum(std::size_t n, std::size_t block, const std::function<double(std::size_t)>& f) {
    if (n == 0) return 0.0;
    block = std::max<std::size_t>(1, block);
    const std::size_t nb = (n + block - 1) / block;
    std::vector<double> partial(nb, 0.0);
    parallel_blocks(nb, [&](std::size_t b) {
        double acc = 0.0;
        const std::size_t hi = std::min(n, (b + 1) * block);
        for (std::size_t i = b * block; i < hi; ++i) acc += f(i);
        partial[b] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace fraclayer
