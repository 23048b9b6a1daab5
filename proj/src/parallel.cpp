#include "coffee/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace coffee {

namespace {
thread_local bool inside_parallel_region = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1 || inside_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = n;
    std::exception_ptr error;

    auto work = [&] {
        inside_parallel_region = true;
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
        inside_parallel_region = false;
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace coffee
