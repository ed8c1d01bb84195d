#include "isac_coop/threading.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>

namespace isac {

int default_thread_count() {
    if (const char* env = std::getenv("ISAC_COOP_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(int64_t n, int threads,
                  const std::function<void(int64_t, int64_t, int)>& body) {
    if (n <= 0) return;
    const int t = std::max<int64_t>(1, std::min<int64_t>(threads, n));
    if (t == 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(t));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int c = 0; c < t; ++c) {
        const int64_t begin = n * c / t;
        const int64_t end = n * (c + 1) / t;
        pool.emplace_back([&, begin, end, c]() {
            try {
                body(begin, end, c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace isac
