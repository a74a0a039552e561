#include "physvid/common.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

namespace physvid {

namespace {
int g_threads = []() {
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}();
}  // namespace

int num_threads() { return g_threads; }

void set_num_threads(int n) { g_threads = std::max(1, n); }

void parallel_chunks(int64_t n, int64_t chunk,
                     const std::function<void(int64_t, int64_t)>& fn) {
    if (n <= 0) return;
    int64_t n_chunks = (n + chunk - 1) / chunk;
    int workers = static_cast<int>(std::min<int64_t>(g_threads, n_chunks));
    if (workers <= 1 || n_chunks == 1) {
        fn(0, n);
        return;
    }
    std::atomic<int64_t> next{0};
    auto body = [&]() {
        int64_t c;
        while ((c = next.fetch_add(1)) < n_chunks) {
            int64_t b = c * chunk;
            fn(b, std::min(b + chunk, n));
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
}

std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

}  // namespace physvid
