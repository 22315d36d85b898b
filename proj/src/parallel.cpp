#include "cafpca/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace cafpca {

namespace {

thread_local bool inside_worker = false;

std::size_t read_thread_cap() {
    std::size_t hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("CAFPCA_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v < 1) return 1;
        return std::min(static_cast<std::size_t>(v), hw);
    }
    return hw;
}

}  // namespace

std::size_t max_threads() {
    static const std::size_t cap = read_thread_cap();
    return cap;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t nthreads = max_threads();
    if (nthreads > n) nthreads = n;
    if (nthreads <= 1 || inside_worker) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> first_error_index{n};
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t tid) {
        inside_worker = true;
        // static striding keeps the index->thread map fixed, though results
        // do not depend on it (each iteration is independent)
        for (std::size_t i = tid; i < n; i += nthreads) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                std::size_t cur = first_error_index.load();
                while (i < cur && !first_error_index.compare_exchange_weak(cur, i)) {
                }
            }
        }
        inside_worker = false;
    };

    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(body, t);
    body(0);
    for (auto& th : pool) th.join();

    std::size_t bad = first_error_index.load();
    if (bad < n) std::rethrow_exception(errors[bad]);
}

}  // namespace cafpca
