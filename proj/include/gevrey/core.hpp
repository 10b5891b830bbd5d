#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gevrey {

using Complex = std::complex<double>;

/// Failure categories. The command line maps them onto exit codes.
enum class ErrorKind {
    invalid_instance,
    inconsistent_exponents,
    validation,
    resonant_index,
    ill_founded,
    kernel_singular,
    outside_strip,
    invalid_direction,
    outside_certified_domain,
    no_admissible_covering,
    shape_mismatch,
    degenerate_fit,
    oracle_mismatch,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// True for failures that concern numeric certification rather than input shape.
inline bool is_numeric_failure(ErrorKind k) {
    switch (k) {
    case ErrorKind::resonant_index:
    case ErrorKind::ill_founded:
    case ErrorKind::kernel_singular:
    case ErrorKind::outside_strip:
    case ErrorKind::invalid_direction:
    case ErrorKind::outside_certified_domain:
    case ErrorKind::no_admissible_covering:
    case ErrorKind::oracle_mismatch:
    case ErrorKind::internal:
        return true;
    default:
        return false;
    }
}

namespace detail {
inline std::size_t& worker_count() {
    static std::size_t n = [] {
        if (const char* env = std::getenv("GEVREY_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        return std::size_t{1};
    }();
    return n;
}
} // namespace detail

/// Upper bound on worker threads used by parallel loops. Defaults to GEVREY_THREADS or 1.
inline std::size_t thread_count() { return detail::worker_count(); }
inline void set_thread_count(std::size_t n) { detail::worker_count() = std::max<std::size_t>(1, n); }

/// Runs body(i) for i in [0, n). Each index is handled by exactly one worker with a
/// fixed contiguous partition, so results never depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, w, &body, &failures] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
}

/// Exact integer power of a complex number; negative exponents divide.
template <class T>
std::complex<T> ipow(std::complex<T> z, int p) {
    std::complex<T> r(1), b = z;
    unsigned e = static_cast<unsigned>(p < 0 ? -p : p);
    while (e) {
        if (e & 1u) r *= b;
        b *= b;
        e >>= 1u;
    }
    return p < 0 ? std::complex<T>(1) / r : r;
}

} // namespace gevrey
