#ifndef BAYESLINGAM_COMMON_HPP
#define BAYESLINGAM_COMMON_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace bayeslingam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or degenerate input data (constant columns, collinear parents, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Structural problems: cycles, out-of-range indices, unparsable graph text.
class GraphError : public Error {
public:
    using Error::Error;
};

/// File and format problems. The CLI maps these to exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values or flags. The CLI maps these to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

namespace seeding {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Named substream of a global seed, further keyed by any number of integers.
/// Independent of call order, so parallel and sequential runs see the same streams.
template <typename... Keys>
std::uint64_t derive(std::uint64_t seed, std::string_view stream, Keys... keys) {
    std::uint64_t h = splitmix64(seed ^ fnv1a(stream));
    ((h = splitmix64(h ^ static_cast<std::uint64_t>(keys))), ...);
    return h;
}

}  // namespace seeding

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// visited once; callers write results into pre-sized slots, so output
/// order never depends on scheduling. The first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_COMMON_HPP
