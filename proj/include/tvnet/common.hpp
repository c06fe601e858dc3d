#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvnet {

// Library-wide scalar type. Double by default; -DTVNET_REAL_FLOAT selects
// single precision for production kernels (tests require the double build).
#ifdef TVNET_REAL_FLOAT
using real = float;
#else
using real = double;
#endif

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity from TVNET_LOG (0..3), default 1 (warnings).
inline int log_verbosity() {
    static int level = [] {
        const char* env = std::getenv("TVNET_LOG");
        return env ? std::atoi(env) : 1;
    }();
    return level;
}

inline bool log_enabled(LogLevel lvl) { return static_cast<int>(lvl) <= log_verbosity(); }

inline void log(LogLevel lvl, const std::string& msg) {
    if (!log_enabled(lvl)) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[tvnet:" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

inline void log_warn(const std::string& msg) { log(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::debug, msg); }

// Deterministic RNG used everywhere. splitmix64-seeded xoshiro-style core is
// overkill here; mt19937_64 plus hand-rolled transforms keeps draws stable
// across standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller, cached second draw.
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mean + stddev * mag * std::cos(2.0 * M_PI * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_u64() % i;
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable sub-seed derivation so pipeline stages draw from independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ull ^ base;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h ? h : 1;
}

}  // namespace tvnet
