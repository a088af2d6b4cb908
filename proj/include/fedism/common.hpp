#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fedism {

/// Invalid configuration, spec fields, or file contents.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Data could not be split into non-empty shards within the retry budget.
class PartitionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced non-finite parameters or losses.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what, int round = -1)
        : std::runtime_error(round >= 0 ? what + " (round " + std::to_string(round) + ")" : what),
          round_(round) {}
    int round() const { return round_; }

private:
    int round_;
};

/// Metric is undefined for the given inputs (e.g. single-class AUC).
class UndefinedMetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; full avalanche on 64-bit inputs.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent seed stream from a base seed and up to three tags.
/// Used so per-client, per-round randomness never depends on scheduling.
constexpr std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(seed ^ mix64(a));
    s = mix64(s ^ mix64(b));
    return mix64(s ^ mix64(c));
}

}  // namespace fedism
