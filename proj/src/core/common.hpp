#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for all errors raised by the library. The C API maps each
/// subclass to a distinct status code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed input file (bad magic, ragged CSV, truncation).
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite values encountered during numeric computation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// An API contract was broken (e.g. a stale forward cache).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Input that makes the requested computation undefined (e.g. a zero
/// distance under the fuzzy membership).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

// Salts for deriving independent random streams from one experiment seed.
inline constexpr std::uint64_t kSaltNetworkInit = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kSaltRepresentatives = 0xbf58476d1ce4e5b9ULL;
inline constexpr std::uint64_t kSaltMinibatch = 0x94d049bb133111ebULL;
inline constexpr std::uint64_t kSaltSplit = 0xd6e8feb86659fd93ULL;
inline constexpr std::uint64_t kSaltBlobs = 0xa0761d6478bd642fULL;

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a base seed with a salt (and optional index) so that distinct
/// consumers of the same experiment seed see independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt, std::uint64_t index = 0) {
    return splitmix64(base ^ splitmix64(salt + 0x632be59bd9b4e019ULL * (index + 1)));
}

/// Deterministic, platform-independent random stream. All distributions are
/// implemented by hand on top of a xoshiro-style 64-bit generator so that a
/// seed yields the same values on every standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal deviate (Marsaglia polar method).
    double normal();

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::size_t uniform_index(std::size_t n);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        if (values.size() < 2) return;
        for (std::size_t i = values.size() - 1; i > 0; --i) {
            std::size_t j = uniform_index(i + 1);
            std::swap(values[i], values[j]);
        }
    }

private:
    std::uint64_t state_[4];
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

/// True when every entry of m is finite.
bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

/// Shortest decimal representation that round-trips a double exactly.
std::string format_double(double value);

/// FNV-1a 64-bit hash, used for dataset fingerprints.
class Fnv1a {
public:
    void update(const void* data, std::size_t len);
    std::uint64_t digest() const { return hash_; }
    std::string hex() const;

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace dkm
