#pragma once

#include <cstdint>
#include <random>

namespace gsa {

/// Seedable generator with a portable output stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distribution helpers below are implemented here rather than
/// taken from <random> because the standard distributions are
/// implementation-defined, which would make designs differ between
/// standard libraries.
class Rng {
public:
    static constexpr const char* kAlgorithm = "mt19937_64 (53-bit uniform, Lemire bounded int, inverse-CDF normal)";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform_open();

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    double standard_normal();

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent sub-stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace gsa
