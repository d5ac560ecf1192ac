#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <random>
#include <vector>

namespace rboost {

// Error taxonomy. Precondition violations throw std::invalid_argument; the
// types below mark failures of the input data or of the numerics themselves.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StratificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent seed for a numbered substream (per-round learner
// seeds, per-repetition seeds). Stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with hand-rolled distributions so that results are
// bit-identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1), 53 bits
    double uniform();

    // standard normal via Box-Muller
    double normal();

    // uniform integer in [0, n), unbiased; n must be > 0
    std::size_t below(std::size_t n);

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rboost
