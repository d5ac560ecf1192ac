#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rboost/common.hpp"
#include "rboost/flip_matrix.hpp"

namespace rboost {

// Feature matrix with observed +/-1 labels. After noise injection,
// true_labels keeps the pre-noise labels; it is empty otherwise.
struct Dataset {
    std::vector<double> features;  // row-major, size() == n * n_features
    std::vector<int> labels;       // +1 / -1
    std::vector<int> true_labels;  // empty unless noise was injected
    std::size_t n_features = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    bool has_true_labels() const { return !true_labels.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }

    // throws std::invalid_argument on a broken invariant
    void validate() const;
};

enum class NoiseKind { symmetric, asymmetric };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::symmetric;
    double rate = 0.0;  // in [0, 0.5]
    std::uint64_t seed = 0;
    // asymmetric noise corrupts only this class; the other stays clean
    int affected_class = +1;

    // Expands to the per-class flip table. symmetric(r) has off-diagonals
    // (r, r); asymmetric(r) flips the affected class at rate 2r so that the
    // dataset-level corruption is ~r on balanced classes.
    FlipMatrix expand() const;
};

// One sample per row, comma separated, decimal-point numerics, no quoting.
// label_column < 0 counts from the end (-1 = last column). Rows whose label
// equals positive_token map to +1, the single other token to -1.
Dataset load_csv(const std::string& path, int label_column,
                 const std::string& positive_token, bool has_header = false);

// Balanced two-class isotropic Gaussians with class means at
// +/- (separation / sqrt(dim)) * 1, unit variance. Deterministic per seed.
Dataset generate_two_gaussians(std::size_t n, std::size_t dim,
                               double separation, std::uint64_t seed);

// Returns a copy with each label independently flipped at its class rate.
// The copy's true_labels hold the input labels. Rejects double injection.
Dataset inject_label_noise(const Dataset& data, const NoiseSpec& spec);

// Stratified (by observed label) disjoint partition into (train, test).
// Deterministic per seed.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                  std::uint64_t seed);

// Removes `count` stratified samples from `data` and returns them as the
// first element, the remainder as the second. Used to carve trusted
// calibration sets out of held-out data.
std::pair<Dataset, Dataset> take_stratified(const Dataset& data,
                                            std::size_t count,
                                            std::uint64_t seed);

}  // namespace rboost
