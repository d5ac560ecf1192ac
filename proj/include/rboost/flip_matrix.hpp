#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace rboost {

// 2x2 row-stochastic table of label-flip probabilities.
// Entry (j, k) is the probability that true class j is observed as class k,
// with class 0 <-> label -1 and class 1 <-> label +1 throughout the library.
class FlipMatrix {
public:
    FlipMatrix() : p_{1.0, 0.0, 0.0, 1.0} {}

    FlipMatrix(double p00, double p01, double p10, double p11)
        : p_{p00, p01, p10, p11} {
        validate();
    }

    static FlipMatrix identity() { return FlipMatrix(); }

    // off-diagonals: p01 = p(observed +1 | true -1), p10 = p(observed -1 | true +1)
    static FlipMatrix from_off_diagonals(double p01, double p10) {
        return FlipMatrix(1.0 - p01, p01, p10, 1.0 - p10);
    }

    double operator()(int true_class, int observed_class) const {
        return p_[static_cast<std::size_t>(true_class) * 2 +
                  static_cast<std::size_t>(observed_class)];
    }

    bool is_identity() const {
        return p_[0] == 1.0 && p_[1] == 0.0 && p_[2] == 0.0 && p_[3] == 1.0;
    }

    // largest absolute entry difference
    double max_diff(const FlipMatrix& other) const {
        double d = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            d = std::max(d, std::abs(p_[i] - other.p_[i]));
        }
        return d;
    }

private:
    void validate() const {
        for (double v : p_) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument(
                    "FlipMatrix: entries must lie in [0, 1]");
            }
        }
        if (std::abs(p_[0] + p_[1] - 1.0) > 1e-12 ||
            std::abs(p_[2] + p_[3] - 1.0) > 1e-12) {
            throw std::invalid_argument("FlipMatrix: rows must sum to 1");
        }
    }

    std::array<double, 4> p_;  // row-major: (0,0) (0,1) (1,0) (1,1)
};

inline int class_index(int label) { return label > 0 ? 1 : 0; }
inline int class_label(int index) { return index == 1 ? +1 : -1; }

}  // namespace rboost
