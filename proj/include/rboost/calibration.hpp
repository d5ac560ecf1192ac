#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rboost/dataset.hpp"
#include "rboost/flip_matrix.hpp"

namespace rboost {

// Score-to-probability map p(y = +1 | H) = 1 / (1 + exp(A*H + B)).
// A < 0 whenever larger scores indicate the positive class.
struct PlattModel {
    double A = 0.0;
    double B = 0.0;
};

enum class CalibrationKind { platt, logistic };

// Fits (A, B) by Newton descent on the cross-entropy against the smoothed
// targets t+ = (N+ + 1)/(N+ + 2) and t- = 1/(N- + 2); converges to gradient
// norm <= 1e-8. Needs both classes and n >= 4.
PlattModel fit_platt(const std::vector<double>& scores,
                     const std::vector<int>& labels);

// Evaluates the model, clamped to [1e-12, 1 - 1e-12].
double calibrate(const PlattModel& model, double H);

// Binomial log-loss of the flip-mixture likelihood: observed +1 contributes
// -log(g11*P + g01*(1-P)), observed -1 contributes -log(g00*(1-P) + g10*P).
double gamma_objective(const FlipMatrix& gamma, const std::vector<double>& P,
                       const std::vector<int>& labels);

// One multiplicative fixed-point sweep on gamma; never increases
// gamma_objective. Throws DegenerateError when a normalizing sum vanishes.
FlipMatrix update_gamma(const FlipMatrix& gamma, const std::vector<double>& P,
                        const std::vector<int>& labels);

struct GammaEstimate {
    FlipMatrix gamma;
    std::vector<double> loss_trace;  // objective before and after each sweep
};

// Iterates update_gamma from `init` until the largest entry change drops to
// `tol` or `max_sweeps` sweeps have run.
GammaEstimate estimate_gamma(const FlipMatrix& init,
                             const std::vector<double>& P,
                             const std::vector<int>& labels,
                             double tol = 1e-6, std::size_t max_sweeps = 100);

// Platt fit on the trusted set only: scores come from `scorer`, targets from
// the trusted labels (clean by construction). Requires both classes, n >= 4.
PlattModel trusted_calibration(
    const Dataset& trusted,
    const std::function<double(std::span<const double>)>& scorer);

}  // namespace rboost
