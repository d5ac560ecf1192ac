#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rboost/dataset.hpp"
#include "rboost/flip_matrix.hpp"

namespace rboost {

// Numerically safe logistic function; never returns 0, 1 is reached only by
// saturation for large positive inputs.
double sigmoid(double a);

// Linear model over bias-augmented features together with the flip table
// omega that links the latent true label to the observed one.
struct RobustLinearModel {
    std::vector<double> beta;  // length m+1, last entry is the bias
    FlipMatrix omega;

    // beta^T x + bias; x has length m
    double score(std::span<const double> x) const;
};

struct FitConfig {
    std::size_t max_outer_iters = 50;   // beta/omega alternations
    double grad_tol = 1e-6;             // L2 norm target for the beta ascent
    double omega_tol = 1e-8;            // max entry change per omega sweep
    std::size_t max_omega_iters = 100;  // omega sweeps per alternation
    double subsample_fraction = 1.0;    // in (0, 1]; < 1 fits on a subsample
    std::uint64_t seed = 0;
    double omega_init_offdiag = 0.2;    // in [0, 0.5); 0 freezes at identity
    bool freeze_omega = false;
};

// (p(obs = +1 | x), p(obs = -1 | x)) under the latent flip model:
// p1 = w11*s + w01*(1-s), p0 = w10*s + w00*(1-s) with s = sigmoid(score).
std::pair<double, double> noisy_posterior(const RobustLinearModel& model,
                                          std::span<const double> x);

// Sum of weight_i * log p(observed label_i | x_i); probabilities are clamped
// to [1e-12, 1-1e-12] before the log. Weights must be nonnegative.
double weighted_log_likelihood(const RobustLinearModel& model,
                               const Dataset& data,
                               const std::vector<double>& sample_weights);

// Gradient of weighted_log_likelihood with respect to beta (bias included).
std::vector<double> log_likelihood_gradient(
    const RobustLinearModel& model, const Dataset& data,
    const std::vector<double>& sample_weights);

// One multiplicative fixed-point step on omega with beta held fixed.
// Preserves row-stochasticity and entry zeros; throws DegenerateError when a
// normalizing row sum vanishes.
FlipMatrix update_omega(const RobustLinearModel& model, const Dataset& data,
                        const std::vector<double>& sample_weights);

// Alternates conjugate-gradient ascent on beta with omega sweeps until both
// tolerances hold or max_outer_iters is exhausted. When objective_trace is
// given it receives the weighted log-likelihood after every ascent phase and
// every omega sweep (first entry: the initial value).
RobustLinearModel fit_robust_lr(const Dataset& data,
                                const std::vector<double>& sample_weights,
                                const FitConfig& cfg,
                                std::vector<double>* objective_trace);

RobustLinearModel fit_robust_lr(const Dataset& data,
                                const std::vector<double>& sample_weights,
                                const FitConfig& cfg);

// +1 iff the latent true-label posterior sigmoid(score) >= 0.5.
int predict(const RobustLinearModel& model, std::span<const double> x);

}  // namespace rboost
