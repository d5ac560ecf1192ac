#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rboost/calibration.hpp"
#include "rboost/dataset.hpp"
#include "rboost/flip_matrix.hpp"
#include "rboost/robust_lr.hpp"

namespace rboost {

// Per-sample halves of the unnormalized boosting distribution. For a sample
// with ensemble score H, the true values are d_keep = e^{-y~H} and
// d_flip = e^{+y~H} times the single shared factor exp(log_scale); the factor
// absorbs both the e^{-alpha} dropped by every round's update and any
// overflow rescaling, so it is identical across samples and across the two
// vectors.
struct SampleWeightTable {
    std::vector<double> d_keep;
    std::vector<double> d_flip;
    double log_scale = 0.0;
};

struct Member {
    double alpha = 0.0;
    RobustLinearModel model;
};

enum class GammaMode { identity, fixed, estimate, trusted };

struct Ensemble {
    std::vector<Member> members;
    std::vector<FlipMatrix> gamma_trace;     // one entry per round
    std::optional<PlattModel> calibration;   // last fitted calibration
};

struct BoostConfig {
    std::size_t rounds = 150;
    GammaMode gamma_mode = GammaMode::identity;
    FlipMatrix fixed_gamma;                  // used when gamma_mode == fixed
    std::optional<Dataset> trusted;          // used when gamma_mode == trusted
    double alpha_max = 10.0;
    double alpha_tol = 1e-8;
    FitConfig learner;
    std::uint64_t seed = 0;
    double gamma_init_offdiag = 0.2;         // estimate/trusted start
    CalibrationKind calibration = CalibrationKind::platt;
};

// Fresh table with all entries 1, so that gamma * d reproduces gamma at the
// zero-ensemble state. The table itself never depends on gamma.
SampleWeightTable init_sample_weights(const FlipMatrix& gamma,
                                      const std::vector<int>& labels);

// Signed per-sample weights: keep-coefficient times d_keep minus
// flip-coefficient times d_flip, with rows of gamma assigned per observed
// label (row 0 for +1, row 1 for -1).
std::vector<double> effective_weights(const SampleWeightTable& table,
                                      const FlipMatrix& gamma,
                                      const std::vector<int>& labels);

// Unnormalized signed misclassification mass sum_i w_i * 1(pred != label).
double weighted_error(const std::vector<int>& predictions,
                      const std::vector<int>& labels,
                      const std::vector<double>& w);

// Root of f(a) = 2cosh(a)*epsilon - e^{-a}*A + e^{a}*B on
// [-alpha_max, alpha_max] to |f| <= tol; if f has no sign change there,
// the endpoint minimizing the round objective 2sinh(a)*epsilon + e^{-a}*A +
// e^{a}*B. A and B are the keep and flip masses of the current table.
double solve_alpha(double epsilon, double A, double B, double alpha_max,
                   double tol);

// One round of the multiplicative table update: mistakes scale d_keep by
// e^{2 alpha}, hits scale d_flip by e^{2 alpha}; the dropped shared e^{-alpha}
// goes into log_scale, as does any rescue rescale when entries grow past
// 1e100.
SampleWeightTable update_sample_weights(const SampleWeightTable& table,
                                        const std::vector<int>& predictions,
                                        const std::vector<int>& labels,
                                        double alpha);

// Two-sided exponential loss of the ensemble scores H: observed +1 costs
// g00*e^{-H} + g01*e^{+H}, observed -1 costs g11*e^{+H} + g10*e^{-H}.
double rboost_loss(const std::vector<double>& H, const FlipMatrix& gamma,
                   const std::vector<int>& labels);

// The same loss for the candidate next-round ensemble in stepwise form:
// 2sinh(alpha)*epsilon + e^{-alpha}*A + e^{alpha}*B, scaled by
// exp(log_scale) so it equals rboost_loss at the updated scores.
double stepwise_loss(const SampleWeightTable& table, const FlipMatrix& gamma,
                     const std::vector<int>& labels,
                     const std::vector<int>& predictions, double alpha);

// Boosting with the two-sided loss and, in estimate/trusted modes, per-round
// calibrated multiplicative gamma updates. When the signed weights leave
// only one target class, the round uses the constant classifier for that
// class (the arg-max limit). A degenerate base fit yields an alpha = 0
// round; if every round degenerates the run fails.
Ensemble run_rboost(const Dataset& train, const BoostConfig& cfg);

// Independent classic AdaBoost (normalized distribution, closed-form alpha)
// with the same base-learner plumbing and per-round seeds.
Ensemble run_adaboost(const Dataset& train, const BoostConfig& cfg);

// (H(x), sign(H(x))) with ties broken toward +1.
std::pair<double, int> predict_ensemble(const Ensemble& e,
                                        std::span<const double> x);

// Versioned flat-text format, 17 significant digits, bit-faithful loads.
void save_ensemble(const Ensemble& e, const std::string& path);
Ensemble load_ensemble(const std::string& path);

}  // namespace rboost
