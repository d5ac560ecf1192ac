#include "rboost/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "rboost/robust_lr.hpp"

namespace rboost {

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

// Cross-entropy of 1/(1+e^z) against target t, stable for any z:
// (t-1)z + log(1+e^z).
double platt_term(double z, double t) {
    if (z >= 0.0) {
        return t * z + std::log1p(std::exp(-z));
    }
    return (t - 1.0) * z + std::log1p(std::exp(z));
}

double platt_loss(const std::vector<double>& scores,
                  const std::vector<double>& targets, double A, double B) {
    double loss = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        loss += platt_term(A * scores[i] + B, targets[i]);
    }
    return loss;
}

}  // namespace

PlattModel fit_platt(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("fit_platt: length mismatch");
    }
    if (scores.size() < 4) {
        throw std::invalid_argument("fit_platt: need at least 4 samples");
    }
    double n_pos = 0.0, n_neg = 0.0;
    for (int y : labels) {
        (y > 0 ? n_pos : n_neg) += 1.0;
    }
    if (n_pos == 0.0 || n_neg == 0.0) {
        throw std::invalid_argument("fit_platt: both classes required");
    }

    const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    const double t_neg = 1.0 / (n_neg + 2.0);
    std::vector<double> targets(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        targets[i] = labels[i] > 0 ? t_pos : t_neg;
    }

    double A = 0.0;
    double B = std::log((n_neg + 1.0) / (n_pos + 1.0));
    double loss = platt_loss(scores, targets, A, B);

    for (int iter = 0; iter < 100; ++iter) {
        double gA = 0.0, gB = 0.0;
        double hAA = 1e-12, hAB = 0.0, hBB = 1e-12;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            const double p = sigmoid(-(A * scores[i] + B));
            const double d = targets[i] - p;
            gA += d * scores[i];
            gB += d;
            const double v = p * (1.0 - p);
            hAA += v * scores[i] * scores[i];
            hAB += v * scores[i];
            hBB += v;
        }
        if (std::max(std::abs(gA), std::abs(gB)) <= 1e-8) {
            break;
        }
        const double det = hAA * hBB - hAB * hAB;
        double dA = -(hBB * gA - hAB * gB) / det;
        double dB = -(hAA * gB - hAB * gA) / det;

        double step = 1.0;
        for (int half = 0; half < 60; ++half) {
            const double cand =
                platt_loss(scores, targets, A + step * dA, B + step * dB);
            if (cand <= loss) {
                A += step * dA;
                B += step * dB;
                loss = cand;
                break;
            }
            step *= 0.5;
        }
    }
    return {A, B};
}

double calibrate(const PlattModel& model, double H) {
    return clamp_prob(sigmoid(-(model.A * H + model.B)));
}

double gamma_objective(const FlipMatrix& gamma, const std::vector<double>& P,
                       const std::vector<int>& labels) {
    if (P.size() != labels.size()) {
        throw std::invalid_argument("gamma_objective: length mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double p = clamp_prob(P[i]);
        const double mix = labels[i] > 0
                               ? gamma(1, 1) * p + gamma(0, 1) * (1.0 - p)
                               : gamma(0, 0) * (1.0 - p) + gamma(1, 0) * p;
        loss -= std::log(mix);
    }
    return loss;
}

FlipMatrix update_gamma(const FlipMatrix& gamma, const std::vector<double>& P,
                        const std::vector<int>& labels) {
    if (P.size() != labels.size()) {
        throw std::invalid_argument("update_gamma: length mismatch");
    }
    double g11 = 0.0, g10 = 0.0, g01 = 0.0, g00 = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const double p = clamp_prob(P[i]);
        if (labels[i] > 0) {
            const double mix = gamma(1, 1) * p + gamma(0, 1) * (1.0 - p);
            g11 += p / mix;
            g01 += (1.0 - p) / mix;
        } else {
            const double mix = gamma(1, 0) * p + gamma(0, 0) * (1.0 - p);
            g10 += p / mix;
            g00 += (1.0 - p) / mix;
        }
    }
    g11 *= gamma(1, 1);
    g10 *= gamma(1, 0);
    g01 *= gamma(0, 1);
    g00 *= gamma(0, 0);
    const double row1 = g10 + g11;
    const double row0 = g00 + g01;
    if (row1 == 0.0 || row0 == 0.0) {
        throw DegenerateError("update_gamma: normalizing row sum is zero");
    }
    return FlipMatrix(g00 / row0, g01 / row0, g10 / row1, g11 / row1);
}

GammaEstimate estimate_gamma(const FlipMatrix& init,
                             const std::vector<double>& P,
                             const std::vector<int>& labels, double tol,
                             std::size_t max_sweeps) {
    GammaEstimate est;
    est.gamma = init;
    est.loss_trace.push_back(gamma_objective(est.gamma, P, labels));
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        const FlipMatrix next = update_gamma(est.gamma, P, labels);
        const double change = next.max_diff(est.gamma);
        est.gamma = next;
        est.loss_trace.push_back(gamma_objective(est.gamma, P, labels));
        if (change <= tol) {
            break;
        }
    }
    return est;
}

PlattModel trusted_calibration(
    const Dataset& trusted,
    const std::function<double(std::span<const double>)>& scorer) {
    std::vector<double> scores(trusted.size());
    for (std::size_t i = 0; i < trusted.size(); ++i) {
        scores[i] = scorer(trusted.row(i));
    }
    return fit_platt(scores, trusted.labels);
}

}  // namespace rboost
