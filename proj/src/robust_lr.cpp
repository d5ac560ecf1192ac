#include "rboost/robust_lr.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>

namespace rboost {

double sigmoid(double a) {
    if (a >= 0.0) {
        return 1.0 / (1.0 + std::exp(-a));
    }
    const double e = std::exp(a);
    const double r = e / (1.0 + e);
    return r > 0.0 ? r : DBL_MIN;
}

double RobustLinearModel::score(std::span<const double> x) const {
    if (x.size() + 1 != beta.size()) {
        throw std::invalid_argument("score: feature length mismatch");
    }
    double s = beta.back();
    for (std::size_t j = 0; j < x.size(); ++j) {
        s += beta[j] * x[j];
    }
    return s;
}

std::pair<double, double> noisy_posterior(const RobustLinearModel& model,
                                          std::span<const double> x) {
    const double s = sigmoid(model.score(x));
    const FlipMatrix& w = model.omega;
    const double p1 = w(1, 1) * s + w(0, 1) * (1.0 - s);
    const double p0 = w(1, 0) * s + w(0, 0) * (1.0 - s);
    return {p1, p0};
}

namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

void check_weights(const Dataset& data, const std::vector<double>& w) {
    if (w.size() != data.size()) {
        throw std::invalid_argument("sample_weights length mismatch");
    }
    for (double v : w) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("sample_weights must be nonnegative");
        }
    }
}

}  // namespace

double weighted_log_likelihood(const RobustLinearModel& model,
                               const Dataset& data,
                               const std::vector<double>& sample_weights) {
    check_weights(data, sample_weights);
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (sample_weights[i] == 0.0) {
            continue;
        }
        const auto [p1, p0] = noisy_posterior(model, data.row(i));
        const double p = data.labels[i] > 0 ? p1 : p0;
        ll += sample_weights[i] * std::log(clamp_prob(p));
    }
    return ll;
}

std::vector<double> log_likelihood_gradient(
    const RobustLinearModel& model, const Dataset& data,
    const std::vector<double>& sample_weights) {
    check_weights(data, sample_weights);
    const std::size_t m = data.n_features;
    std::vector<double> grad(m + 1, 0.0);
    const FlipMatrix& w = model.omega;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (sample_weights[i] == 0.0) {
            continue;
        }
        const auto x = data.row(i);
        const double s = sigmoid(model.score(x));
        const double p1 = clamp_prob(w(1, 1) * s + w(0, 1) * (1.0 - s));
        const double p0 = clamp_prob(w(1, 0) * s + w(0, 0) * (1.0 - s));
        const double coef = data.labels[i] > 0 ? (w(1, 1) - w(0, 1)) / p1
                                               : (w(1, 0) - w(0, 0)) / p0;
        const double c = sample_weights[i] * coef * s * (1.0 - s);
        for (std::size_t j = 0; j < m; ++j) {
            grad[j] += c * x[j];
        }
        grad[m] += c;
    }
    return grad;
}

FlipMatrix update_omega(const RobustLinearModel& model, const Dataset& data,
                        const std::vector<double>& sample_weights) {
    check_weights(data, sample_weights);
    const FlipMatrix& w = model.omega;
    double g11 = 0.0, g10 = 0.0, g01 = 0.0, g00 = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (sample_weights[i] == 0.0) {
            continue;
        }
        const double s = sigmoid(model.score(data.row(i)));
        if (data.labels[i] > 0) {
            const double p1 = clamp_prob(w(1, 1) * s + w(0, 1) * (1.0 - s));
            g11 += sample_weights[i] * s / p1;
            g01 += sample_weights[i] * (1.0 - s) / p1;
        } else {
            const double p0 = clamp_prob(w(1, 0) * s + w(0, 0) * (1.0 - s));
            g10 += sample_weights[i] * s / p0;
            g00 += sample_weights[i] * (1.0 - s) / p0;
        }
    }
    g11 *= w(1, 1);
    g10 *= w(1, 0);
    g01 *= w(0, 1);
    g00 *= w(0, 0);
    const double row1 = g10 + g11;
    const double row0 = g00 + g01;
    if (row1 == 0.0 || row0 == 0.0) {
        throw DegenerateError("update_omega: normalizing row sum is zero");
    }
    return FlipMatrix(g00 / row0, g01 / row0, g10 / row1, g11 / row1);
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Polak-Ribiere conjugate gradient ascent with Armijo backtracking.
// Stops at ||grad|| <= grad_tol or when no ascent step can be found.
void cg_ascent(RobustLinearModel& model, const Dataset& data,
               const std::vector<double>& weights, double grad_tol,
               std::size_t max_iters) {
    std::vector<double> g = log_likelihood_gradient(model, data, weights);
    std::vector<double> dir = g;
    double obj = weighted_log_likelihood(model, data, weights);
    for (std::size_t it = 0; it < max_iters; ++it) {
        if (norm2(g) <= grad_tol) {
            return;
        }
        double slope = dot(g, dir);
        if (slope <= 0.0) {
            dir = g;
            slope = dot(g, g);
        }
        double step = 1.0;
        bool moved = false;
        std::vector<double> trial(model.beta.size());
        for (int half = 0; half < 60; ++half) {
            for (std::size_t j = 0; j < trial.size(); ++j) {
                trial[j] = model.beta[j] + step * dir[j];
            }
            RobustLinearModel probe{trial, model.omega};
            const double cand = weighted_log_likelihood(probe, data, weights);
            if (cand >= obj + 1e-4 * step * slope) {
                model.beta = trial;
                obj = cand;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            return;
        }
        std::vector<double> g_new =
            log_likelihood_gradient(model, data, weights);
        const double gg = dot(g, g);
        double beta_pr = 0.0;
        if (gg > 0.0) {
            double num = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) {
                num += g_new[j] * (g_new[j] - g[j]);
            }
            beta_pr = std::max(0.0, num / gg);
        }
        for (std::size_t j = 0; j < dir.size(); ++j) {
            dir[j] = g_new[j] + beta_pr * dir[j];
        }
        g = std::move(g_new);
    }
}

bool both_classes_weighted(const Dataset& data,
                           const std::vector<double>& weights) {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (weights[i] > 0.0) {
            (data.labels[i] > 0 ? pos : neg) = true;
        }
    }
    return pos && neg;
}

Dataset gather(const Dataset& data, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.name = data.name;
    out.n_features = data.n_features;
    out.features.reserve(idx.size() * data.n_features);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        const auto r = data.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(data.labels[i]);
    }
    return out;
}

}  // namespace

RobustLinearModel fit_robust_lr(const Dataset& data,
                                const std::vector<double>& sample_weights,
                                const FitConfig& cfg,
                                std::vector<double>* objective_trace) {
    check_weights(data, sample_weights);
    if (data.size() < 2) {
        throw std::invalid_argument("fit_robust_lr: need at least 2 samples");
    }
    if (!(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0)) {
        throw std::invalid_argument(
            "fit_robust_lr: subsample_fraction must lie in (0, 1]");
    }
    if (!(cfg.omega_init_offdiag >= 0.0 && cfg.omega_init_offdiag < 0.5)) {
        throw std::invalid_argument(
            "fit_robust_lr: omega_init_offdiag must lie in [0, 0.5)");
    }

    const Dataset* fit_data = &data;
    const std::vector<double>* fit_weights = &sample_weights;
    Dataset sub_data;
    std::vector<double> sub_weights;
    if (cfg.subsample_fraction < 1.0) {
        const std::size_t n = data.size();
        const std::size_t k = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(
                cfg.subsample_fraction * static_cast<double>(n))),
            2, n);
        std::vector<std::size_t> idx(n);
        bool found = false;
        // A draw may land on a single effective class; retry on fresh
        // substreams a bounded number of times before giving up.
        for (std::uint64_t attempt = 0; attempt < 32 && !found; ++attempt) {
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            Rng rng(mix_seed(cfg.seed, attempt));
            rng.shuffle(idx);
            idx.resize(k);
            sub_data = gather(data, idx);
            sub_weights.clear();
            for (std::size_t i : idx) {
                sub_weights.push_back(sample_weights[i]);
            }
            found = both_classes_weighted(sub_data, sub_weights);
            idx.resize(n);
        }
        if (!found) {
            throw DegenerateError(
                "fit_robust_lr: subsample has a single effective class");
        }
        fit_data = &sub_data;
        fit_weights = &sub_weights;
    } else if (!both_classes_weighted(data, sample_weights)) {
        throw DegenerateError(
            "fit_robust_lr: effective data has a single class");
    }

    RobustLinearModel model;
    model.beta.assign(data.n_features + 1, 0.0);
    model.omega = FlipMatrix::from_off_diagonals(cfg.omega_init_offdiag,
                                                 cfg.omega_init_offdiag);

    if (objective_trace) {
        objective_trace->push_back(
            weighted_log_likelihood(model, *fit_data, *fit_weights));
    }

    for (std::size_t outer = 0; outer < cfg.max_outer_iters; ++outer) {
        cg_ascent(model, *fit_data, *fit_weights, cfg.grad_tol, 200);
        if (objective_trace) {
            objective_trace->push_back(
                weighted_log_likelihood(model, *fit_data, *fit_weights));
        }

        double omega_change = 0.0;
        if (!cfg.freeze_omega) {
            for (std::size_t sweep = 0; sweep < cfg.max_omega_iters; ++sweep) {
                const FlipMatrix next =
                    update_omega(model, *fit_data, *fit_weights);
                omega_change = next.max_diff(model.omega);
                model.omega = next;
                if (objective_trace) {
                    objective_trace->push_back(weighted_log_likelihood(
                        model, *fit_data, *fit_weights));
                }
                if (omega_change <= cfg.omega_tol) {
                    break;
                }
            }
        }

        const double gnorm =
            norm2(log_likelihood_gradient(model, *fit_data, *fit_weights));
        if (gnorm <= cfg.grad_tol &&
            (cfg.freeze_omega || omega_change <= cfg.omega_tol)) {
            break;
        }
    }

    const FlipMatrix& w = model.omega;
    if (w(1, 1) < w(0, 1) && w(0, 0) < w(1, 0)) {
        // The latent model is invariant to swapping the roles of the two
        // true classes; pick the orientation with dominant diagonals.
        model.omega = FlipMatrix(w(1, 0), w(1, 1), w(0, 0), w(0, 1));
        for (double& b : model.beta) {
            b = -b;
        }
    }
    return model;
}

RobustLinearModel fit_robust_lr(const Dataset& data,
                                const std::vector<double>& sample_weights,
                                const FitConfig& cfg) {
    return fit_robust_lr(data, sample_weights, cfg, nullptr);
}

int predict(const RobustLinearModel& model, std::span<const double> x) {
    return model.score(x) >= 0.0 ? +1 : -1;
}

}  // namespace rboost
