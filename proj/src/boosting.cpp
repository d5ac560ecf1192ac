#include "rboost/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rboost {

namespace {

constexpr double kRescaleThreshold = 1e100;

void check_lengths(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": length mismatch");
    }
}

double keep_coef(const FlipMatrix& gamma, int label) {
    return label > 0 ? gamma(0, 0) : gamma(1, 1);
}

double flip_coef(const FlipMatrix& gamma, int label) {
    return label > 0 ? gamma(0, 1) : gamma(1, 0);
}

}  // namespace

SampleWeightTable init_sample_weights(const FlipMatrix& gamma,
                                      const std::vector<int>& labels) {
    (void)gamma;  // applied at use time; the table starts at the H = 0 state
    SampleWeightTable table;
    table.d_keep.assign(labels.size(), 1.0);
    table.d_flip.assign(labels.size(), 1.0);
    table.log_scale = 0.0;
    return table;
}

std::vector<double> effective_weights(const SampleWeightTable& table,
                                      const FlipMatrix& gamma,
                                      const std::vector<int>& labels) {
    check_lengths(table.d_keep.size(), labels.size(), "effective_weights");
    std::vector<double> w(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        w[i] = keep_coef(gamma, labels[i]) * table.d_keep[i] -
               flip_coef(gamma, labels[i]) * table.d_flip[i];
    }
    return w;
}

double weighted_error(const std::vector<int>& predictions,
                      const std::vector<int>& labels,
                      const std::vector<double>& w) {
    check_lengths(predictions.size(), labels.size(), "weighted_error");
    check_lengths(w.size(), labels.size(), "weighted_error");
    double eps = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] != labels[i]) {
            eps += w[i];
        }
    }
    return eps;
}

double solve_alpha(double epsilon, double A, double B, double alpha_max,
                   double tol) {
    if (!(A >= 0.0) || !(B >= 0.0)) {
        throw std::invalid_argument("solve_alpha: A and B must be >= 0");
    }
    if (A + B <= 0.0) {
        throw DegenerateError("solve_alpha: total weight mass is zero");
    }
    if (!(alpha_max > 0.0) || !(tol > 0.0)) {
        throw std::invalid_argument("solve_alpha: alpha_max and tol must be > 0");
    }

    const auto f = [&](double a) {
        return (epsilon + B) * std::exp(a) - (A - epsilon) * std::exp(-a);
    };
    const auto objective = [&](double a) {
        return (epsilon + B) * std::exp(a) + (A - epsilon) * std::exp(-a);
    };

    double lo = -alpha_max;
    double hi = alpha_max;
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_hi == 0.0) {
        return hi;
    }
    if (f_lo > 0.0 && f_hi > 0.0) {
        return lo;  // objective increasing on the whole bracket
    }
    if (f_lo < 0.0 && f_hi < 0.0) {
        return hi;  // objective decreasing on the whole bracket
    }
    if (f_lo > 0.0) {
        // f is nondecreasing on the bracket whenever it changes sign, so this
        // orientation cannot occur with valid masses; fall back to the better
        // endpoint for safety.
        return objective(lo) <= objective(hi) ? lo : hi;
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        const double f_mid = f(mid);
        if (f_mid == 0.0) {
            return mid;
        }
        if (f_mid < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) {
            break;
        }
    }
    return 0.5 * (lo + hi);
}

SampleWeightTable update_sample_weights(const SampleWeightTable& table,
                                        const std::vector<int>& predictions,
                                        const std::vector<int>& labels,
                                        double alpha) {
    check_lengths(table.d_keep.size(), labels.size(), "update_sample_weights");
    check_lengths(predictions.size(), labels.size(), "update_sample_weights");
    if (!std::isfinite(alpha)) {
        throw std::invalid_argument("update_sample_weights: alpha not finite");
    }

    SampleWeightTable out = table;
    const double grow = std::exp(2.0 * alpha);
    double max_entry = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] != labels[i]) {
            out.d_keep[i] *= grow;
        } else {
            out.d_flip[i] *= grow;
        }
        max_entry = std::max({max_entry, out.d_keep[i], out.d_flip[i]});
    }
    out.log_scale -= alpha;

    if (max_entry > kRescaleThreshold) {
        const double scale = max_entry;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            out.d_keep[i] /= scale;
            out.d_flip[i] /= scale;
        }
        out.log_scale += std::log(scale);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!std::isfinite(out.d_keep[i]) || !std::isfinite(out.d_flip[i])) {
            throw NumericError("update_sample_weights: weight overflow");
        }
    }
    return out;
}

double rboost_loss(const std::vector<double>& H, const FlipMatrix& gamma,
                   const std::vector<int>& labels) {
    check_lengths(H.size(), labels.size(), "rboost_loss");
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        loss += keep_coef(gamma, labels[i]) * std::exp(-labels[i] * H[i]) +
                flip_coef(gamma, labels[i]) * std::exp(labels[i] * H[i]);
    }
    return loss;
}

double stepwise_loss(const SampleWeightTable& table, const FlipMatrix& gamma,
                     const std::vector<int>& labels,
                     const std::vector<int>& predictions, double alpha) {
    const std::vector<double> w = effective_weights(table, gamma, labels);
    const double eps = weighted_error(predictions, labels, w);
    double A = 0.0, B = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        A += keep_coef(gamma, labels[i]) * table.d_keep[i];
        B += flip_coef(gamma, labels[i]) * table.d_flip[i];
    }
    const double value = 2.0 * std::sinh(alpha) * eps +
                         std::exp(-alpha) * A + std::exp(alpha) * B;
    return value * std::exp(table.log_scale);
}

namespace {

RobustLinearModel zero_model(std::size_t n_features) {
    RobustLinearModel m;
    m.beta.assign(n_features + 1, 0.0);
    return m;
}

// Limit of the weighted-likelihood arg max when every positively weighted
// sample carries the same target: a bias-only model voting that target.
RobustLinearModel constant_model(std::size_t n_features, int target) {
    RobustLinearModel m = zero_model(n_features);
    m.beta.back() = target;
    return m;
}

void check_train(const Dataset& train) {
    train.validate();
    bool pos = false, neg = false;
    for (int y : train.labels) {
        (y > 0 ? pos : neg) = true;
    }
    if (!pos || !neg) {
        throw std::invalid_argument("boosting: both classes required");
    }
}

std::vector<int> predict_all(const RobustLinearModel& model,
                             const Dataset& data) {
    std::vector<int> preds(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        preds[i] = predict(model, data.row(i));
    }
    return preds;
}

}  // namespace

Ensemble run_rboost(const Dataset& train, const BoostConfig& cfg) {
    check_train(train);
    if (cfg.rounds < 1) {
        throw std::invalid_argument("run_rboost: rounds must be >= 1");
    }

    FlipMatrix gamma;
    const bool adapts = cfg.gamma_mode == GammaMode::estimate ||
                        cfg.gamma_mode == GammaMode::trusted;
    switch (cfg.gamma_mode) {
        case GammaMode::identity:
            gamma = FlipMatrix::identity();
            break;
        case GammaMode::fixed:
            gamma = cfg.fixed_gamma;
            break;
        case GammaMode::estimate:
        case GammaMode::trusted:
            if (!(cfg.gamma_init_offdiag > 0.0 &&
                  cfg.gamma_init_offdiag < 0.5)) {
                throw std::invalid_argument(
                    "run_rboost: gamma_init_offdiag must lie in (0, 0.5) "
                    "for adaptive modes");
            }
            gamma = FlipMatrix::from_off_diagonals(cfg.gamma_init_offdiag,
                                                   cfg.gamma_init_offdiag);
            break;
    }
    if (cfg.gamma_mode == GammaMode::trusted) {
        if (!cfg.trusted.has_value()) {
            throw std::invalid_argument(
                "run_rboost: trusted mode needs a trusted dataset");
        }
        cfg.trusted->validate();
        if (cfg.trusted->n_features != train.n_features) {
            throw std::invalid_argument(
                "run_rboost: trusted set feature width mismatch");
        }
    }

    const std::size_t n = train.size();
    SampleWeightTable table = init_sample_weights(gamma, train.labels);
    std::vector<double> H(n, 0.0);
    std::vector<double> H_trusted;
    if (cfg.gamma_mode == GammaMode::trusted) {
        H_trusted.assign(cfg.trusted->size(), 0.0);
    }

    Ensemble ensemble;
    ensemble.members.reserve(cfg.rounds);
    ensemble.gamma_trace.reserve(cfg.rounds);
    std::size_t degenerate_rounds = 0;

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        const std::vector<double> w =
            effective_weights(table, gamma, train.labels);

        // A negative weight flips the sample's target: minimizing
        // sum w_i 1(h != y~_i) equals minimizing sum |w_i| 1(h != -y~_i).
        Dataset fit_data = train;
        std::vector<double> fit_w(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fit_w[i] = std::abs(w[i]);
            if (w[i] < 0.0) {
                fit_data.labels[i] = -train.labels[i];
            }
            total += fit_w[i];
        }

        FitConfig learner = cfg.learner;
        learner.seed = mix_seed(cfg.seed, t);

        bool want_pos = false, want_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (fit_w[i] > 0.0) {
                (fit_data.labels[i] > 0 ? want_pos : want_neg) = true;
            }
        }

        RobustLinearModel model;
        bool degenerate = total <= 0.0;
        if (want_pos != want_neg) {
            // Every weighted sample asks for the same side (heavy one-sided
            // gamma can sign-flip a whole class), so the likelihood arg max
            // is the constant vote; the next table update rebalances it.
            model = constant_model(train.n_features, want_pos ? +1 : -1);
        } else if (!degenerate) {
            for (double& v : fit_w) {
                v /= total;
            }
            try {
                model = fit_robust_lr(fit_data, fit_w, learner);
            } catch (const DegenerateError& err) {
                degenerate = true;
                std::cerr << "run_rboost: round " << t
                          << " degenerate: " << err.what() << "\n";
            }
        } else {
            std::cerr << "run_rboost: round " << t
                      << " degenerate: zero effective weight mass\n";
        }
        if (degenerate) {
            ++degenerate_rounds;
            ensemble.members.push_back({0.0, zero_model(train.n_features)});
            ensemble.gamma_trace.push_back(gamma);
            continue;
        }

        const std::vector<int> preds = predict_all(model, train);
        const double eps = weighted_error(preds, train.labels, w);
        double A = 0.0, B = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            A += keep_coef(gamma, train.labels[i]) * table.d_keep[i];
            B += flip_coef(gamma, train.labels[i]) * table.d_flip[i];
        }
        const double alpha =
            solve_alpha(eps, A, B, cfg.alpha_max, cfg.alpha_tol);

        table = update_sample_weights(table, preds, train.labels, alpha);
        for (std::size_t i = 0; i < n; ++i) {
            H[i] += alpha * preds[i];
        }
        if (cfg.gamma_mode == GammaMode::trusted) {
            for (std::size_t i = 0; i < cfg.trusted->size(); ++i) {
                H_trusted[i] +=
                    alpha * predict(model, cfg.trusted->row(i));
            }
        }

        if (adapts) {
            PlattModel platt{-1.0, 0.0};
            if (cfg.calibration == CalibrationKind::platt) {
                platt = cfg.gamma_mode == GammaMode::trusted
                            ? fit_platt(H_trusted, cfg.trusted->labels)
                            : fit_platt(H, train.labels);
            }
            std::vector<double> P(n);
            for (std::size_t i = 0; i < n; ++i) {
                P[i] = calibrate(platt, H[i]);
            }
            gamma = estimate_gamma(gamma, P, train.labels).gamma;
            ensemble.calibration = platt;
        }

        ensemble.members.push_back({alpha, std::move(model)});
        ensemble.gamma_trace.push_back(gamma);
    }

    if (degenerate_rounds == cfg.rounds) {
        throw DegenerateError("run_rboost: every round degenerated");
    }
    return ensemble;
}

Ensemble run_adaboost(const Dataset& train, const BoostConfig& cfg) {
    check_train(train);
    if (cfg.rounds < 1) {
        throw std::invalid_argument("run_adaboost: rounds must be >= 1");
    }

    const std::size_t n = train.size();
    std::vector<double> dist(n, 1.0 / static_cast<double>(n));

    Ensemble ensemble;
    ensemble.members.reserve(cfg.rounds);
    std::size_t degenerate_rounds = 0;

    for (std::size_t t = 1; t <= cfg.rounds; ++t) {
        FitConfig learner = cfg.learner;
        learner.seed = mix_seed(cfg.seed, t);

        RobustLinearModel model;
        try {
            model = fit_robust_lr(train, dist, learner);
        } catch (const DegenerateError& err) {
            ++degenerate_rounds;
            std::cerr << "run_adaboost: round " << t
                      << " degenerate: " << err.what() << "\n";
            ensemble.members.push_back({0.0, zero_model(train.n_features)});
            continue;
        }

        const std::vector<int> preds = predict_all(model, train);
        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (preds[i] != train.labels[i]) {
                eps += dist[i];
            }
        }

        double alpha;
        if (eps <= 0.0) {
            alpha = cfg.alpha_max;
        } else if (eps >= 1.0) {
            alpha = -cfg.alpha_max;
        } else {
            alpha = 0.5 * std::log((1.0 - eps) / eps);
            alpha = std::clamp(alpha, -cfg.alpha_max, cfg.alpha_max);
        }

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] *= std::exp(-alpha * train.labels[i] * preds[i]);
            z += dist[i];
        }
        if (!(z > 0.0) || !std::isfinite(z)) {
            throw NumericError("run_adaboost: distribution collapsed");
        }
        for (double& d : dist) {
            d /= z;
        }

        ensemble.members.push_back({alpha, std::move(model)});
    }

    if (degenerate_rounds == cfg.rounds) {
        throw DegenerateError("run_adaboost: every round degenerated");
    }
    return ensemble;
}

std::pair<double, int> predict_ensemble(const Ensemble& e,
                                        std::span<const double> x) {
    if (e.members.empty()) {
        throw std::logic_error("predict_ensemble: empty ensemble");
    }
    double H = 0.0;
    for (const Member& m : e.members) {
        H += m.alpha * predict(m.model, x);
    }
    return {H, H >= 0.0 ? +1 : -1};
}

namespace {

constexpr const char* kHeader = "rboost-ensemble v1";

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void expect_word(std::istream& in, const char* word) {
    std::string tok;
    if (!(in >> tok) || tok != word) {
        throw ParseError(std::string("ensemble file: expected '") + word +
                         "', got '" + tok + "'");
    }
}

double read_double(std::istream& in) {
    double v;
    if (!(in >> v)) {
        throw ParseError("ensemble file: malformed number");
    }
    if (!std::isfinite(v)) {
        throw ParseError("ensemble file: non-finite number");
    }
    return v;
}

FlipMatrix read_flip_matrix(std::istream& in) {
    const double p00 = read_double(in);
    const double p01 = read_double(in);
    const double p10 = read_double(in);
    const double p11 = read_double(in);
    try {
        return FlipMatrix(p00, p01, p10, p11);
    } catch (const std::invalid_argument& err) {
        throw ParseError(std::string("ensemble file: ") + err.what());
    }
}

}  // namespace

void save_ensemble(const Ensemble& e, const std::string& path) {
    for (const Member& m : e.members) {
        if (!std::isfinite(m.alpha)) {
            throw std::invalid_argument("save_ensemble: non-finite alpha");
        }
        for (double b : m.model.beta) {
            if (!std::isfinite(b)) {
                throw std::invalid_argument("save_ensemble: non-finite beta");
            }
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_ensemble: cannot open '" + path + "'");
    }
    const std::size_t m_features =
        e.members.empty() ? 0 : e.members.front().model.beta.size() - 1;
    out << kHeader << "\n";
    out << "features " << m_features << " members " << e.members.size()
        << " gammas " << e.gamma_trace.size() << " calibration "
        << (e.calibration.has_value() ? 1 : 0) << "\n";
    for (const Member& m : e.members) {
        out << "member " << fmt17(m.alpha);
        for (double b : m.model.beta) {
            out << ' ' << fmt17(b);
        }
        const FlipMatrix& w = m.model.omega;
        out << ' ' << fmt17(w(0, 0)) << ' ' << fmt17(w(0, 1)) << ' '
            << fmt17(w(1, 0)) << ' ' << fmt17(w(1, 1)) << "\n";
    }
    for (const FlipMatrix& g : e.gamma_trace) {
        out << "gamma " << fmt17(g(0, 0)) << ' ' << fmt17(g(0, 1)) << ' '
            << fmt17(g(1, 0)) << ' ' << fmt17(g(1, 1)) << "\n";
    }
    if (e.calibration.has_value()) {
        out << "calibration " << fmt17(e.calibration->A) << ' '
            << fmt17(e.calibration->B) << "\n";
    }
    if (!out) {
        throw std::runtime_error("save_ensemble: write failed on '" + path +
                                 "'");
    }
}

Ensemble load_ensemble(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("load_ensemble: cannot open '" + path + "'");
    }
    std::string header;
    if (!std::getline(in, header) || header != kHeader) {
        throw ParseError("load_ensemble: bad header line");
    }

    std::size_t m_features = 0, n_members = 0, n_gammas = 0;
    int has_calibration = 0;
    expect_word(in, "features");
    if (!(in >> m_features)) {
        throw ParseError("ensemble file: malformed feature count");
    }
    expect_word(in, "members");
    if (!(in >> n_members)) {
        throw ParseError("ensemble file: malformed member count");
    }
    expect_word(in, "gammas");
    if (!(in >> n_gammas)) {
        throw ParseError("ensemble file: malformed gamma count");
    }
    expect_word(in, "calibration");
    if (!(in >> has_calibration) ||
        (has_calibration != 0 && has_calibration != 1)) {
        throw ParseError("ensemble file: malformed calibration flag");
    }

    Ensemble e;
    e.members.reserve(n_members);
    for (std::size_t k = 0; k < n_members; ++k) {
        expect_word(in, "member");
        Member m;
        m.alpha = read_double(in);
        m.model.beta.resize(m_features + 1);
        for (double& b : m.model.beta) {
            b = read_double(in);
        }
        m.model.omega = read_flip_matrix(in);
        e.members.push_back(std::move(m));
    }
    e.gamma_trace.reserve(n_gammas);
    for (std::size_t k = 0; k < n_gammas; ++k) {
        expect_word(in, "gamma");
        e.gamma_trace.push_back(read_flip_matrix(in));
    }
    if (has_calibration) {
        expect_word(in, "calibration");
        PlattModel p;
        p.A = read_double(in);
        p.B = read_double(in);
        e.calibration = p;
    }
    return e;
}

}  // namespace rboost
