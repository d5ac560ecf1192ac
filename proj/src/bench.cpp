#include "rboost/bench.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace rboost {

std::pair<double, double> summarize(const std::vector<double>& values) {
    if (values.empty()) {
        throw std::invalid_argument("summarize: empty input");
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

double error_percent(const Ensemble& e, const Dataset& data,
                     const std::vector<int>& labels) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (predict_ensemble(e, data.row(i)).second != labels[i]) {
            ++wrong;
        }
    }
    return 100.0 * static_cast<double>(wrong) /
           static_cast<double>(data.size());
}

// Per-round error of the growing partial ensemble, one entry per member.
std::vector<double> curve_percent(const Ensemble& e, const Dataset& data,
                                  const std::vector<int>& labels) {
    std::vector<double> H(data.size(), 0.0);
    std::vector<double> curve;
    curve.reserve(e.members.size());
    for (const Member& m : e.members) {
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            H[i] += m.alpha * predict(m.model, data.row(i));
            const int label = H[i] >= 0.0 ? +1 : -1;
            if (label != labels[i]) {
                ++wrong;
            }
        }
        curve.push_back(100.0 * static_cast<double>(wrong) /
                        static_cast<double>(data.size()));
    }
    return curve;
}

FitConfig learner_config(const ExperimentConfig& cfg) {
    FitConfig fc = cfg.learner_cfg;
    if (cfg.learner == Learner::lr) {
        fc.freeze_omega = true;
        fc.omega_init_offdiag = 0.0;
    } else {
        fc.freeze_omega = false;
        if (fc.omega_init_offdiag <= 0.0) {
            fc.omega_init_offdiag = 0.2;
        }
    }
    return fc;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) {
        throw std::invalid_argument("run_experiment: repetitions must be >= 1");
    }
    if (cfg.rounds < 1) {
        throw std::invalid_argument("run_experiment: rounds must be >= 1");
    }
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        throw std::invalid_argument(
            "run_experiment: train_fraction must lie in (0, 1)");
    }
    if (cfg.booster == Booster::adaboost &&
        cfg.gamma_mode != GammaMode::identity) {
        throw std::invalid_argument(
            "run_experiment: adaboost supports gamma mode identity only");
    }
    if (cfg.gamma_mode == GammaMode::trusted && cfg.trusted_size < 4) {
        throw std::invalid_argument(
            "run_experiment: trusted_size must be >= 4");
    }
    cfg.noise.expand();  // validates kind and rate up front

    const Dataset data =
        cfg.csv_path.empty()
            ? generate_two_gaussians(cfg.synthetic.n, cfg.synthetic.dim,
                                     cfg.synthetic.separation, cfg.base_seed)
            : load_csv(cfg.csv_path, cfg.label_column, cfg.positive_token,
                       cfg.csv_has_header);

    ResultRow row;
    row.dataset = data.name;
    row.noise_kind = cfg.noise.kind;
    row.rate = cfg.noise.rate;
    row.booster = cfg.booster;
    row.learner = cfg.learner;
    row.gamma_mode = cfg.gamma_mode;

    for (std::uint64_t r = 1; r <= cfg.repetitions; ++r) {
        const std::uint64_t seed_r = cfg.base_seed + r;
        try {
            auto [train, test] = split(data, cfg.train_fraction, seed_r);

            Dataset trusted;
            if (cfg.gamma_mode == GammaMode::trusted) {
                // carved from held-out data before any noise, so its labels
                // are clean; it is never added to the training side
                auto [carved, rest] = take_stratified(
                    test, cfg.trusted_size, mix_seed(seed_r, 0x74727573));
                trusted = std::move(carved);
                test = std::move(rest);
            }

            NoiseSpec noise = cfg.noise;
            noise.seed = mix_seed(seed_r, cfg.noise.seed);
            const Dataset noisy_train = inject_label_noise(train, noise);

            BoostConfig bc;
            bc.rounds = cfg.rounds;
            bc.gamma_mode = cfg.gamma_mode;
            bc.fixed_gamma = cfg.fixed_gamma;
            if (cfg.gamma_mode == GammaMode::trusted) {
                bc.trusted = std::move(trusted);
            }
            bc.alpha_max = cfg.alpha_max;
            bc.alpha_tol = cfg.alpha_tol;
            bc.learner = learner_config(cfg);
            bc.seed = seed_r;
            bc.gamma_init_offdiag = cfg.gamma_init_offdiag;

            const Ensemble ensemble = cfg.booster == Booster::adaboost
                                          ? run_adaboost(noisy_train, bc)
                                          : run_rboost(noisy_train, bc);

            row.per_rep_errors.push_back(
                error_percent(ensemble, test, test.labels));
            row.rep_ids.push_back(r);
            if (cfg.curves) {
                row.train_curves.push_back(
                    curve_percent(ensemble, noisy_train, noisy_train.labels));
                row.test_curves.push_back(
                    curve_percent(ensemble, test, test.labels));
            }
        } catch (const std::exception& err) {
            ++row.failed_reps;
            std::cerr << "run_experiment: repetition " << r
                      << " failed: " << err.what() << "\n";
        }
    }

    if (row.per_rep_errors.empty()) {
        throw NumericError("run_experiment: all repetitions failed");
    }
    ResultTable table;
    table.rows.push_back(std::move(row));
    return table;
}

const char* booster_name(Booster b) {
    return b == Booster::adaboost ? "adaboost" : "rboost";
}

const char* learner_name(Learner l) { return l == Learner::lr ? "lr" : "rlr"; }

const char* gamma_mode_name(GammaMode g) {
    switch (g) {
        case GammaMode::identity:
            return "identity";
        case GammaMode::fixed:
            return "fixed";
        case GammaMode::estimate:
            return "estimate";
        case GammaMode::trusted:
            return "trusted";
    }
    return "unknown";
}

const char* noise_kind_name(NoiseKind k) {
    return k == NoiseKind::symmetric ? "symmetric" : "asymmetric";
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string emit_report(const ResultTable& table, ReportFormat format) {
    if (table.rows.empty()) {
        throw std::invalid_argument("emit_report: empty table");
    }
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        out << "dataset,noise_kind,rate,booster,learner,gamma_mode,mean,std,"
               "reps\n";
        for (const ResultRow& row : table.rows) {
            const auto [mean, std_dev] = summarize(row.per_rep_errors);
            out << row.dataset << ',' << noise_kind_name(row.noise_kind)
                << ',' << fmt17(row.rate) << ',' << booster_name(row.booster)
                << ',' << learner_name(row.learner) << ','
                << gamma_mode_name(row.gamma_mode) << ',' << fmt17(mean)
                << ',' << fmt17(std_dev) << ',' << row.per_rep_errors.size()
                << "\n";
        }
        for (const ResultRow& row : table.rows) {
            if (row.train_curves.empty()) {
                continue;
            }
            out << "\nrep,round,train_error,test_error\n";
            for (std::size_t k = 0; k < row.train_curves.size(); ++k) {
                for (std::size_t t = 0; t < row.train_curves[k].size(); ++t) {
                    out << row.rep_ids[k] << ',' << (t + 1) << ','
                        << fmt17(row.train_curves[k][t]) << ','
                        << fmt17(row.test_curves[k][t]) << "\n";
                }
            }
        }
    } else {
        out << "| dataset | noise | rate | booster | learner | gamma | "
               "error (%) | reps |\n";
        out << "| --- | --- | --- | --- | --- | --- | --- | --- |\n";
        for (const ResultRow& row : table.rows) {
            const auto [mean, std_dev] = summarize(row.per_rep_errors);
            out << "| " << row.dataset << " | "
                << noise_kind_name(row.noise_kind) << " | " << fmt2(row.rate)
                << " | " << booster_name(row.booster) << " | "
                << learner_name(row.learner) << " | "
                << gamma_mode_name(row.gamma_mode) << " | " << fmt2(mean)
                << " ± " << fmt2(std_dev) << " | "
                << row.per_rep_errors.size() << " |\n";
        }
    }
    return out.str();
}

}  // namespace rboost
