#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rboost/boosting.hpp"
#include "rboost/dataset.hpp"

namespace rboost {

enum class Booster { adaboost, rboost };
enum class Learner { lr, rlr };
enum class ReportFormat { csv, markdown };

struct SyntheticSpec {
    std::size_t n = 2000;
    std::size_t dim = 2;
    double separation = 2.0;
};

struct ExperimentConfig {
    // data source: csv_path when nonempty, otherwise the synthetic spec
    std::string csv_path;
    int label_column = -1;
    std::string positive_token = "1";
    bool csv_has_header = false;
    SyntheticSpec synthetic;

    NoiseSpec noise;
    double train_fraction = 0.8;
    std::size_t rounds = 150;
    Booster booster = Booster::adaboost;
    Learner learner = Learner::lr;
    GammaMode gamma_mode = GammaMode::identity;
    FlipMatrix fixed_gamma;
    std::size_t repetitions = 10;
    std::uint64_t base_seed = 1;
    std::size_t trusted_size = 20;  // trusted-mode calibration set size
    FitConfig learner_cfg;          // subsample_fraction etc.
    double alpha_max = 10.0;
    double alpha_tol = 1e-8;
    double gamma_init_offdiag = 0.2;
    bool curves = false;            // record per-round train/test errors
};

struct ResultRow {
    std::string dataset;
    NoiseKind noise_kind = NoiseKind::symmetric;
    double rate = 0.0;
    Booster booster = Booster::adaboost;
    Learner learner = Learner::lr;
    GammaMode gamma_mode = GammaMode::identity;
    std::vector<double> per_rep_errors;  // clean-test error, percent
    std::vector<std::uint64_t> rep_ids;  // 1-based repetition numbers
    std::size_t failed_reps = 0;
    // curves[k][t]: error percent after round t+1 of successful rep k
    std::vector<std::vector<double>> train_curves;
    std::vector<std::vector<double>> test_curves;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

// (arithmetic mean, sample standard deviation with n-1 denominator; 0 when
// n == 1). Throws std::invalid_argument on empty input.
std::pair<double, double> summarize(const std::vector<double>& values);

// Runs R repetitions: stratified split, optional trusted carve from the test
// side, noise injection into the training labels only, boosting, and
// clean-test evaluation. Failed repetitions are counted and excluded; if all
// fail, throws NumericError.
ResultTable run_experiment(const ExperimentConfig& cfg);

// Deterministic text report. CSV carries 17 significant digits (plus one
// curve block per row when curves were recorded); markdown renders
// mean +/- std per config row.
std::string emit_report(const ResultTable& table, ReportFormat format);

const char* booster_name(Booster b);
const char* learner_name(Learner l);
const char* gamma_mode_name(GammaMode g);
const char* noise_kind_name(NoiseKind k);

}  // namespace rboost
