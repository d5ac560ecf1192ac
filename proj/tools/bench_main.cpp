#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rboost/bench.hpp"

namespace {

// "synthetic:n,dim,sep" or a CSV path
void parse_data(const std::string& arg, rboost::ExperimentConfig& cfg) {
    const std::string prefix = "synthetic:";
    if (arg.rfind(prefix, 0) != 0) {
        cfg.csv_path = arg;
        return;
    }
    unsigned long long n = 0, dim = 0;
    double sep = 0.0;
    if (std::sscanf(arg.c_str() + prefix.size(), "%llu,%llu,%lf", &n, &dim,
                    &sep) != 3) {
        throw CLI::ValidationError(
            "--data", "expected synthetic:<n>,<dim>,<sep> or a CSV path");
    }
    cfg.csv_path.clear();
    cfg.synthetic = {static_cast<std::size_t>(n), static_cast<std::size_t>(dim),
                     sep};
}

// "symmetric:<rate>" or "asymmetric:<rate>"
void parse_noise(const std::string& arg, rboost::ExperimentConfig& cfg) {
    const auto colon = arg.find(':');
    const std::string kind = arg.substr(0, colon);
    if (colon == std::string::npos || (kind != "symmetric" && kind != "asymmetric")) {
        throw CLI::ValidationError(
            "--noise", "expected symmetric:<rate> or asymmetric:<rate>");
    }
    cfg.noise.kind = kind == "symmetric" ? rboost::NoiseKind::symmetric
                                         : rboost::NoiseKind::asymmetric;
    try {
        cfg.noise.rate = std::stod(arg.substr(colon + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--noise", "malformed rate");
    }
}

// identity | estimate | fixed:<g01>,<g10> | trusted:<k>
void parse_gamma(const std::string& arg, rboost::ExperimentConfig& cfg) {
    if (arg == "identity") {
        cfg.gamma_mode = rboost::GammaMode::identity;
        return;
    }
    if (arg == "estimate") {
        cfg.gamma_mode = rboost::GammaMode::estimate;
        return;
    }
    if (arg.rfind("fixed:", 0) == 0) {
        double g01 = 0.0, g10 = 0.0;
        if (std::sscanf(arg.c_str() + 6, "%lf,%lf", &g01, &g10) != 2) {
            throw CLI::ValidationError("--gamma", "expected fixed:<g01>,<g10>");
        }
        cfg.gamma_mode = rboost::GammaMode::fixed;
        cfg.fixed_gamma = rboost::FlipMatrix::from_off_diagonals(g01, g10);
        return;
    }
    if (arg.rfind("trusted:", 0) == 0) {
        unsigned long long k = 0;
        if (std::sscanf(arg.c_str() + 8, "%llu", &k) != 1) {
            throw CLI::ValidationError("--gamma", "expected trusted:<k>");
        }
        cfg.gamma_mode = rboost::GammaMode::trusted;
        cfg.trusted_size = static_cast<std::size_t>(k);
        return;
    }
    throw CLI::ValidationError(
        "--gamma", "expected identity, estimate, fixed:<g01>,<g10> or "
                   "trusted:<k>");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Label-noise-robust boosting benchmark"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "run one experiment config");

    rboost::ExperimentConfig cfg;
    std::string data_arg = "synthetic:2000,2,2.0";
    std::string noise_arg = "symmetric:0.0";
    std::string booster_arg = "adaboost";
    std::string learner_arg = "lr";
    std::string gamma_arg = "identity";
    std::string format_arg = "csv";
    std::string out_path;
    int affected_class = +1;

    run->add_option("--data", data_arg,
                    "synthetic:<n>,<dim>,<sep> or a CSV path");
    run->add_option("--label-col", cfg.label_column,
                    "CSV label column (negative counts from the end)");
    run->add_option("--positive", cfg.positive_token,
                    "CSV token mapped to label +1");
    run->add_flag("--header", cfg.csv_has_header, "CSV has a header row");
    run->add_option("--noise", noise_arg, "symmetric:<rate> or asymmetric:<rate>");
    run->add_option("--affected-class", affected_class,
                    "class corrupted by asymmetric noise (+1 or -1)")
        ->check(CLI::IsMember({-1, 1}));
    run->add_option("--booster", booster_arg, "adaboost or rboost")
        ->check(CLI::IsMember({"adaboost", "rboost"}));
    run->add_option("--learner", learner_arg, "lr or rlr")
        ->check(CLI::IsMember({"lr", "rlr"}));
    run->add_option("--gamma", gamma_arg,
                    "identity | estimate | fixed:<g01>,<g10> | trusted:<k>");
    run->add_option("--rounds", cfg.rounds, "boosting rounds per repetition");
    run->add_option("--reps", cfg.repetitions, "independent repetitions");
    run->add_option("--seed", cfg.base_seed, "base seed for all randomness");
    run->add_option("--train-frac", cfg.train_fraction,
                    "training fraction of the split");
    run->add_option("--subsample", cfg.learner_cfg.subsample_fraction,
                    "base-learner subsample fraction");
    run->add_option("--format", format_arg, "csv or markdown")
        ->check(CLI::IsMember({"csv", "markdown"}));
    run->add_flag("--curves", cfg.curves,
                  "append per-round train/test error curves (csv)");
    run->add_option("--out", out_path, "write the report here (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        parse_data(data_arg, cfg);
        parse_noise(noise_arg, cfg);
        parse_gamma(gamma_arg, cfg);
        cfg.noise.affected_class = affected_class;
        cfg.booster = booster_arg == "adaboost" ? rboost::Booster::adaboost
                                                : rboost::Booster::rboost;
        cfg.learner = learner_arg == "lr" ? rboost::Learner::lr
                                          : rboost::Learner::rlr;

        const rboost::ResultTable table = rboost::run_experiment(cfg);
        const std::string report = rboost::emit_report(
            table, format_arg == "csv" ? rboost::ReportFormat::csv
                                       : rboost::ReportFormat::markdown);
        if (out_path.empty()) {
            std::cout << report;
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                std::cerr << "cannot open output file '" << out_path << "'\n";
                return 2;
            }
            out << report;
        }
        return 0;
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const rboost::NumericError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
}
