#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "rboost/boosting.hpp"
#include "rboost/common.hpp"
#include "rboost/dataset.hpp"

using namespace rboost;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Round objective evaluated straight from its definition.
double round_objective(double alpha, double eps, double A, double B) {
    return 2.0 * std::sinh(alpha) * eps + std::exp(-alpha) * A +
           std::exp(alpha) * B;
}

Dataset noisy_train(std::size_t n, double rate, std::uint64_t seed) {
    const Dataset clean = generate_two_gaussians(n, 2, 2.0, seed);
    return inject_label_noise(clean, {NoiseKind::symmetric, rate, seed + 1});
}

double train_error(const Ensemble& e, const Dataset& d) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (predict_ensemble(e, d.row(i)).second != d.labels[i]) {
            ++wrong;
        }
    }
    return static_cast<double>(wrong) / d.size();
}

}  // namespace

TEST_CASE("init_sample_weights starts every entry at one") {
    const std::vector<int> labels{+1, -1, +1};
    const SampleWeightTable t =
        init_sample_weights(FlipMatrix::from_off_diagonals(0.3, 0.1), labels);
    CHECK(t.d_keep == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(t.d_flip == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(t.log_scale == 0.0);
}

TEST_CASE("effective_weights pairs gamma rows with the observed label") {
    const FlipMatrix g = FlipMatrix::from_off_diagonals(0.3, 0.2);
    SampleWeightTable t;
    t.d_keep = {2.0, 3.0, 0.1};
    t.d_flip = {0.5, 1.0, 10.0};
    const std::vector<int> labels{+1, -1, +1};

    const std::vector<double> w = effective_weights(t, g, labels);
    CHECK(w[0] == doctest::Approx(0.7 * 2.0 - 0.3 * 0.5).epsilon(1e-15));
    CHECK(w[1] == doctest::Approx(0.8 * 3.0 - 0.2 * 1.0).epsilon(1e-15));
    CHECK(w[2] == doctest::Approx(0.7 * 0.1 - 0.3 * 10.0).epsilon(1e-15));
    CHECK(w[2] < 0.0);

    const std::vector<double> id =
        effective_weights(t, FlipMatrix::identity(), labels);
    CHECK(id == t.d_keep);
}

TEST_CASE("weighted_error sums signed mass over mistakes") {
    const std::vector<int> preds{+1, -1, +1};
    const std::vector<int> labels{+1, +1, -1};
    CHECK(weighted_error(preds, labels, {0.5, 2.0, 1.0}) == 3.0);
    CHECK(weighted_error(labels, labels, {0.5, 2.0, 1.0}) == 0.0);
    CHECK(weighted_error(preds, labels, {0.5, -2.0, 1.0}) == -1.0);
}

TEST_CASE("solve_alpha finds the root of the stationarity condition") {
    SUBCASE("interior roots match the closed form") {
        const struct {
            double eps, A, B;
        } cases[] = {{0.2, 1.0, 0.1}, {0.35, 1.0, 0.0}, {1.5, 6.0, 0.4},
                     {-0.3, 1.0, 0.5}};
        for (const auto& c : cases) {
            const double a = solve_alpha(c.eps, c.A, c.B, 10.0, 1e-8);
            const double closed =
                0.5 * std::log((c.A - c.eps) / (c.eps + c.B));
            CHECK(a == doctest::Approx(closed).epsilon(1e-9));
            const double f = 2.0 * std::cosh(a) * c.eps -
                             std::exp(-a) * c.A + std::exp(a) * c.B;
            CHECK(std::abs(f) <= 1e-8);
        }
    }

    SUBCASE("perfect and hopeless rounds clamp to the window edges") {
        CHECK(solve_alpha(0.0, 1.0, 0.0, 10.0, 1e-8) == 10.0);
        CHECK(solve_alpha(-0.5, 1.0, 0.2, 10.0, 1e-8) == 10.0);
        CHECK(solve_alpha(1.0, 1.0, 0.0, 10.0, 1e-8) == -10.0);
        CHECK(solve_alpha(1.0, 1.0, 3.0, 10.0, 1e-8) == -10.0);
    }

    SUBCASE("the solution minimizes the round objective on a dense scan") {
        const struct {
            double eps, A, B;
        } cases[] = {{0.3, 2.0, 0.5}, {-0.2, 1.5, 0.8}, {0.05, 1.0, 0.01}};
        for (const auto& c : cases) {
            const double a = solve_alpha(c.eps, c.A, c.B, 4.0, 1e-10);
            const double at = round_objective(a, c.eps, c.A, c.B);
            double scan_best = 1e300, scan_arg = 0.0;
            for (int k = 0; k <= 100000; ++k) {
                const double x = -4.0 + 8.0 * k / 100000.0;
                const double v = round_objective(x, c.eps, c.A, c.B);
                if (v < scan_best) {
                    scan_best = v;
                    scan_arg = x;
                }
            }
            CHECK(std::abs(a - scan_arg) <= 2.0 * 8.0 / 100000.0);
            CHECK(at <= scan_best + 1e-12);
        }
    }

    SUBCASE("invalid masses and windows are rejected") {
        CHECK_THROWS_AS(solve_alpha(0.1, -1.0, 0.0, 10.0, 1e-8),
                        std::invalid_argument);
        CHECK_THROWS_AS(solve_alpha(0.1, 1.0, -0.1, 10.0, 1e-8),
                        std::invalid_argument);
        CHECK_THROWS_AS(solve_alpha(0.0, 0.0, 0.0, 10.0, 1e-8),
                        DegenerateError);
        CHECK_THROWS_AS(solve_alpha(0.1, 1.0, 0.1, 0.0, 1e-8),
                        std::invalid_argument);
        CHECK_THROWS_AS(solve_alpha(0.1, 1.0, 0.1, 10.0, 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("update_sample_weights tracks the ensemble score exactly") {
    const std::vector<int> labels{+1, +1, -1, -1};

    SUBCASE("alpha zero changes nothing") {
        const SampleWeightTable t0 =
            init_sample_weights(FlipMatrix::identity(), labels);
        const SampleWeightTable t1 =
            update_sample_weights(t0, {+1, -1, +1, -1}, labels, 0.0);
        CHECK(t1.d_keep == t0.d_keep);
        CHECK(t1.d_flip == t0.d_flip);
        CHECK(t1.log_scale == 0.0);
    }

    SUBCASE("one round moves the mistake and hit sides separately") {
        const SampleWeightTable t0 =
            init_sample_weights(FlipMatrix::identity(), labels);
        const double a = 0.4;
        const SampleWeightTable t1 =
            update_sample_weights(t0, {+1, -1, -1, +1}, labels, a);
        const double grow = std::exp(2.0 * a);
        CHECK(t1.d_keep[0] == 1.0);
        CHECK(t1.d_flip[0] == doctest::Approx(grow).epsilon(1e-15));
        CHECK(t1.d_keep[1] == doctest::Approx(grow).epsilon(1e-15));
        CHECK(t1.d_flip[1] == 1.0);
        CHECK(t1.d_keep[2] == 1.0);
        CHECK(t1.d_flip[2] == doctest::Approx(grow).epsilon(1e-15));
        CHECK(t1.d_keep[3] == doctest::Approx(grow).epsilon(1e-15));
        CHECK(t1.d_flip[3] == 1.0);
        CHECK(t1.log_scale == doctest::Approx(-a).epsilon(1e-15));
    }

    SUBCASE("stored values trace e^{-yH} and e^{+yH} across rounds") {
        Rng rng(606);
        SampleWeightTable t =
            init_sample_weights(FlipMatrix::identity(), labels);
        std::vector<double> Hy(labels.size(), 0.0);
        for (int round = 0; round < 6; ++round) {
            std::vector<int> preds(labels.size());
            for (auto& p : preds) {
                p = rng.uniform() < 0.5 ? +1 : -1;
            }
            const double a = rng.uniform();
            t = update_sample_weights(t, preds, labels, a);
            for (std::size_t i = 0; i < labels.size(); ++i) {
                Hy[i] += a * preds[i] * labels[i];
            }
            for (std::size_t i = 0; i < labels.size(); ++i) {
                CHECK(std::log(t.d_keep[i]) + t.log_scale ==
                      doctest::Approx(-Hy[i]).epsilon(1e-9));
                CHECK(std::log(t.d_flip[i]) + t.log_scale ==
                      doctest::Approx(Hy[i]).epsilon(1e-9));
                CHECK(t.d_keep[i] * t.d_flip[i] ==
                      doctest::Approx(t.d_keep[0] * t.d_flip[0])
                          .epsilon(1e-9));
            }
        }
    }

    SUBCASE("huge rounds trigger the overflow rescue") {
        SampleWeightTable t =
            init_sample_weights(FlipMatrix::identity(), labels);
        const std::vector<int> preds{+1, +1, +1, +1};
        t = update_sample_weights(t, preds, labels, 115.0);
        t = update_sample_weights(t, preds, labels, 115.0);
        double mx = 0.0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            mx = std::max({mx, t.d_keep[i], t.d_flip[i]});
        }
        CHECK(mx == 1.0);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double hy = 230.0 * preds[i] * labels[i];
            CHECK(std::log(t.d_keep[i]) + t.log_scale ==
                  doctest::Approx(-hy).epsilon(1e-9));
        }

        CHECK_THROWS_AS(
            update_sample_weights(t, preds, labels, 400.0), NumericError);
    }
}

TEST_CASE("rboost_loss evaluates the two-sided exponential loss") {
    SUBCASE("identity reduces to the exponential loss") {
        const std::vector<double> H{0.5, -1.2, 0.0};
        const std::vector<int> labels{+1, -1, +1};
        double want = 0.0;
        for (std::size_t i = 0; i < H.size(); ++i) {
            want += std::exp(-labels[i] * H[i]);
        }
        CHECK(rboost_loss(H, FlipMatrix::identity(), labels) ==
              doctest::Approx(want).epsilon(1e-14));
    }

    SUBCASE("a positive sample pays both mixture terms") {
        const FlipMatrix g = FlipMatrix::from_off_diagonals(0.3, 0.2);
        const double got = rboost_loss({1.0}, g, {+1});
        CHECK(got == doctest::Approx(0.7 * std::exp(-1.0) +
                                     0.3 * std::exp(1.0))
                         .epsilon(1e-14));
        CHECK(got == doctest::Approx(1.0730).epsilon(1e-4));
    }

    SUBCASE("a negative sample uses the second row") {
        const FlipMatrix g = FlipMatrix::from_off_diagonals(0.3, 0.2);
        const double got = rboost_loss({0.5}, g, {-1});
        CHECK(got == doctest::Approx(0.8 * std::exp(0.5) +
                                     0.2 * std::exp(-0.5))
                         .epsilon(1e-14));
    }
}

TEST_CASE("stepwise_loss equals the direct loss at the updated scores") {
    Rng rng(707);
    const std::size_t n = 20;
    std::vector<int> labels(n);
    for (auto& y : labels) {
        y = rng.uniform() < 0.5 ? +1 : -1;
    }
    const FlipMatrix g = FlipMatrix::from_off_diagonals(0.3, 0.2);

    SampleWeightTable table = init_sample_weights(g, labels);
    std::vector<double> H(n, 0.0);

    CHECK(stepwise_loss(table, g, labels, labels, 0.0) ==
          doctest::Approx(static_cast<double>(n)).epsilon(1e-14));

    for (int round = 0; round < 6; ++round) {
        std::vector<int> preds(n);
        for (auto& p : preds) {
            p = rng.uniform() < 0.7 ? +1 : -1;
        }
        const double eps = weighted_error(
            preds, labels, effective_weights(table, g, labels));
        double A = 0.0, B = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pos = labels[i] > 0;
            A += (pos ? g(0, 0) : g(1, 1)) * table.d_keep[i];
            B += (pos ? g(0, 1) : g(1, 0)) * table.d_flip[i];
        }
        const double alpha = solve_alpha(eps, A, B, 0.7, 1e-10);

        std::vector<double> H_next = H;
        for (std::size_t i = 0; i < n; ++i) {
            H_next[i] += alpha * preds[i];
        }
        const double direct = rboost_loss(H_next, g, labels);
        const double stepped = stepwise_loss(table, g, labels, preds, alpha);
        CHECK(stepped == doctest::Approx(direct).epsilon(1e-10));

        const double at_zero = stepwise_loss(table, g, labels, preds, 0.0);
        CHECK(stepped <= at_zero + 1e-9);

        table = update_sample_weights(table, preds, labels, alpha);
        H = H_next;
    }
}

TEST_CASE("stepwise_loss under identity gives the classic exponential bound") {
    const std::vector<int> labels{+1, +1, -1, -1, +1};
    const SampleWeightTable t =
        init_sample_weights(FlipMatrix::identity(), labels);
    const std::vector<int> preds{+1, -1, -1, +1, +1};
    const double alpha = 0.3;
    const double eps = 2.0;
    const double want =
        eps * std::exp(alpha) + (5.0 - eps) * std::exp(-alpha);
    CHECK(stepwise_loss(t, FlipMatrix::identity(), labels, preds, alpha) ==
          doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("run_rboost with an identity flip reproduces AdaBoost" *
          doctest::timeout(300)) {
    const Dataset train = noisy_train(200, 0.2, 808);
    BoostConfig cfg;
    cfg.rounds = 10;
    cfg.gamma_mode = GammaMode::identity;
    cfg.learner.freeze_omega = true;
    cfg.learner.omega_init_offdiag = 0.0;
    cfg.seed = 3;

    const Ensemble rb = run_rboost(train, cfg);
    const Ensemble ab = run_adaboost(train, cfg);
    REQUIRE(rb.members.size() == ab.members.size());
    for (std::size_t t = 0; t < rb.members.size(); ++t) {
        CHECK(rb.members[t].alpha ==
              doctest::Approx(ab.members[t].alpha).epsilon(1e-6));
    }
    CHECK(train_error(rb, train) == doctest::Approx(train_error(ab, train)));
}

TEST_CASE("run_rboost drives training error to zero on separable data" *
          doctest::timeout(300)) {
    const Dataset train = generate_two_gaussians(200, 2, 4.0, 909);
    BoostConfig cfg;
    cfg.rounds = 5;
    cfg.learner.freeze_omega = true;
    cfg.learner.omega_init_offdiag = 0.0;

    const Ensemble e = run_rboost(train, cfg);
    CHECK(e.members.size() == 5);
    CHECK(e.members[0].alpha > 0.0);
    CHECK(train_error(e, train) == 0.0);
    CHECK_FALSE(e.calibration.has_value());
    for (const FlipMatrix& g : e.gamma_trace) {
        CHECK(g.is_identity());
    }
}

TEST_CASE("run_rboost adapts gamma in estimate mode" *
          doctest::timeout(300)) {
    const Dataset train = noisy_train(300, 0.25, 1010);
    BoostConfig cfg;
    cfg.rounds = 12;
    cfg.gamma_mode = GammaMode::estimate;
    cfg.seed = 5;

    const Ensemble e = run_rboost(train, cfg);
    REQUIRE(e.gamma_trace.size() == 12);
    CHECK(e.calibration.has_value());
    const FlipMatrix last = e.gamma_trace.back();
    CHECK(last.max_diff(FlipMatrix::from_off_diagonals(0.2, 0.2)) > 1e-6);
    CHECK(last(0, 1) > 0.0);
    CHECK(last(0, 1) < 0.5);
    CHECK(last(1, 0) > 0.0);
    CHECK(last(1, 0) < 0.5);

    const Ensemble again = run_rboost(train, cfg);
    REQUIRE(again.members.size() == e.members.size());
    for (std::size_t t = 0; t < e.members.size(); ++t) {
        CHECK(again.members[t].alpha == e.members[t].alpha);
        CHECK(again.members[t].model.beta == e.members[t].model.beta);
    }
}

TEST_CASE("run_rboost trusted mode calibrates on the held-out set" *
          doctest::timeout(300)) {
    const Dataset train = noisy_train(300, 0.25, 1111);
    const Dataset trusted = generate_two_gaussians(30, 2, 2.0, 1212);
    BoostConfig cfg;
    cfg.rounds = 8;
    cfg.gamma_mode = GammaMode::trusted;
    cfg.trusted = trusted;

    const Ensemble e = run_rboost(train, cfg);
    CHECK(e.calibration.has_value());
    CHECK(e.gamma_trace.back().max_diff(
              FlipMatrix::from_off_diagonals(0.2, 0.2)) > 1e-6);

    SUBCASE("a missing or mismatched trusted set is rejected") {
        cfg.trusted.reset();
        CHECK_THROWS_AS(run_rboost(train, cfg), std::invalid_argument);
        Dataset narrow = generate_two_gaussians(30, 3, 2.0, 1);
        cfg.trusted = narrow;
        CHECK_THROWS_AS(run_rboost(train, cfg), std::invalid_argument);
    }
}

TEST_CASE("run_rboost recovers from a whole class of negative weights" *
          doctest::timeout(300)) {
    // A one-sided flip table heavier than 0.5 makes every observed-negative
    // weight negative at round one, so all targets collapse to +1.
    const Dataset clean = generate_two_gaussians(300, 2, 2.0, 2024);
    const Dataset train =
        inject_label_noise(clean, {NoiseKind::asymmetric, 0.3, 2025});
    BoostConfig cfg;
    cfg.rounds = 6;
    cfg.gamma_mode = GammaMode::fixed;
    cfg.fixed_gamma = FlipMatrix::from_off_diagonals(0.0, 0.6);
    cfg.seed = 7;

    const Ensemble e = run_rboost(train, cfg);
    REQUIRE(e.members.size() == 6);

    const auto& first = e.members[0];
    CHECK(first.alpha > 0.0);
    for (std::size_t j = 0; j + 1 < first.model.beta.size(); ++j) {
        CHECK(first.model.beta[j] == 0.0);
    }
    CHECK(first.model.beta.back() == 1.0);

    bool fitted_round = false;
    for (const Member& m : e.members) {
        for (std::size_t j = 0; j + 1 < m.model.beta.size(); ++j) {
            if (m.model.beta[j] != 0.0) {
                fitted_round = true;
            }
        }
    }
    CHECK(fitted_round);

    // With the flip entry above 0.5 the loss of every observed negative is
    // minimized at a positive score, so the all-positive vote is the true
    // optimum here and the ensemble must settle on it.
    for (std::size_t i = 0; i < train.size(); ++i) {
        CHECK(predict_ensemble(e, train.row(i)).second == 1);
    }
}

TEST_CASE("run_rboost fails only when every round degenerates") {
    const Dataset train = noisy_train(60, 0.2, 1313);
    BoostConfig cfg;
    cfg.rounds = 3;
    cfg.gamma_mode = GammaMode::fixed;
    cfg.fixed_gamma = FlipMatrix::from_off_diagonals(0.5, 0.5);
    CHECK_THROWS_AS(run_rboost(train, cfg), DegenerateError);

    cfg.gamma_mode = GammaMode::estimate;
    cfg.gamma_init_offdiag = 0.5;
    CHECK_THROWS_AS(run_rboost(train, cfg), std::invalid_argument);
}

TEST_CASE("run_adaboost lowers training error round over round" *
          doctest::timeout(300)) {
    const Dataset train = noisy_train(300, 0.1, 1414);
    BoostConfig cfg;
    cfg.rounds = 15;
    cfg.learner.freeze_omega = true;
    cfg.learner.omega_init_offdiag = 0.0;

    const Ensemble e = run_adaboost(train, cfg);
    REQUIRE(e.members.size() == 15);
    CHECK(e.members[0].alpha > 0.0);

    Ensemble head;
    head.members.assign(e.members.begin(), e.members.begin() + 1);
    const double early = train_error(head, train);
    const double late = train_error(e, train);
    CHECK(late <= early);
}

TEST_CASE("predict_ensemble breaks score ties toward the positive class") {
    Ensemble e;
    CHECK_THROWS_AS(predict_ensemble(e, std::array<double, 1>{0.0}),
                    std::logic_error);

    RobustLinearModel up;
    up.beta = {1.0, 0.0};
    RobustLinearModel down;
    down.beta = {-1.0, 0.0};
    e.members.push_back({1.0, up});
    e.members.push_back({1.0, down});

    const auto [H, y] = predict_ensemble(e, std::array<double, 1>{2.0});
    CHECK(H == 0.0);
    CHECK(y == +1);

    e.members[0].alpha = 2.0;
    const auto [H2, y2] = predict_ensemble(e, std::array<double, 1>{2.0});
    CHECK(H2 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(y2 == +1);
    const auto [H3, y3] = predict_ensemble(e, std::array<double, 1>{-2.0});
    CHECK(H3 == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(y3 == -1);
}

TEST_CASE("ensembles round-trip through the text format bit for bit" *
          doctest::timeout(300)) {
    const Dataset train = noisy_train(150, 0.2, 1515);
    BoostConfig cfg;
    cfg.rounds = 4;
    cfg.gamma_mode = GammaMode::estimate;
    const Ensemble e = run_rboost(train, cfg);

    save_ensemble(e, "tmp_ensemble.txt");
    const Ensemble back = load_ensemble("tmp_ensemble.txt");

    REQUIRE(back.members.size() == e.members.size());
    for (std::size_t t = 0; t < e.members.size(); ++t) {
        CHECK(back.members[t].alpha == e.members[t].alpha);
        CHECK(back.members[t].model.beta == e.members[t].model.beta);
        CHECK(back.members[t].model.omega.max_diff(
                  e.members[t].model.omega) == 0.0);
    }
    REQUIRE(back.gamma_trace.size() == e.gamma_trace.size());
    for (std::size_t t = 0; t < e.gamma_trace.size(); ++t) {
        CHECK(back.gamma_trace[t].max_diff(e.gamma_trace[t]) == 0.0);
    }
    REQUIRE(back.calibration.has_value());
    CHECK(back.calibration->A == e.calibration->A);
    CHECK(back.calibration->B == e.calibration->B);

    save_ensemble(back, "tmp_ensemble2.txt");
    CHECK(slurp("tmp_ensemble.txt") == slurp("tmp_ensemble2.txt"));
}

TEST_CASE("load_ensemble rejects malformed files") {
    {
        std::ofstream out("tmp_bad_header.txt");
        out << "not-an-ensemble v9\n";
    }
    CHECK_THROWS_AS(load_ensemble("tmp_bad_header.txt"), ParseError);

    const Dataset train = generate_two_gaussians(40, 2, 3.0, 1616);
    BoostConfig cfg;
    cfg.rounds = 2;
    cfg.learner.freeze_omega = true;
    cfg.learner.omega_init_offdiag = 0.0;
    save_ensemble(run_rboost(train, cfg), "tmp_trunc.txt");
    const std::string full = slurp("tmp_trunc.txt");
    {
        std::ofstream out("tmp_trunc.txt", std::ios::binary);
        out << full.substr(0, full.size() * 2 / 3);
    }
    CHECK_THROWS_AS(load_ensemble("tmp_trunc.txt"), ParseError);
    CHECK_THROWS_AS(load_ensemble("tmp_does_not_exist.txt"), ParseError);

    Ensemble nan_ensemble;
    RobustLinearModel m;
    m.beta = {std::nan(""), 0.0};
    nan_ensemble.members.push_back({0.5, m});
    CHECK_THROWS_AS(save_ensemble(nan_ensemble, "tmp_nan.txt"),
                    std::invalid_argument);
}
