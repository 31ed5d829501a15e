#include "settle/error.hpp"
#include "settle/mlcore.hpp"
#include "settle/report_io.hpp"
#include "settle/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace settle;

namespace {

double objective(std::span<const double> x, std::span<const std::uint8_t> y, std::span<const double> w, double b,
                 double lambda) {
    return loss_and_gradient(x, y, w, b, lambda).loss;
}

/// Logistic data with known coefficients and unit-normal features.
Dataset logistic_data(std::size_t n, std::vector<double> w, double b, std::uint64_t seed, std::uint32_t groups = 1) {
    CounterRng rng(seed);
    Dataset d;
    d.features = w.size();
    for (std::size_t i = 0; i < n; ++i) {
        double m = b;
        for (const double wj : w) {
            const double v = rng.normal();
            d.x.push_back(v);
            m += wj * v;
        }
        d.labels.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-m)) ? 1 : 0);
        d.groups.push_back(static_cast<std::uint32_t>(i % groups));
    }
    d.standardize.assign(w.size(), 0);
    for (std::size_t j = 0; j < w.size(); ++j) d.feature_names.push_back("x" + std::to_string(j));
    return d;
}

ModelConfig quick_config() {
    ModelConfig c;
    c.lambda_grid = {1e-3, 1e-1};
    c.outer_folds = 3;
    c.inner_folds = 3;
    c.bootstrap_samples = 20;
    c.seed = 5;
    return c;
}

} // namespace

TEST_CASE("loss at zero weights is ln 2") {
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
    const std::vector<std::uint8_t> y{1, 0, 1, 0};
    const std::vector<double> w{0.0};
    CHECK(objective(x, y, w, 0.0, 0.7) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("analytic gradient matches central differences") {
    CounterRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(200), d = 1 + rng.below(10);
        std::vector<double> x(n * d), w(d);
        std::vector<std::uint8_t> y(n);
        for (auto& v : x) v = rng.normal() * 2.0;
        for (auto& v : y) v = rng.bernoulli(0.4) ? 1 : 0;
        for (auto& v : w) v = rng.normal();
        const double b = rng.normal();
        const double lambda = std::pow(10.0, rng.uniform(-4.0, 1.0));
        const auto g = loss_and_gradient(x, y, w, b, lambda);
        const double h = 1e-6;
        for (std::size_t j = 0; j < d; ++j) {
            auto wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            const double fd = (objective(x, y, wp, b, lambda) - objective(x, y, wm, b, lambda)) / (2 * h);
            CHECK(g.grad_w[j] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
        const double fd_b = (objective(x, y, w, b + h, lambda) - objective(x, y, w, b - h, lambda)) / (2 * h);
        CHECK(g.grad_b == doctest::Approx(fd_b).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("loss stays finite for huge margins") {
    const std::vector<double> x{1.0, 1.0};
    const std::vector<std::uint8_t> y{1, 0};
    const std::vector<double> w{1e4};
    const auto g = loss_and_gradient(x, y, w, 0.0, 0.0);
    CHECK(std::isfinite(g.loss));
    // One row has margin -1e4, costing 1e4 / 2 averaged.
    CHECK(g.loss == doctest::Approx(5e3).epsilon(1e-12));
    CHECK(std::isfinite(g.grad_w[0]));
    const auto neg = loss_and_gradient(x, y, std::vector<double>{-1e4}, 0.0, 0.0);
    CHECK(neg.loss == doctest::Approx(5e3).epsilon(1e-12));
}

TEST_CASE("fit matches an independent optimizer on a small problem") {
    Dataset d;
    d.features = 2;
    d.x = {0.5, 1.0, 1.5, -0.5, -1.0, 0.3, 2.0, 2.0, -0.3, -1.2, 0.8, 0.1,
           -1.5, 0.9, 0.2, -0.4, 1.1, 1.3, -0.7, -0.8, 0.0, 0.6, 1.7, -1.1};
    d.labels = {1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0};
    d.groups.assign(12, 0);
    ModelConfig c;
    c.tolerance = 1e-14;
    const auto m = fit(d, {}, 0.05, c);
    CHECK(m.converged);
    CHECK(m.coefficients[0] == doctest::Approx(0.93008175).epsilon(1e-6));
    CHECK(m.coefficients[1] == doctest::Approx(1.01766671).epsilon(1e-6));
    CHECK(m.intercept == doctest::Approx(-0.42807505).epsilon(1e-6));
}

TEST_CASE("symmetric data gives a zero intercept") {
    Dataset d;
    d.features = 1;
    for (double v : {0.5, 1.0, 2.0, 3.5}) {
        d.x.push_back(v);
        d.labels.push_back(1);
        d.x.push_back(-v);
        d.labels.push_back(0);
        // A few crossed rows keep the problem bounded.
        d.x.push_back(-v / 2);
        d.labels.push_back(1);
        d.x.push_back(v / 2);
        d.labels.push_back(0);
    }
    d.groups.assign(d.labels.size(), 0);
    const auto m = fit(d, {}, 1e-3, ModelConfig{});
    CHECK(std::abs(m.intercept) < 1e-6);
    CHECK(m.coefficients[0] > 0);
}

TEST_CASE("recovers generating weights") {
    const auto d = logistic_data(50000, {1.5, -0.5}, 0.0, 99);
    const auto m = fit(d, {}, 1e-4, ModelConfig{});
    CHECK(m.converged);
    CHECK(std::abs(m.coefficients[0] - 1.5) < 0.1);
    CHECK(std::abs(m.coefficients[1] + 0.5) < 0.1);
    CHECK(std::abs(m.intercept) < 0.1);
}

TEST_CASE("huge penalty shrinks weights to zero") {
    const auto d = logistic_data(2000, {1.5, -0.5, 2.0}, 0.3, 7);
    const auto m = fit(d, {}, 1e6, ModelConfig{});
    double norm = 0.0;
    for (const double w : m.coefficients) norm += w * w;
    CHECK(std::sqrt(norm) < 1e-3);
    // The unpenalized intercept still matches the base rate.
    const double rate = std::accumulate(d.labels.begin(), d.labels.end(), 0.0) / static_cast<double>(d.rows());
    CHECK(m.intercept == doctest::Approx(std::log(rate / (1 - rate))).epsilon(1e-3));
}

TEST_CASE("fitted optimum beats random perturbations") {
    const auto d = logistic_data(500, {0.8, -1.2, 0.4}, -0.5, 3);
    ModelConfig c;
    c.tolerance = 1e-14;
    const double lambda = 0.01;
    const auto m = fit(d, {}, lambda, c);
    const double best = objective(d.x, d.labels, m.coefficients, m.intercept, lambda);
    CounterRng rng(4);
    for (int k = 0; k < 100; ++k) {
        auto w = m.coefficients;
        for (auto& v : w) v += rng.normal() * 0.05;
        CHECK(objective(d.x, d.labels, w, m.intercept + rng.normal() * 0.05, lambda) >= best);
    }
}

TEST_CASE("standardization uses training rows only") {
    Dataset d;
    d.features = 2;
    d.standardize = {1, 0};
    for (int i = 0; i < 20; ++i) {
        d.x.push_back(static_cast<double>(i % 10));
        d.x.push_back(static_cast<double>(i % 2));
        d.labels.push_back((i % 10) > 4 ? 1 : 0);
        d.groups.push_back(0);
    }
    // Rows outside training carry outlying values that must not leak in.
    for (int i = 0; i < 5; ++i) {
        d.x.push_back(1000.0);
        d.x.push_back(1.0);
        d.labels.push_back(1);
        d.groups.push_back(1);
    }
    std::vector<std::size_t> train(20);
    std::iota(train.begin(), train.end(), 0);
    const auto m = fit(d, train, 0.1, ModelConfig{});
    CHECK(m.mean[0] == doctest::Approx(4.5));
    CHECK(m.sd[0] == doctest::Approx(std::sqrt(8.25)));
    CHECK(m.mean[1] == 0.0);
    CHECK(m.sd[1] == 1.0);

    // A constant column falls back to unit scale.
    Dataset flat = d;
    for (std::size_t i = 0; i < flat.rows(); ++i) flat.x[i * 2] = 3.0;
    const auto mf = fit(flat, train, 0.1, ModelConfig{});
    CHECK(mf.sd[0] == 1.0);
    CHECK(mf.mean[0] == 3.0);
}

TEST_CASE("fit needs both classes") {
    Dataset d;
    d.features = 1;
    d.x = {1, 2, 3};
    d.labels = {1, 1, 1};
    d.groups = {0, 0, 0};
    CHECK_THROWS_AS(fit(d, {}, 1.0, ModelConfig{}), DomainError);
}

TEST_CASE("f1 and balanced accuracy") {
    const std::vector<std::uint8_t> pred{1, 1, 0, 0, 1}, truth{1, 0, 1, 0, 1};
    CHECK(f1_score(pred, truth) == doctest::Approx(2.0 / 3.0));
    const std::vector<std::uint8_t> p2{1, 1, 1, 0, 0, 0, 0, 0, 0, 0}, t2{1, 1, 0, 1, 0, 0, 0, 0, 0, 0};
    // Recall 2/3, specificity 6/7.
    CHECK(balanced_accuracy(p2, t2) == doctest::Approx(0.5 * (2.0 / 3.0 + 6.0 / 7.0)));
    const std::vector<std::uint8_t> ones(10, 1);
    CHECK(balanced_accuracy(ones, t2) == 0.5);
    CHECK(f1_score(std::vector<std::uint8_t>(5, 0), truth) == 0.0);
    CHECK_THROWS_AS(balanced_accuracy(ones, ones), DomainError);
    CHECK_THROWS_AS(f1_score(ones, truth), DomainError);
}

TEST_CASE("balanced accuracy example of seven tenths") {
    // Recall 0.8, specificity 0.6.
    std::vector<std::uint8_t> pred, truth;
    for (int i = 0; i < 5; ++i) {
        truth.push_back(1);
        pred.push_back(i < 4 ? 1 : 0);
    }
    for (int i = 0; i < 5; ++i) {
        truth.push_back(0);
        pred.push_back(i < 3 ? 0 : 1);
    }
    CHECK(balanced_accuracy(pred, truth) == doctest::Approx(0.7));
}

TEST_CASE("group k-fold balances by size") {
    std::vector<std::uint32_t> groups;
    const std::vector<int> sizes{10, 9, 1, 1, 1, 1, 1};
    for (std::size_t g = 0; g < sizes.size(); ++g) groups.insert(groups.end(), static_cast<std::size_t>(sizes[g]), static_cast<std::uint32_t>(g));
    const auto folds = group_kfold(groups, 2, 0);
    std::vector<int> fold_rows(2, 0);
    for (const int f : folds) ++fold_rows[static_cast<std::size_t>(f)];
    CHECK(std::min(fold_rows[0], fold_rows[1]) == 12);
    CHECK(std::max(fold_rows[0], fold_rows[1]) == 12);
    // The two large groups land apart.
    CHECK(folds[0] != folds[10]);
    // Every group stays in one fold.
    for (std::size_t i = 1; i < groups.size(); ++i)
        if (groups[i] == groups[i - 1]) CHECK(folds[i] == folds[i - 1]);
    std::set<std::uint32_t> with_ten;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (folds[i] == folds[0]) with_ten.insert(groups[i]);
    CHECK(with_ten.size() == 3);
}

TEST_CASE("group k-fold spreads equal groups and needs enough of them") {
    std::vector<std::uint32_t> groups;
    for (std::uint32_t g = 0; g < 5; ++g) groups.insert(groups.end(), 4, g);
    for (const std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
        const auto folds = group_kfold(groups, 5, seed);
        std::set<int> used(folds.begin(), folds.end());
        CHECK(used.size() == 5);
        CHECK(group_kfold(groups, 5, seed) == folds);
    }
    CHECK_THROWS_AS(group_kfold(groups, 6, 0), DomainError);
    CHECK_THROWS_AS(group_kfold(groups, 1, 0), DomainError);
}

TEST_CASE("stratified k-fold keeps class proportions") {
    std::vector<std::uint8_t> labels(100, 0);
    std::fill(labels.begin(), labels.begin() + 50, 1);
    const auto folds = stratified_kfold(labels, 5, 3);
    for (int f = 0; f < 5; ++f) {
        int pos = 0, neg = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (folds[i] == f) (labels[i] ? pos : neg)++;
        CHECK(pos == 10);
        CHECK(neg == 10);
    }

    std::vector<std::uint8_t> skew(1000, 0);
    std::fill(skew.begin(), skew.begin() + 242, 1);
    const auto sf = stratified_kfold(skew, 5, 9);
    for (int f = 0; f < 5; ++f) {
        double pos = 0, total = 0;
        for (std::size_t i = 0; i < skew.size(); ++i)
            if (sf[i] == f) {
                ++total;
                pos += skew[i];
            }
        CHECK(std::abs(pos - 0.242 * total) <= 1.0);
    }
    CHECK(stratified_kfold(skew, 5, 9) == sf);
    CHECK(stratified_kfold(skew, 5, 10) != sf);

    std::vector<std::uint8_t> rare(50, 0);
    rare[0] = rare[1] = rare[2] = 1;
    CHECK_THROWS_AS(stratified_kfold(rare, 5, 0), DomainError);
}

TEST_CASE("percentile interpolates order statistics") {
    CHECK(percentile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
    CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.025) == doctest::Approx(1.1));
    CHECK(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.975) == doctest::Approx(4.9));
    CHECK(percentile({7.0}, 0.3) == 7.0);
    CHECK_THROWS_AS(percentile({}, 0.5), DomainError);
}

TEST_CASE("bootstrap interval excludes one for a strong feature") {
    const auto d = logistic_data(1500, {1.2, 0.0}, -0.2, 21);
    ModelConfig c;
    c.bootstrap_samples = 60;
    c.seed = 8;
    const auto ors = bootstrap_odds_ratios(d, 1e-3, c);
    REQUIRE(ors.size() == 2);
    CHECK(ors[0].feature == "x0");
    CHECK(ors[0].lo > 1.0);
    CHECK(ors[0].lo <= ors[0].point);
    CHECK(ors[0].point <= ors[0].hi);
    CHECK(ors[1].lo < 1.0);
    CHECK(ors[1].hi > 1.0);
    c.threads = 4;
    const auto again = bootstrap_odds_ratios(d, 1e-3, c);
    CHECK(again[0].lo == ors[0].lo);
    CHECK(again[1].hi == ors[1].hi);
}

TEST_CASE("nested cross-validation over six countries") {
    const auto d = logistic_data(3000, {1.5, -1.0}, -0.3, 17, 6);
    const std::vector<std::string> names{"AAA", "BBB", "CCC", "DDD", "EEE", "FFF"};
    const auto cfg = quick_config();
    const auto r = nested_cv(d, names, cfg);
    REQUIRE(r.folds.size() == 3);
    CHECK(r.rows == 3000);
    CHECK(r.f1.max - r.f1.min < 0.1);
    CHECK(r.f1.mean > 0.5);
    std::set<std::string> seen;
    for (const auto& f : r.folds) {
        CHECK(f.test_groups.size() == 2);
        for (const auto& g : f.test_groups) CHECK(seen.insert(g).second);
        CHECK(f.train_rows + f.test_rows == 3000);
    }
    CHECK(seen.size() == 6);

    const auto json = report_json(r);
    CHECK(report_json(nested_cv(d, names, cfg)) == json);
    auto threaded = cfg;
    threaded.threads = 4;
    const auto rt = nested_cv(d, names, threaded);
    CHECK(rt.f1.mean == r.f1.mean);
    CHECK(rt.odds_ratios[0].lo == r.odds_ratios[0].lo);
}

TEST_CASE("shuffled labels give chance balanced accuracy") {
    auto d = logistic_data(3000, {1.5, -1.0}, 0.0, 23, 6);
    CounterRng rng(77);
    rng.shuffle(std::span(d.labels));
    const std::vector<std::string> names{"A", "B", "C", "D", "E", "F"};
    const auto r = nested_cv(d, names, quick_config());
    CHECK(std::abs(r.balanced_accuracy.mean - 0.5) < 0.05);
}

TEST_CASE("subsample and config validation") {
    const auto d = logistic_data(900, {1.0}, 0.0, 2, 3);
    auto cfg = quick_config();
    cfg.subsample = 300;
    const std::vector<std::string> names{"A", "B", "C"};
    CHECK(nested_cv(d, names, cfg).rows == 300);
    ModelConfig bad;
    bad.lambda_grid = {};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad.lambda_grid = {-1.0};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad.lambda_grid = {1.0};
    bad.outer_folds = 1;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}
