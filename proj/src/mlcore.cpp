#include "settle/mlcore.hpp"

#include "settle/error.hpp"
#include "settle/parallel.hpp"
#include "settle/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace settle {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double m) {
    if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
}

// Design matrix with a trailing column of ones; theta = (w, b).
struct Problem {
    Eigen::MatrixXd z;
    Eigen::VectorXd y;
    double lambda = 0.0;

    Eigen::Index dims() const { return z.cols() - 1; }

    double loss(const Eigen::VectorXd& theta) const {
        const Eigen::VectorXd m = z * theta;
        double total = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) total += softplus(y[i] > 0.5 ? -m[i] : m[i]);
        const auto w = theta.head(dims());
        return total / static_cast<double>(m.size()) + lambda * w.squaredNorm();
    }

    double loss_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
        const Eigen::VectorXd m = z * theta;
        Eigen::VectorXd r(m.size());
        double total = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            total += softplus(y[i] > 0.5 ? -m[i] : m[i]);
            r[i] = sigmoid(m[i]) - y[i];
        }
        const double n = static_cast<double>(m.size());
        grad = z.transpose() * r / n;
        grad.head(dims()) += 2.0 * lambda * theta.head(dims());
        return total / n + lambda * theta.head(dims()).squaredNorm();
    }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& theta) const {
        const Eigen::VectorXd m = z * theta;
        Eigen::VectorXd s(m.size());
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            const double p = sigmoid(m[i]);
            s[i] = p * (1.0 - p);
        }
        Eigen::MatrixXd h = z.transpose() * s.asDiagonal() * z / static_cast<double>(m.size());
        for (Eigen::Index j = 0; j < dims(); ++j) h(j, j) += 2.0 * lambda;
        return h;
    }
};

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

std::vector<std::uint8_t> labels_of(const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<std::uint8_t> out;
    out.reserve(rows.size());
    for (const auto r : rows) out.push_back(data.labels[r]);
    return out;
}

Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows) {
    Dataset out;
    out.features = data.features;
    out.standardize = data.standardize;
    out.feature_names = data.feature_names;
    out.x.reserve(rows.size() * data.features);
    for (const auto r : rows) {
        const auto row = data.row(r);
        out.x.insert(out.x.end(), row.begin(), row.end());
        out.labels.push_back(data.labels[r]);
        out.groups.push_back(data.groups.empty() ? 0 : data.groups[r]);
    }
    return out;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    return s;
}

} // namespace

Dataset dataset_from_table(const FeatureTable& table) {
    Dataset data;
    data.features = kFeatureCount;
    data.feature_names.assign(feature_names().begin(), feature_names().end());
    data.standardize.assign(kFeatureCount, 0);
    std::fill_n(data.standardize.begin(), kNumericFeatures, std::uint8_t{1});
    data.x.reserve(table.rows.size() * kFeatureCount);
    for (const auto& row : table.rows) {
        const auto f = row.features();
        data.x.insert(data.x.end(), f.begin(), f.end());
        data.labels.push_back(row.label);
        data.groups.push_back(row.country);
    }
    return data;
}

void ModelConfig::validate() const {
    if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
    for (const double l : lambda_grid)
        if (!(l > 0) || !std::isfinite(l)) throw UsageError("lambda values must be positive and finite");
    if (outer_folds < 2 || inner_folds < 2) throw UsageError("cross-validation needs at least 2 folds");
    if (max_iterations < 1) throw UsageError("max_iterations must be positive");
    if (!(tolerance > 0)) throw UsageError("tolerance must be positive");
    if (bootstrap_samples < 1) throw UsageError("bootstrap_samples must be positive");
}

double FittedModel::probability(std::span<const double> features) const {
    double m = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) m += coefficients[j] * (features[j] - mean[j]) / sd[j];
    return sigmoid(m);
}

LossGradient loss_and_gradient(std::span<const double> x, std::span<const std::uint8_t> labels,
                               std::span<const double> w, double b, double lambda) {
    const auto d = static_cast<Eigen::Index>(w.size());
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (x.size() != static_cast<std::size_t>(n * d)) throw DomainError("design matrix size does not match");
    if (n == 0) throw DomainError("loss of an empty sample");
    Problem p;
    p.lambda = lambda;
    p.z.resize(n, d + 1);
    p.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) p.z(i, j) = x[static_cast<std::size_t>(i * d + j)];
        p.z(i, d) = 1.0;
        p.y[i] = labels[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd theta(d + 1);
    for (Eigen::Index j = 0; j < d; ++j) theta[j] = w[static_cast<std::size_t>(j)];
    theta[d] = b;
    Eigen::VectorXd grad;
    LossGradient out;
    out.loss = p.loss_and_gradient(theta, grad);
    out.grad_w.assign(grad.data(), grad.data() + d);
    out.grad_b = grad[d];
    return out;
}

FittedModel fit(const Dataset& data, std::span<const std::size_t> rows_in, double lambda, const ModelConfig& config) {
    std::vector<std::size_t> owned;
    std::span<const std::size_t> rows = rows_in;
    if (rows.empty()) {
        owned = all_rows(data.rows());
        rows = owned;
    }
    const std::size_t d = data.features;
    const std::size_t n = rows.size();
    std::size_t positives = 0;
    for (const auto r : rows) positives += data.labels[r];
    if (positives == 0 || positives == n) throw DomainError("cannot fit a logistic model to a single class");

    FittedModel model;
    model.mean.assign(d, 0.0);
    model.sd.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (data.standardize.empty() || !data.standardize[j]) continue;
        double sum = 0.0;
        for (const auto r : rows) sum += data.x[r * d + j];
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto r : rows) {
            const double e = data.x[r * d + j] - mean;
            ss += e * e;
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.mean[j] = mean;
        model.sd[j] = sd > 0 ? sd : 1.0;
    }

    Problem p;
    p.lambda = lambda;
    p.z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
    p.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = data.row(rows[i]);
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(row[j])) throw DomainError("non-finite feature value");
            p.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (row[j] - model.mean[j]) / model.sd[j];
        }
        p.z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = 1.0;
        p.y[static_cast<Eigen::Index>(i)] = data.labels[rows[i]];
    }

    // Newton steps with Armijo backtracking.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d + 1));
    Eigen::VectorXd grad;
    double f = p.loss_and_gradient(theta, grad);
    for (model.iterations = 0; model.iterations < config.max_iterations;) {
        const Eigen::VectorXd step = p.hessian(theta).ldlt().solve(-grad);
        const double slope = grad.dot(step);
        if (!(slope < 0)) {
            model.converged = true;
            break;
        }
        double t = 1.0;
        Eigen::VectorXd next = theta + step;
        double f_next = p.loss(next);
        while (f_next > f + 1e-4 * t * slope && t > 1e-12) {
            t *= 0.5;
            next = theta + t * step;
            f_next = p.loss(next);
        }
        ++model.iterations;
        if (f_next > f) {
            model.converged = true;
            break;
        }
        const double change = std::abs(f - f_next) / std::max(std::abs(f), 1e-300);
        theta = next;
        f = p.loss_and_gradient(theta, grad);
        if (change < config.tolerance) {
            model.converged = true;
            break;
        }
    }
    model.coefficients.assign(theta.data(), theta.data() + d);
    model.intercept = theta[static_cast<Eigen::Index>(d)];
    return model;
}

std::vector<std::uint8_t> predict(const FittedModel& model, const Dataset& data, std::span<const std::size_t> rows) {
    std::vector<std::uint8_t> out;
    out.reserve(rows.size());
    for (const auto r : rows) out.push_back(model.probability(data.row(r)) >= 0.5 ? 1 : 0);
    return out;
}

double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
    if (predictions.size() != labels.size()) throw DomainError("predictions and labels differ in length");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        tp += predictions[i] && labels[i];
        fp += predictions[i] && !labels[i];
        fn += !predictions[i] && labels[i];
    }
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double balanced_accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels) {
    if (predictions.size() != labels.size()) throw DomainError("predictions and labels differ in length");
    std::int64_t tp = 0, tn = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            ++pos;
            tp += predictions[i] != 0;
        } else {
            ++neg;
            tn += predictions[i] == 0;
        }
    }
    if (pos == 0 || neg == 0) throw DomainError("balanced accuracy needs both classes in the labels");
    return 0.5 * (static_cast<double>(tp) / static_cast<double>(pos) + static_cast<double>(tn) / static_cast<double>(neg));
}

std::vector<int> group_kfold(std::span<const std::uint32_t> groups, int k, std::uint64_t seed) {
    if (k < 2) throw DomainError("group k-fold needs k >= 2");
    std::map<std::uint32_t, std::int64_t> sizes;
    for (const auto g : groups) ++sizes[g];
    if (sizes.size() < static_cast<std::size_t>(k))
        throw DomainError("group k-fold: " + std::to_string(sizes.size()) + " groups for " + std::to_string(k) +
                          " folds");
    std::vector<std::pair<std::uint32_t, std::int64_t>> order(sizes.begin(), sizes.end());
    CounterRng rng(seed);
    rng.shuffle(std::span(order));
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::int64_t> fold_size(static_cast<std::size_t>(k), 0);
    std::map<std::uint32_t, int> fold_of;
    for (const auto& [group, size] : order) {
        const auto smallest = std::min_element(fold_size.begin(), fold_size.end()) - fold_size.begin();
        fold_of[group] = static_cast<int>(smallest);
        fold_size[static_cast<std::size_t>(smallest)] += size;
    }
    std::vector<int> out;
    out.reserve(groups.size());
    for (const auto g : groups) out.push_back(fold_of[g]);
    return out;
}

std::vector<int> stratified_kfold(std::span<const std::uint8_t> labels, int k, std::uint64_t seed) {
    if (k < 2) throw DomainError("stratified k-fold needs k >= 2");
    std::vector<int> out(labels.size(), 0);
    CounterRng rng(seed);
    std::size_t position = 0;
    for (const std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if ((labels[i] != 0) == (cls != 0)) members.push_back(i);
        if (members.size() < static_cast<std::size_t>(k))
            throw DomainError("stratified k-fold: class " + std::to_string(cls) + " has " +
                              std::to_string(members.size()) + " rows for " + std::to_string(k) + " folds");
        rng.shuffle(std::span(members));
        for (const auto i : members) out[i] = static_cast<int>(position++ % static_cast<std::size_t>(k));
    }
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<OddsRatio> bootstrap_odds_ratios(const Dataset& data, double lambda, const ModelConfig& config) {
    const FittedModel full = fit(data, {}, lambda, config);
    const std::size_t n = data.rows();
    const auto samples = static_cast<std::size_t>(config.bootstrap_samples);
    std::vector<std::vector<double>> coefs(samples);
    const std::uint64_t stream = CounterRng::derive(config.seed, 0xB0);
    parallel_for(samples, config.threads, [&](std::size_t b) {
        CounterRng rng(CounterRng::derive(stream, b));
        std::vector<std::size_t> rows(n);
        for (int attempt = 0;; ++attempt) {
            std::size_t positives = 0;
            for (auto& r : rows) {
                r = static_cast<std::size_t>(rng.below(n));
                positives += data.labels[r];
            }
            if (positives != 0 && positives != n) break;
            if (attempt == 10) throw DomainError("bootstrap resample kept drawing a single class");
        }
        coefs[b] = fit(data, rows, lambda, config).coefficients;
    });

    std::vector<OddsRatio> out;
    for (std::size_t j = 0; j < data.features; ++j) {
        std::vector<double> ratios;
        ratios.reserve(samples);
        for (const auto& c : coefs) ratios.push_back(std::exp(c[j]));
        OddsRatio o;
        o.feature = j < data.feature_names.size() ? data.feature_names[j] : "x" + std::to_string(j);
        o.point = std::exp(full.coefficients[j]);
        o.lo = percentile(ratios, 0.025);
        o.hi = percentile(ratios, 0.975);
        out.push_back(std::move(o));
    }
    return out;
}

ModelResult nested_cv(const FeatureTable& table, const ModelConfig& config) {
    return nested_cv(dataset_from_table(table), table.countries, config);
}

ModelResult nested_cv(const Dataset& input, std::span<const std::string> group_names, const ModelConfig& config) {
    config.validate();
    Dataset sampled;
    const Dataset* data_ptr = &input;
    if (config.subsample != 0 && config.subsample < input.rows()) {
        auto rows = all_rows(input.rows());
        CounterRng rng(CounterRng::derive(config.seed, 0x5B));
        rng.shuffle(std::span(rows));
        rows.resize(config.subsample);
        std::sort(rows.begin(), rows.end());
        sampled = select_rows(input, rows);
        data_ptr = &sampled;
    }
    const Dataset& data = *data_ptr;

    ModelResult result;
    result.config = config;
    result.rows = data.rows();
    for (const auto l : data.labels) result.positives += l;

    const auto outer_k = static_cast<std::size_t>(config.outer_folds);
    const auto inner_k = static_cast<std::size_t>(config.inner_folds);
    const std::size_t grid = config.lambda_grid.size();
    const auto outer = group_kfold(data.groups, config.outer_folds, CounterRng::derive(config.seed, 1));

    std::vector<std::vector<std::size_t>> train(outer_k), test(outer_k);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t o = 0; o < outer_k; ++o) (static_cast<std::size_t>(outer[i]) == o ? test : train)[o].push_back(i);
    }
    std::vector<std::vector<int>> inner(outer_k);
    for (std::size_t o = 0; o < outer_k; ++o) {
        std::set<std::uint32_t> train_groups, test_groups;
        for (const auto r : train[o]) train_groups.insert(data.groups[r]);
        for (const auto r : test[o]) test_groups.insert(data.groups[r]);
        for (const auto g : test_groups)
            if (train_groups.count(g)) throw std::logic_error("outer fold shares a country between train and test");
        inner[o] = stratified_kfold(labels_of(data, train[o]), config.inner_folds, CounterRng::derive(config.seed, 100 + o));
    }

    std::vector<double> inner_f1(outer_k * grid * inner_k);
    parallel_for(inner_f1.size(), config.threads, [&](std::size_t task) {
        const std::size_t o = task / (grid * inner_k);
        const std::size_t l = task / inner_k % grid;
        const auto f = static_cast<int>(task % inner_k);
        std::vector<std::size_t> fit_rows, eval_rows;
        for (std::size_t i = 0; i < train[o].size(); ++i) (inner[o][i] == f ? eval_rows : fit_rows).push_back(train[o][i]);
        const auto model = fit(data, fit_rows, config.lambda_grid[l], config);
        inner_f1[task] = f1_score(predict(model, data, eval_rows), labels_of(data, eval_rows));
    });

    result.folds.resize(outer_k);
    parallel_for(outer_k, config.threads, [&](std::size_t o) {
        std::size_t best = 0;
        double best_f1 = -1.0;
        for (std::size_t l = 0; l < grid; ++l) {
            double sum = 0.0;
            for (std::size_t f = 0; f < inner_k; ++f) sum += inner_f1[(o * grid + l) * inner_k + f];
            const double mean = sum / static_cast<double>(inner_k);
            if (mean > best_f1) {
                best_f1 = mean;
                best = l;
            }
        }
        FoldResult& fr = result.folds[o];
        fr.fold = static_cast<int>(o);
        fr.lambda = config.lambda_grid[best];
        fr.train_rows = train[o].size();
        fr.test_rows = test[o].size();
        fr.model = fit(data, train[o], fr.lambda, config);
        const auto predictions = predict(fr.model, data, test[o]);
        const auto labels = labels_of(data, test[o]);
        fr.f1 = f1_score(predictions, labels);
        fr.balanced_accuracy = balanced_accuracy(predictions, labels);
        std::set<std::uint32_t> groups;
        for (const auto r : test[o]) groups.insert(data.groups[r]);
        for (const auto g : groups)
            fr.test_groups.push_back(g < group_names.size() ? group_names[g] : std::to_string(g));
    });

    std::vector<double> f1s, bas;
    std::vector<int> votes(grid, 0);
    for (const auto& fr : result.folds) {
        f1s.push_back(fr.f1);
        bas.push_back(fr.balanced_accuracy);
        ++votes[static_cast<std::size_t>(
            std::find(config.lambda_grid.begin(), config.lambda_grid.end(), fr.lambda) - config.lambda_grid.begin())];
    }
    result.f1 = summarize(f1s);
    result.balanced_accuracy = summarize(bas);
    result.chosen_lambda = config.lambda_grid[static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin())];
    result.odds_ratios = bootstrap_odds_ratios(data, result.chosen_lambda, config);
    return result;
}

} // namespace settle
