#pragma once

#include "settle/featurize.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace settle {

/// Dense row-major design matrix with 0/1 labels and integer groups.
struct Dataset {
    std::size_t features = 0;
    std::vector<double> x;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint32_t> groups;
    /// Per-feature flag: standardize with training mean/sd before fitting.
    std::vector<std::uint8_t> standardize;
    std::vector<std::string> feature_names;

    std::size_t rows() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const noexcept { return {x.data() + i * features, features}; }
};

/// Numeric columns standardized, one-hot indicators left as 0/1, groups = country index.
Dataset dataset_from_table(const FeatureTable& table);

struct ModelConfig {
    std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    int outer_folds = 5;
    int inner_folds = 5;
    int max_iterations = 1000;
    /// Relative change of the objective between iterations.
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
    int bootstrap_samples = 100;
    /// Uniform row subsample drawn before modelling; 0 keeps every row.
    std::uint64_t subsample = 0;
    unsigned threads = 1;

    /// Throws UsageError on an empty grid, non-positive lambda or fewer than 2 folds.
    void validate() const;
};

struct FittedModel {
    /// On the standardized scale for standardized columns.
    std::vector<double> coefficients;
    double intercept = 0.0;
    /// Training-split statistics; (0, 1) for unstandardized columns.
    std::vector<double> mean;
    std::vector<double> sd;
    int iterations = 0;
    bool converged = false;

    double probability(std::span<const double> features) const;
};

struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

/// (1/n) sum log(1 + exp(-s_i (w.x_i + b))) + lambda |w|^2 with s_i = 2 y_i - 1,
/// and its gradient. `x` is row-major with w.size() columns.
LossGradient loss_and_gradient(std::span<const double> x, std::span<const std::uint8_t> labels,
                               std::span<const double> w, double b, double lambda);

/// Fits on the given rows of `data` (all rows when `rows` is empty).
FittedModel fit(const Dataset& data, std::span<const std::size_t> rows, double lambda, const ModelConfig& config);

/// 1 where the predicted probability is >= 0.5.
std::vector<std::uint8_t> predict(const FittedModel& model, const Dataset& data, std::span<const std::size_t> rows);

double f1_score(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);
/// Throws DomainError unless both classes occur in `labels`.
double balanced_accuracy(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

/// Fold index per row. Groups are placed largest first into the currently
/// smallest fold (lowest index on ties); the seed orders equal-sized groups.
std::vector<int> group_kfold(std::span<const std::uint32_t> groups, int k, std::uint64_t seed);

/// Fold index per row. Each class is shuffled and dealt round-robin, the
/// dealing position carrying over from one class to the next.
std::vector<int> stratified_kfold(std::span<const std::uint8_t> labels, int k, std::uint64_t seed);

struct FoldResult {
    int fold = 0;
    std::vector<std::string> test_groups;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    double lambda = 0.0;
    double f1 = 0.0;
    double balanced_accuracy = 0.0;
    FittedModel model;
};

struct MetricSummary {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct OddsRatio {
    std::string feature;
    double point = 1.0;
    double lo = 1.0;
    double hi = 1.0;
};

struct ModelResult {
    ModelConfig config;
    std::size_t rows = 0;
    std::size_t positives = 0;
    std::vector<FoldResult> folds;
    MetricSummary f1;
    MetricSummary balanced_accuracy;
    double chosen_lambda = 0.0;
    std::vector<OddsRatio> odds_ratios;
};

/// Outer group k-fold over countries, inner stratified k-fold selecting lambda
/// by mean F1, refit on the outer training split. Bootstrap odds ratios are
/// computed with the most frequently chosen lambda.
ModelResult nested_cv(const FeatureTable& table, const ModelConfig& config);
ModelResult nested_cv(const Dataset& data, std::span<const std::string> group_names, const ModelConfig& config);

/// Row bootstrap of exp(coefficient) with percentile intervals.
std::vector<OddsRatio> bootstrap_odds_ratios(const Dataset& data, double lambda, const ModelConfig& config);

/// Linear interpolation between order statistics at p * (n - 1).
double percentile(std::vector<double> values, double p);

} // namespace settle
