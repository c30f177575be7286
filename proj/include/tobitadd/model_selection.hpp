#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tobitadd/errors.hpp"
#include "tobitadd/estimator.hpp"
#include "tobitadd/numeric.hpp"

namespace tobitadd {

struct CvResult {
    std::vector<int> kappa_grid;
    std::vector<double> scores;          // held-out log-likelihood sum per kappa
    int chosen_kappa = 0;
    std::vector<int> fold_assignments;   // fold id per observation row
    std::vector<std::string> diagnostics;
};

namespace detail {

/// Stratified fold assignment: censored and uncensored rows are shuffled
/// separately and dealt round-robin with a shared fold counter, so fold
/// sizes differ by at most one overall and within each stratum.
inline std::vector<int> assign_folds(const CensoredDataset& data, int folds, std::uint64_t seed) {
    std::vector<int> censored_rows;
    std::vector<int> uncensored_rows;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.delta[static_cast<std::size_t>(i)])
            uncensored_rows.push_back(static_cast<int>(i));
        else
            censored_rows.push_back(static_cast<int>(i));
    }
    RngStream rng(seed, 0);
    auto shuffle = [&](std::vector<int>& rows) {
        for (std::size_t i = rows.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
            std::swap(rows[i - 1], rows[j]);
        }
    };
    shuffle(censored_rows);
    shuffle(uncensored_rows);

    std::vector<int> assignment(static_cast<std::size_t>(data.n()), 0);
    int counter = 0;
    for (int row : censored_rows) assignment[static_cast<std::size_t>(row)] = counter++ % folds;
    for (int row : uncensored_rows) assignment[static_cast<std::size_t>(row)] = counter++ % folds;
    return assignment;
}

}  // namespace detail

/// 5-fold cross-validated kappa selection: for each candidate kappa, sums
/// the held-out log-likelihood of every fold under the model fit on the
/// remaining folds; the winner is the kappa with the maximum score, ties
/// broken toward the smaller kappa.
inline CvResult cv_select(const CensoredDataset& data, const std::vector<int>& kappa_grid,
                          int folds = 5, std::uint64_t seed = 0, int degree = 3,
                          const OptimizerConfig& config = {}) {
    if (kappa_grid.empty()) throw std::invalid_argument("cv_select: empty kappa grid");
    if (folds < 2) throw std::invalid_argument("cv_select: need at least 2 folds");
    int max_kappa = 0;
    for (int kappa : kappa_grid) {
        if (kappa < degree + 1)
            throw std::invalid_argument("cv_select: kappa " + std::to_string(kappa) +
                                        " below degree + 1");
        max_kappa = std::max(max_kappa, kappa);
    }
    const Eigen::Index max_cols = 1 + data.num_covariates() * (max_kappa - 1);
    if (data.n() < static_cast<Eigen::Index>(folds) * (max_cols + 2))
        throw InsufficientData("cv_select: need at least " +
                               std::to_string(folds * (max_cols + 2)) + " rows, got " +
                               std::to_string(data.n()));

    CvResult result;
    result.kappa_grid = kappa_grid;
    result.fold_assignments = detail::assign_folds(data, folds, seed);
    result.scores.assign(kappa_grid.size(), 0.0);

    const double neg_inf = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kappa_grid.size(); ++k) {
        const SplineSpec spec = SplineSpec::from_kappa(kappa_grid[k], degree);
        double score = 0.0;
        for (int fold = 0; fold < folds; ++fold) {
            std::vector<int> train_rows;
            std::vector<int> test_rows;
            for (Eigen::Index i = 0; i < data.n(); ++i) {
                if (result.fold_assignments[static_cast<std::size_t>(i)] == fold)
                    test_rows.push_back(static_cast<int>(i));
                else
                    train_rows.push_back(static_cast<int>(i));
            }
            try {
                const TobitFit trained = fit(data.subset(train_rows), spec, config);
                score += fit_log_likelihood(trained, data.subset(test_rows));
            } catch (const std::exception& e) {
                score = neg_inf;
                result.diagnostics.push_back("kappa=" + std::to_string(kappa_grid[k]) +
                                             " fold=" + std::to_string(fold) + ": " + e.what());
                break;
            }
        }
        result.scores[k] = score;
    }

    int best = -1;
    for (std::size_t k = 0; k < kappa_grid.size(); ++k) {
        if (result.scores[k] == neg_inf) continue;
        if (best < 0 || result.scores[k] > result.scores[static_cast<std::size_t>(best)] ||
            (result.scores[k] == result.scores[static_cast<std::size_t>(best)] &&
             kappa_grid[k] < kappa_grid[static_cast<std::size_t>(best)]))
            best = static_cast<int>(k);
    }
    if (best < 0) throw SelectionFailure("cv_select: every kappa candidate failed to fit");
    result.chosen_kappa = kappa_grid[static_cast<std::size_t>(best)];
    return result;
}

}  // namespace tobitadd
