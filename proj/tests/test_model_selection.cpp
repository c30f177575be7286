#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "tobitadd/errors.hpp"
#include "tobitadd/model_selection.hpp"
#include "tobitadd/simulation.hpp"

using namespace tobitadd;
using Catch::Matchers::WithinAbs;

namespace {

CensoredDataset study_dataset(int n, double cen, std::uint64_t seed, int replicate = 0) {
    Scenario sc;
    sc.n = n;
    sc.cen = cen;
    sc.seed = seed;
    const double threshold = calibrate_threshold(cen, sc.noise_sd, 200000);
    return simulate_replicate(sc, replicate, threshold);
}

}  // namespace

TEST_CASE("single-candidate grid is chosen regardless of data") {
    const CensoredDataset data = study_dataset(80, 0.15, 3);
    const CvResult cv = cv_select(data, {4}, 5, 11);
    CHECK(cv.chosen_kappa == 4);
    CHECK(cv.scores.size() == 1);
}

TEST_CASE("fold assignment partitions rows with balanced, stratified folds") {
    const CensoredDataset data = study_dataset(97, 0.30, 13);
    const CvResult cv = cv_select(data, {4, 5}, 5, 29);
    REQUIRE(cv.fold_assignments.size() == 97);

    std::vector<int> sizes(5, 0);
    std::vector<int> censored(5, 0);
    std::vector<int> uncensored(5, 0);
    for (std::size_t i = 0; i < cv.fold_assignments.size(); ++i) {
        const int fold = cv.fold_assignments[i];
        REQUIRE(fold >= 0);
        REQUIRE(fold < 5);
        ++sizes[static_cast<std::size_t>(fold)];
        if (data.delta[i])
            ++uncensored[static_cast<std::size_t>(fold)];
        else
            ++censored[static_cast<std::size_t>(fold)];
    }
    const auto [min_size, max_size] = std::minmax_element(sizes.begin(), sizes.end());
    CHECK(*max_size - *min_size <= 1);
    REQUIRE(data.censored_count() >= 5);
    for (int f = 0; f < 5; ++f) {
        CHECK(censored[static_cast<std::size_t>(f)] >= 1);
        CHECK(uncensored[static_cast<std::size_t>(f)] >= 1);
    }
}

TEST_CASE("scores match an independent re-run of the CV loop") {
    const CensoredDataset data = study_dataset(110, 0.15, 41);
    const std::vector<int> grid = {4, 5, 6};
    const CvResult cv = cv_select(data, grid, 5, 17);

    for (std::size_t k = 0; k < grid.size(); ++k) {
        const SplineSpec spec = SplineSpec::from_kappa(grid[k]);
        double score = 0.0;
        for (int fold = 0; fold < 5; ++fold) {
            std::vector<int> train, test;
            for (std::size_t i = 0; i < cv.fold_assignments.size(); ++i) {
                (cv.fold_assignments[i] == fold ? test : train).push_back(static_cast<int>(i));
            }
            const TobitFit trained = fit(data.subset(train), spec);
            score += fit_log_likelihood(trained, data.subset(test));
        }
        INFO("kappa " << grid[k]);
        CHECK_THAT(cv.scores[k], WithinAbs(score, 1e-8));
    }
}

TEST_CASE("cv_select is deterministic and grid-order invariant") {
    const CensoredDataset data = study_dataset(100, 0.15, 7);
    const CvResult a = cv_select(data, {4, 5, 6}, 5, 99);
    const CvResult b = cv_select(data, {4, 5, 6}, 5, 99);
    CHECK(a.scores == b.scores);
    CHECK(a.fold_assignments == b.fold_assignments);
    CHECK(a.chosen_kappa == b.chosen_kappa);

    const CvResult permuted = cv_select(data, {6, 4, 5}, 5, 99);
    CHECK(permuted.chosen_kappa == a.chosen_kappa);
    CHECK(permuted.scores[0] == a.scores[2]);
    CHECK(permuted.scores[1] == a.scores[0]);
    CHECK(permuted.scores[2] == a.scores[1]);
}

TEST_CASE("cross-validation prefers small kappa on the study data") {
    // The true components are cubic-representable, so held-out likelihood
    // should usually pick kappa 4 or 5 from {4,...,8}.
    int small = 0;
    const int runs = 50;
    for (int run = 0; run < runs; ++run) {
        const CensoredDataset data = study_dataset(160, 0.15, 1000 + run, run);
        const CvResult cv = cv_select(data, {4, 5, 6, 7, 8}, 5, 2000 + run);
        if (cv.chosen_kappa <= 5) ++small;
    }
    INFO("small-kappa selections: " << small << "/" << runs);
    CHECK(small >= 35);  // >= 70%
}

TEST_CASE("cv_select validation and failure paths") {
    const CensoredDataset data = study_dataset(100, 0.15, 7);
    CHECK_THROWS_AS(cv_select(data, {}, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(cv_select(data, {3}, 5, 1), std::invalid_argument);
    CHECK_THROWS_AS(cv_select(data, {4}, 1, 1), std::invalid_argument);

    const CensoredDataset small = study_dataset(40, 0.15, 7);
    CHECK_THROWS_AS(cv_select(small, {4, 5, 6, 7, 8}, 5, 1), InsufficientData);

    // 29 of 30 rows censored: every training subset is degenerate.
    Eigen::MatrixXd x(30, 1);
    Eigen::VectorXd y(30);
    RngStream rng(77, 0);
    for (int i = 0; i < 30; ++i) {
        x(i, 0) = rng.next_uniform();
        y[i] = (i == 0) ? 1.0 : -1.0;
    }
    const CensoredDataset degenerate = CensoredDataset::from_observations(x, y, 0.0);
    CHECK_THROWS_AS(cv_select(degenerate, {4}, 5, 1), SelectionFailure);
}
