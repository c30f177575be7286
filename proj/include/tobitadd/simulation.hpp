#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "tobitadd/errors.hpp"
#include "tobitadd/estimator.hpp"
#include "tobitadd/likelihood.hpp"
#include "tobitadd/model_selection.hpp"
#include "tobitadd/numeric.hpp"

namespace tobitadd {

/// Seed of the dedicated stream used to calibrate censoring thresholds.
/// Fixed so a given censoring proportion always maps to the same limit,
/// independent of the scenario seed.
inline constexpr std::uint64_t kCalibrationSeed = 1000003;

/// One Monte Carlo cell of the benchmark study.
struct Scenario {
    int n = 80;
    double cen = 0.05;
    int replicates = 50;
    double noise_sd = 0.2;
    std::uint64_t seed = 0;
    int grid_points = 50;

    void validate() const {
        if (n <= 0) throw std::invalid_argument("Scenario: n must be positive");
        if (!(cen >= 0.0 && cen < 1.0))
            throw std::invalid_argument("Scenario: cen must lie in [0, 1)");
        if (replicates < 1) throw std::invalid_argument("Scenario: replicates must be >= 1");
        if (grid_points < 2) throw std::invalid_argument("Scenario: grid_points must be >= 2");
    }
};

enum class Method { TobitAdditive, NaiveSplineOls };

inline const char* method_label(Method method) {
    return method == Method::TobitAdditive ? "tobit-additive" : "naive-spline-ols";
}

/// Per-grid-point across-replicate summaries of one estimated component.
struct ComponentBands {
    std::vector<double> truth;
    std::vector<double> median;
    std::vector<double> q025;
    std::vector<double> q975;
};

struct ImseReport {
    Scenario scenario;
    Method method = Method::TobitAdditive;
    std::vector<double> grid;
    std::vector<double> imse_per_component;            // mean over replicates
    std::vector<std::vector<double>> per_replicate;    // [replicate][component]
    std::vector<ComponentBands> bands;                 // per component
    int failures = 0;
};

/// The study's true additive components: a centered linear ramp and a
/// centered quadratic bowl, both mean zero under Uniform[0,1].
inline std::pair<std::vector<double>, std::vector<double>> true_components(
    const std::vector<double>& grid) {
    std::vector<double> m1(grid.size());
    std::vector<double> m2(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double v = grid[k];
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("true_components: grid value outside [0, 1]");
        m1[k] = v - 0.5;
        m2[k] = (v - 0.5) * (v - 0.5) - 1.0 / 12.0;
    }
    return {std::move(m1), std::move(m2)};
}

inline std::vector<double> uniform_grid(int points) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k)
        grid[static_cast<std::size_t>(k)] = static_cast<double>(k) / (points - 1);
    return grid;
}

inline void center_curve(std::vector<double>& curve) {
    double mean = 0.0;
    for (double v : curve) mean += v;
    mean /= static_cast<double>(curve.size());
    for (double& v : curve) v -= mean;
}

/// Empirical cen-quantile of the latent response over Monte Carlo draws.
/// cen = 0 returns -infinity: no censoring is ever applied.
inline double calibrate_threshold(double cen, double noise_sd,
                                  int oracle_draws = 1'000'000,
                                  std::uint64_t seed = kCalibrationSeed) {
    if (!(cen >= 0.0 && cen < 1.0))
        throw std::invalid_argument("calibrate_threshold: cen must lie in [0, 1)");
    if (oracle_draws < 1) throw std::invalid_argument("calibrate_threshold: need draws >= 1");
    if (cen == 0.0) return -std::numeric_limits<double>::infinity();

    RngStream rng(seed, 0);
    std::vector<double> latent(static_cast<std::size_t>(oracle_draws));
    for (double& v : latent) {
        const double x1 = rng.next_uniform();
        const double x2 = rng.next_uniform();
        const double eps = rng.next_normal();
        v = (x1 - 0.5) + ((x2 - 0.5) * (x2 - 0.5) - 1.0 / 12.0) + noise_sd * eps;
    }
    const long rank = std::clamp(std::lround(cen * oracle_draws), 1L, static_cast<long>(oracle_draws));
    std::nth_element(latent.begin(), latent.begin() + (rank - 1), latent.end());
    return latent[static_cast<std::size_t>(rank - 1)];
}

/// One replicate dataset from the latent model, censored at the calibrated
/// threshold. Row i consumes exactly (x1, x2, eps) from the stream
/// (scenario.seed, replicate_id), so datasets are bit-identical across runs
/// and the latent draws do not depend on the censoring proportion.
inline CensoredDataset simulate_replicate(const Scenario& scenario, int replicate_id,
                                          double threshold) {
    scenario.validate();
    RngStream rng(scenario.seed, static_cast<std::uint64_t>(replicate_id));
    Eigen::MatrixXd x(scenario.n, 2);
    Eigen::VectorXd y(scenario.n);
    for (int i = 0; i < scenario.n; ++i) {
        const double x1 = rng.next_uniform();
        const double x2 = rng.next_uniform();
        const double eps = rng.next_normal();
        x(i, 0) = x1;
        x(i, 1) = x2;
        const double latent =
            (x1 - 0.5) + ((x2 - 0.5) * (x2 - 0.5) - 1.0 / 12.0) + scenario.noise_sd * eps;
        y[i] = std::max(latent, threshold);
    }
    return CensoredDataset::from_observations(x, y, threshold);
}

/// Mean squared difference over the grid; both curves must already be
/// centered to mean zero over the same grid.
inline double imse(const std::vector<double>& estimated, const std::vector<double>& truth) {
    if (estimated.size() != truth.size())
        throw std::invalid_argument("imse: curve length mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < estimated.size(); ++k) {
        const double diff = estimated[k] - truth[k];
        total += diff * diff;
    }
    return total / static_cast<double>(estimated.size());
}

struct ExperimentOptions {
    SplineSpec spec = SplineSpec::from_kappa(5);  // cubic, 1 interior knot
    bool select_kappa_by_cv = false;
    std::vector<int> cv_grid = {4, 5, 6, 7, 8};
    int threads = 0;  // 0 = hardware concurrency
    OptimizerConfig optimizer;
};

namespace detail {

// Linear-interpolation quantile of a sorted sample.
inline double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.size() == 1) return sorted.front();
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct ReplicateOutcome {
    bool ok = false;
    std::vector<std::vector<double>> curves;  // [component][grid point], centered
};

}  // namespace detail

/// Full Monte Carlo cell: simulate each replicate, fit every requested
/// method, and aggregate per-component IMSE means and per-grid-point
/// across-replicate quantile bands. Replicates run on disjoint RNG streams
/// and results are merged in replicate order, so parallel and serial
/// execution produce identical reports.
inline std::vector<ImseReport> run_experiment(const Scenario& scenario,
                                              const std::vector<Method>& methods,
                                              const ExperimentOptions& options = {}) {
    scenario.validate();
    if (methods.empty()) throw std::invalid_argument("run_experiment: no methods requested");

    const double threshold = calibrate_threshold(scenario.cen, scenario.noise_sd);
    const std::vector<double> grid = uniform_grid(scenario.grid_points);
    auto [truth1, truth2] = true_components(grid);
    center_curve(truth1);
    center_curve(truth2);
    const std::vector<std::vector<double>> truth = {truth1, truth2};

    const int reps = scenario.replicates;
    std::vector<std::vector<detail::ReplicateOutcome>> outcomes(
        methods.size(), std::vector<detail::ReplicateOutcome>(static_cast<std::size_t>(reps)));

    auto run_replicate = [&](int rep) {
        const CensoredDataset data = simulate_replicate(scenario, rep, threshold);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            detail::ReplicateOutcome& slot = outcomes[m][static_cast<std::size_t>(rep)];
            try {
                SplineSpec spec = options.spec;
                if (options.select_kappa_by_cv) {
                    const std::uint64_t cv_seed =
                        scenario.seed ^ (0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(rep));
                    const CvResult cv = cv_select(data, options.cv_grid, 5, cv_seed,
                                                  options.spec.degree, options.optimizer);
                    spec = SplineSpec::from_kappa(cv.chosen_kappa, options.spec.degree);
                }
                const TobitFit fitted = methods[m] == Method::TobitAdditive
                                            ? fit(data, spec, options.optimizer)
                                            : fit_baseline(data, spec);
                slot.curves.resize(2);
                for (int j = 0; j < 2; ++j) slot.curves[static_cast<std::size_t>(j)] =
                    component_curve(fitted, j, grid);
                slot.ok = true;
            } catch (const std::exception&) {
                slot.ok = false;
            }
        }
    };

    int threads = options.threads > 0
                      ? options.threads
                      : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, reps);
    if (threads <= 1) {
        for (int rep = 0; rep < reps; ++rep) run_replicate(rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1))
                    run_replicate(rep);
            });
        for (std::thread& t : pool) t.join();
    }

    std::vector<ImseReport> reports;
    reports.reserve(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        ImseReport report;
        report.scenario = scenario;
        report.method = methods[m];
        report.grid = grid;
        report.imse_per_component.assign(2, 0.0);
        report.bands.resize(2);

        int successes = 0;
        for (int rep = 0; rep < reps; ++rep) {
            const detail::ReplicateOutcome& slot = outcomes[m][static_cast<std::size_t>(rep)];
            if (!slot.ok) {
                ++report.failures;
                continue;
            }
            ++successes;
            std::vector<double> rep_imse(2);
            for (int j = 0; j < 2; ++j)
                rep_imse[static_cast<std::size_t>(j)] =
                    imse(slot.curves[static_cast<std::size_t>(j)], truth[static_cast<std::size_t>(j)]);
            report.per_replicate.push_back(rep_imse);
            for (int j = 0; j < 2; ++j)
                report.imse_per_component[static_cast<std::size_t>(j)] +=
                    rep_imse[static_cast<std::size_t>(j)];
        }
        if (report.failures > 0.2 * reps)
            throw ExperimentFailure("run_experiment: " + std::to_string(report.failures) + " of " +
                                    std::to_string(reps) + " replicates failed for " +
                                    method_label(methods[m]));
        for (double& v : report.imse_per_component) v /= static_cast<double>(successes);

        for (int j = 0; j < 2; ++j) {
            ComponentBands& bands = report.bands[static_cast<std::size_t>(j)];
            bands.truth = truth[static_cast<std::size_t>(j)];
            bands.median.resize(grid.size());
            bands.q025.resize(grid.size());
            bands.q975.resize(grid.size());
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(successes));
            for (std::size_t k = 0; k < grid.size(); ++k) {
                values.clear();
                for (int rep = 0; rep < reps; ++rep) {
                    const detail::ReplicateOutcome& slot =
                        outcomes[m][static_cast<std::size_t>(rep)];
                    if (slot.ok) values.push_back(slot.curves[static_cast<std::size_t>(j)][k]);
                }
                std::sort(values.begin(), values.end());
                bands.median[k] = detail::sorted_quantile(values, 0.5);
                bands.q025[k] = detail::sorted_quantile(values, 0.025);
                bands.q975[k] = detail::sorted_quantile(values, 0.975);
            }
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace tobitadd
