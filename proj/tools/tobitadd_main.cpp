// tobitadd command line: fit / cv / simulate / predict.
//
// Exit codes: 0 success, 2 malformed input, 3 numerical or model failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tobitadd/tobitadd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitModel = 3;

struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

std::string join_invocation(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i > 0) out += ' ';
        out += argv[i];
    }
    return out;
}

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) tokens.push_back(token);
    }
    return tokens;
}

struct LoadedData {
    tobitadd::CensoredDataset dataset;
    std::vector<std::string> covariate_names;
};

LoadedData load_dataset(const std::string& path, const std::string& response, double limit) {
    const tobitadd::CsvTable table = tobitadd::read_csv_file(path);
    const int y_col = table.column_index(response);
    if (y_col < 0)
        throw InputError(path + ": missing response column '" + response + "'");
    if (table.columns.size() < 2)
        throw InputError(path + ": no covariate columns besides '" + response + "'");

    LoadedData out;
    const std::size_t d = table.columns.size() - 1;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(table.num_rows()), static_cast<Eigen::Index>(d));
    Eigen::VectorXd y(static_cast<Eigen::Index>(table.num_rows()));
    std::size_t col = 0;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (static_cast<int>(c) == y_col) continue;
        out.covariate_names.push_back(table.columns[c]);
        for (std::size_t r = 0; r < table.num_rows(); ++r)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = table.rows[r][c];
        ++col;
    }
    for (std::size_t r = 0; r < table.num_rows(); ++r)
        y[static_cast<Eigen::Index>(r)] = table.rows[r][static_cast<std::size_t>(y_col)];

    try {
        out.dataset = tobitadd::CensoredDataset::from_observations(x, y, limit);
    } catch (const std::invalid_argument& e) {
        throw InputError(path + ": " + e.what());
    }
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    for (const std::string& line : lines) out << line << "\n";
}

int cmd_fit(const std::string& data_path, double limit, const std::string& kappa_arg, int degree,
            const std::string& out_path, const std::string& response, std::uint64_t seed,
            const std::string& invocation) {
    const LoadedData loaded = load_dataset(data_path, response, limit);

    int kappa = 0;
    if (kappa_arg == "cv") {
        const tobitadd::CvResult cv =
            tobitadd::cv_select(loaded.dataset, {4, 5, 6, 7, 8}, 5, seed, degree);
        kappa = cv.chosen_kappa;
        std::printf("cross-validation chose kappa = %d\n", kappa);
    } else {
        try {
            std::size_t pos = 0;
            kappa = std::stoi(kappa_arg, &pos);
            if (pos != kappa_arg.size()) throw std::invalid_argument(kappa_arg);
        } catch (const std::exception&) {
            throw InputError("--kappa must be an integer or 'cv', got '" + kappa_arg + "'");
        }
    }

    const tobitadd::SplineSpec spec = tobitadd::SplineSpec::from_kappa(kappa, degree);
    const tobitadd::TobitFit fit = tobitadd::fit(loaded.dataset, spec);

    tobitadd::ModelFile model;
    model.fit = fit;
    model.covariate_names = loaded.covariate_names;
    model.invocation = invocation;
    tobitadd::save_model(out_path, model);

    std::printf("n:              %d\n", fit.n_used);
    std::printf("censored:       %d\n", fit.censored_count);
    std::printf("kappa:          %d (degree %d, %d interior knots)\n", kappa, degree,
                kappa - degree - 1);
    std::printf("sigma_hat:      %s\n", tobitadd::format_double(fit.sigma).c_str());
    std::printf("log-likelihood: %s\n", tobitadd::format_double(fit.loglik).c_str());
    std::printf("converged:      %s (%d iterations)\n", fit.converged ? "yes" : "no",
                fit.iterations);
    std::printf("model written:  %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_cv(const std::string& data_path, double limit, const std::string& grid_arg, int folds,
           std::uint64_t seed, int degree, const std::string& response) {
    const LoadedData loaded = load_dataset(data_path, response, limit);
    std::vector<int> grid;
    for (const std::string& token : split_tokens(grid_arg)) {
        try {
            grid.push_back(std::stoi(token));
        } catch (const std::exception&) {
            throw InputError("--grid entries must be integers, got '" + token + "'");
        }
    }
    const tobitadd::CvResult cv = tobitadd::cv_select(loaded.dataset, grid, folds, seed, degree);
    std::printf("kappa  cv_score\n");
    for (std::size_t k = 0; k < cv.kappa_grid.size(); ++k)
        std::printf("%5d  %s\n", cv.kappa_grid[k], tobitadd::format_double(cv.scores[k]).c_str());
    for (const std::string& note : cv.diagnostics) std::printf("note: %s\n", note.c_str());
    std::printf("chosen kappa: %d\n", cv.chosen_kappa);
    return kExitOk;
}

int cmd_simulate(int n, double cen, int reps, std::uint64_t seed, const std::string& methods_arg,
                 const std::string& outdir, int kappa, int degree, bool cv_kappa, int threads,
                 int grid_points, const std::string& invocation) {
    std::vector<tobitadd::Method> methods;
    for (const std::string& token : split_tokens(methods_arg)) {
        if (token == "tobit")
            methods.push_back(tobitadd::Method::TobitAdditive);
        else if (token == "naive")
            methods.push_back(tobitadd::Method::NaiveSplineOls);
        else
            throw InputError("--methods accepts 'tobit' and 'naive', got '" + token + "'");
    }
    if (methods.empty()) throw InputError("--methods selected no methods");

    tobitadd::Scenario scenario;
    scenario.n = n;
    scenario.cen = cen;
    scenario.replicates = reps;
    scenario.seed = seed;
    scenario.grid_points = grid_points;
    try {
        scenario.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    tobitadd::ExperimentOptions options;
    options.spec = tobitadd::SplineSpec::from_kappa(kappa, degree);
    options.select_kappa_by_cv = cv_kappa;
    options.threads = threads;

    const std::vector<tobitadd::ImseReport> reports =
        tobitadd::run_experiment(scenario, methods, options);

    std::filesystem::create_directories(outdir);
    const std::string comment =
        "# invocation: " + invocation + "\n# seed: " + std::to_string(seed);

    std::vector<std::string> imse_lines = {comment, "method,component,imse,imse_x1e4"};
    for (const tobitadd::ImseReport& report : reports) {
        for (int j = 0; j < 2; ++j) {
            const double v = report.imse_per_component[static_cast<std::size_t>(j)];
            imse_lines.push_back(std::string(tobitadd::method_label(report.method)) + ",m" +
                                 std::to_string(j + 1) + "," + tobitadd::format_double(v) + "," +
                                 tobitadd::format_double(v * 1e4));
        }
    }
    write_lines(outdir + "/imse.csv", imse_lines);

    auto bands_lines = [&](const tobitadd::ImseReport& report) {
        std::vector<std::string> lines = {comment, "component,grid_x,truth,median,q025,q975"};
        for (int j = 0; j < 2; ++j) {
            const tobitadd::ComponentBands& bands = report.bands[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < report.grid.size(); ++k)
                lines.push_back("m" + std::to_string(j + 1) + "," +
                                tobitadd::format_double(report.grid[k]) + "," +
                                tobitadd::format_double(bands.truth[k]) + "," +
                                tobitadd::format_double(bands.median[k]) + "," +
                                tobitadd::format_double(bands.q025[k]) + "," +
                                tobitadd::format_double(bands.q975[k]));
        }
        return lines;
    };

    // bands.csv carries the Tobit bands when that method ran; any other
    // method's bands go to bands_<label>.csv.
    std::size_t primary = 0;
    for (std::size_t m = 0; m < reports.size(); ++m)
        if (reports[m].method == tobitadd::Method::TobitAdditive) primary = m;
    write_lines(outdir + "/bands.csv", bands_lines(reports[primary]));
    for (std::size_t m = 0; m < reports.size(); ++m) {
        if (m == primary) continue;
        write_lines(outdir + "/bands_" + tobitadd::method_label(reports[m].method) + ".csv",
                    bands_lines(reports[m]));
    }

    std::printf("n=%d cen=%g reps=%d seed=%llu\n", n, cen, reps,
                static_cast<unsigned long long>(seed));
    for (const tobitadd::ImseReport& report : reports)
        std::printf("%-18s IMSE_x1e4: m1=%.2f m2=%.2f  (failures %d)\n",
                    tobitadd::method_label(report.method), report.imse_per_component[0] * 1e4,
                    report.imse_per_component[1] * 1e4, report.failures);
    std::printf("wrote %s/imse.csv and %s/bands.csv\n", outdir.c_str(), outdir.c_str());
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path, const std::string& invocation) {
    tobitadd::ModelFile model;
    try {
        model = tobitadd::load_model(model_path);
    } catch (const tobitadd::ModelFileError& e) {
        throw InputError(e.what());
    }

    const tobitadd::CsvTable table = tobitadd::read_csv_file(data_path);
    std::vector<int> cov_cols;
    for (const std::string& name : model.covariate_names) {
        const int idx = table.column_index(name);
        if (idx < 0)
            throw InputError(data_path + ": missing covariate column '" + name + "'");
        cov_cols.push_back(idx);
    }

    Eigen::MatrixXd x(static_cast<Eigen::Index>(table.num_rows()),
                      static_cast<Eigen::Index>(cov_cols.size()));
    for (std::size_t r = 0; r < table.num_rows(); ++r)
        for (std::size_t c = 0; c < cov_cols.size(); ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                table.rows[r][static_cast<std::size_t>(cov_cols[c])];

    const Eigen::VectorXd yhat = tobitadd::predict(model.fit, x);

    std::vector<std::string> lines;
    lines.push_back("# invocation: " + invocation);
    std::string header;
    for (const std::string& name : table.columns) header += name + ",";
    header += "yhat_latent";
    lines.push_back(header);
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
        std::string line;
        for (double v : table.rows[r]) line += tobitadd::format_double(v) + ",";
        line += tobitadd::format_double(yhat[static_cast<Eigen::Index>(r)]);
        lines.push_back(line);
    }
    write_lines(out_path, lines);
    std::printf("wrote %zu predictions to %s\n", table.num_rows(), out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string invocation = join_invocation(argc, argv);

    CLI::App app{"Semi-parametric Tobit additive regression (censored-Gaussian "
                 "likelihood with B-spline additive components)"};
    app.require_subcommand(1);

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a Tobit additive model from a CSV file");
    std::string fit_data, fit_out, fit_kappa = "5", fit_response = "y";
    double fit_limit = 0.0;
    int fit_degree = 3;
    std::uint64_t fit_seed = 0;
    fit_cmd->add_option("--data", fit_data, "input CSV")->required();
    fit_cmd->add_option("--limit", fit_limit, "known lower detection limit")->required();
    fit_cmd->add_option("--kappa", fit_kappa,
                        "basis functions per covariate (kappa = degree + 1 + interior knots), "
                        "or 'cv' for 5-fold selection over {4,...,8}");
    fit_cmd->add_option("--degree", fit_degree, "spline degree (default 3)");
    fit_cmd->add_option("--out", fit_out, "output model JSON")->required();
    fit_cmd->add_option("--response", fit_response, "response column name (default 'y')");
    fit_cmd->add_option("--seed", fit_seed, "fold seed for --kappa cv");

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validate kappa on a CSV file");
    std::string cv_data, cv_grid = "4,5,6,7,8", cv_response = "y";
    double cv_limit = 0.0;
    int cv_folds = 5, cv_degree = 3;
    std::uint64_t cv_seed = 0;
    cv_cmd->add_option("--data", cv_data, "input CSV")->required();
    cv_cmd->add_option("--limit", cv_limit, "known lower detection limit")->required();
    cv_cmd->add_option("--grid", cv_grid, "comma-separated kappa candidates");
    cv_cmd->add_option("--folds", cv_folds, "number of folds (default 5)");
    cv_cmd->add_option("--seed", cv_seed, "fold assignment seed");
    cv_cmd->add_option("--degree", cv_degree, "spline degree (default 3)");
    cv_cmd->add_option("--response", cv_response, "response column name (default 'y')");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run one Monte Carlo benchmark cell");
    int sim_n = 0, sim_reps = 50, sim_kappa = 5, sim_degree = 3, sim_threads = 0,
        sim_grid_points = 50;
    double sim_cen = 0.0;
    std::uint64_t sim_seed = 0;
    std::string sim_methods = "tobit,naive", sim_outdir;
    bool sim_cv_kappa = false;
    sim_cmd->add_option("--n", sim_n, "observations per replicate")->required();
    sim_cmd->add_option("--cen", sim_cen, "censoring proportion in [0,1)")->required();
    sim_cmd->add_option("--reps", sim_reps, "replicates (default 50)");
    sim_cmd->add_option("--seed", sim_seed, "replicate stream seed");
    sim_cmd->add_option("--methods", sim_methods, "comma list of tobit,naive");
    sim_cmd->add_option("--outdir", sim_outdir, "output directory")->required();
    sim_cmd->add_option("--kappa", sim_kappa, "basis functions per covariate (default 5)");
    sim_cmd->add_option("--degree", sim_degree, "spline degree (default 3)");
    sim_cmd->add_flag("--cv-kappa", sim_cv_kappa, "select kappa by CV per replicate");
    sim_cmd->add_option("--threads", sim_threads, "worker threads (0 = auto)");
    sim_cmd->add_option("--grid-points", sim_grid_points, "evaluation grid size (default 50)");

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Predict latent means from a saved model");
    std::string pred_model, pred_data, pred_out;
    pred_cmd->add_option("--model", pred_model, "model JSON from 'fit'")->required();
    pred_cmd->add_option("--data", pred_data, "covariate CSV")->required();
    pred_cmd->add_option("--out", pred_out, "output predictions CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*fit_cmd)
            return cmd_fit(fit_data, fit_limit, fit_kappa, fit_degree, fit_out, fit_response,
                           fit_seed, invocation);
        if (*cv_cmd)
            return cmd_cv(cv_data, cv_limit, cv_grid, cv_folds, cv_seed, cv_degree, cv_response);
        if (*sim_cmd)
            return cmd_simulate(sim_n, sim_cen, sim_reps, sim_seed, sim_methods, sim_outdir,
                                sim_kappa, sim_degree, sim_cv_kappa, sim_threads, sim_grid_points,
                                invocation);
        if (*pred_cmd) return cmd_predict(pred_model, pred_data, pred_out, invocation);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const tobitadd::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitModel;
    }
    return kExitOk;
}
