#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "tobitadd/csv.hpp"
#include "tobitadd/numeric.hpp"
#include "tobitadd/splines.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const std::string kCli = TOBITADD_CLI_PATH;

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() /
              ("tobitadd_cli_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Sandbox() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run(const std::string& args, const Sandbox& box) {
    const std::string log = box.path("run.log");
    const int raw = std::system((kCli + " " + args + " > " + log + " 2>&1").c_str());
    RunResult result;
    result.exit_code = WEXITSTATUS(raw);
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// y = 1 + 2 x1 - x2 with tiny noise, all positive: an easy uncensored fit.
void write_training_csv(const std::string& path, int n = 60) {
    tobitadd::RngStream rng(904, 0);
    std::ostringstream out;
    out << "y,x1,x2\n";
    for (int i = 0; i < n; ++i) {
        const double x1 = rng.next_uniform();
        const double x2 = rng.next_uniform();
        const double y = 4.0 + 2.0 * x1 - x2 + 0.05 * rng.next_normal();
        out << tobitadd::format_double(y) << "," << tobitadd::format_double(x1) << ","
            << tobitadd::format_double(x2) << "\n";
    }
    write_file(path, out.str());
}

}  // namespace

TEST_CASE("fit writes a model and a summary") {
    Sandbox box;
    write_training_csv(box.path("train.csv"));
    const RunResult r = run("fit --data " + box.path("train.csv") + " --limit 0 --kappa 5 --out " +
                                box.path("model.json"),
                            box);
    INFO(r.output);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("sigma_hat"));
    CHECK_THAT(r.output, ContainsSubstring("censored:       0"));
    REQUIRE(fs::exists(box.path("model.json")));

    const nlohmann::json model = nlohmann::json::parse(slurp(box.path("model.json")));
    CHECK(model.at("schema_version") == 1);
    CHECK(model.at("detection_limit") == 0.0);
    CHECK(model.at("covariates").size() == 2);
    CHECK(model.at("covariates")[0].at("name") == "x1");
    CHECK_THAT(model.at("invocation").get<std::string>(), ContainsSubstring("--kappa 5"));

    // With no censoring, sigma_hat is the least-squares residual SD.
    const tobitadd::CsvTable table = tobitadd::read_csv_file(box.path("train.csv"));
    Eigen::MatrixXd x(60, 2);
    Eigen::VectorXd y(60);
    for (int i = 0; i < 60; ++i) {
        y[i] = table.rows[static_cast<std::size_t>(i)][0];
        x(i, 0) = table.rows[static_cast<std::size_t>(i)][1];
        x(i, 1) = table.rows[static_cast<std::size_t>(i)][2];
    }
    const tobitadd::DesignMatrix design =
        tobitadd::build_design(x, tobitadd::SplineSpec::from_kappa(5));
    const Eigen::VectorXd theta = design.values.colPivHouseholderQr().solve(y);
    const double oracle_sd = std::sqrt((y - design.values * theta).squaredNorm() / 60.0);
    CHECK_THAT(model.at("sigma").get<double>(), WithinAbs(oracle_sd, 1e-6));
}

TEST_CASE("fit rejects a missing response column by name") {
    Sandbox box;
    write_file(box.path("bad.csv"), "resp,x1\n1.0,0.5\n");
    const RunResult r = run("fit --data " + box.path("bad.csv") + " --limit 0 --out " +
                                box.path("m.json"),
                            box);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.output, ContainsSubstring("missing response column 'y'"));

    const RunResult renamed = run("fit --data " + box.path("bad.csv") +
                                      " --limit 0 --response resp --out " + box.path("m.json"),
                                  box);
    CHECK(renamed.exit_code != 2);  // the named column is found
}

TEST_CASE("fit reports malformed CSV and numerical failures distinctly") {
    Sandbox box;
    write_file(box.path("garbage.csv"), "y,x1\n1.0,not_a_number\n");
    const RunResult bad = run("fit --data " + box.path("garbage.csv") + " --limit 0 --out " +
                                  box.path("m.json"),
                              box);
    CHECK(bad.exit_code == 2);

    // Everything censored: a model-level failure, not an input-format one.
    write_training_csv(box.path("train.csv"));
    const RunResult censored = run("fit --data " + box.path("train.csv") +
                                       " --limit 1000 --out " + box.path("m.json"),
                                   box);
    CHECK(censored.exit_code == 3);

    const RunResult missing = run("fit --data " + box.path("nope.csv") + " --limit 0 --out " +
                                      box.path("m.json"),
                                  box);
    CHECK(missing.exit_code == 2);
}

TEST_CASE("fit with --kappa cv reports the chosen kappa") {
    Sandbox box;
    write_training_csv(box.path("train.csv"), 120);
    const RunResult r = run("fit --data " + box.path("train.csv") +
                                " --limit 0 --kappa cv --seed 5 --out " + box.path("model.json"),
                            box);
    INFO(r.output);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("cross-validation chose kappa"));
}

TEST_CASE("cv prints a score per kappa") {
    Sandbox box;
    write_training_csv(box.path("train.csv"), 120);
    const RunResult r = run("cv --data " + box.path("train.csv") +
                                " --limit 0 --grid 4,5 --folds 5 --seed 3",
                            box);
    INFO(r.output);
    CHECK(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("chosen kappa"));
    CHECK_THAT(r.output, ContainsSubstring("4  "));
}

TEST_CASE("predict round trip on training rows") {
    Sandbox box;
    write_training_csv(box.path("train.csv"));
    REQUIRE(run("fit --data " + box.path("train.csv") + " --limit 0 --kappa 4 --out " +
                    box.path("model.json"),
                box)
                .exit_code == 0);
    const RunResult r = run("predict --model " + box.path("model.json") + " --data " +
                                box.path("train.csv") + " --out " + box.path("pred.csv"),
                            box);
    INFO(r.output);
    REQUIRE(r.exit_code == 0);

    const tobitadd::CsvTable pred = tobitadd::read_csv_file(box.path("pred.csv"));
    REQUIRE(pred.columns.back() == "yhat_latent");
    const int y_col = pred.column_index("y");
    const int yhat_col = pred.column_index("yhat_latent");
    REQUIRE(pred.num_rows() == 60);
    double worst = 0.0;
    for (const auto& row : pred.rows)
        worst = std::max(worst, std::fabs(row[static_cast<std::size_t>(y_col)] -
                                          row[static_cast<std::size_t>(yhat_col)]));
    CHECK(worst < 0.2);  // near-noiseless linear data fits closely
}

TEST_CASE("predict handles empty input and column mismatches") {
    Sandbox box;
    write_training_csv(box.path("train.csv"));
    REQUIRE(run("fit --data " + box.path("train.csv") + " --limit 0 --kappa 4 --out " +
                    box.path("model.json"),
                box)
                .exit_code == 0);

    write_file(box.path("empty.csv"), "y,x1,x2\n");
    const RunResult empty = run("predict --model " + box.path("model.json") + " --data " +
                                    box.path("empty.csv") + " --out " + box.path("pred.csv"),
                                box);
    CHECK(empty.exit_code == 0);
    const std::string content = slurp(box.path("pred.csv"));
    CHECK_THAT(content, ContainsSubstring("yhat_latent"));
    CHECK(tobitadd::read_csv_file(box.path("pred.csv")).num_rows() == 0);

    write_file(box.path("mismatch.csv"), "x1,other\n0.5,0.5\n");
    const RunResult mismatch = run("predict --model " + box.path("model.json") + " --data " +
                                       box.path("mismatch.csv") + " --out " + box.path("p2.csv"),
                                   box);
    CHECK(mismatch.exit_code == 2);
    CHECK_THAT(mismatch.output, ContainsSubstring("x2"));
}

TEST_CASE("identical flags reproduce byte-identical outputs") {
    Sandbox box;
    write_training_csv(box.path("train.csv"));
    const std::string fit_flags = "fit --data " + box.path("train.csv") +
                                  " --limit 0.5 --kappa 5 --out " + box.path("a.json");
    REQUIRE(run(fit_flags, box).exit_code == 0);
    const std::string first = slurp(box.path("a.json"));
    REQUIRE(run(fit_flags, box).exit_code == 0);
    CHECK(first == slurp(box.path("a.json")));

    const std::string predict_flags = "predict --model " + box.path("a.json") + " --data " +
                                      box.path("train.csv") + " --out " + box.path("p.csv");
    REQUIRE(run(predict_flags, box).exit_code == 0);
    const std::string p1 = slurp(box.path("p.csv"));
    REQUIRE(run(predict_flags, box).exit_code == 0);
    CHECK(p1 == slurp(box.path("p.csv")));
}

TEST_CASE("simulate writes the pinned CSV schemas deterministically") {
    Sandbox box;
    const std::string flags = "simulate --n 80 --cen 0.15 --reps 6 --seed 11 "
                              "--methods tobit,naive --threads 2 --outdir ";
    REQUIRE(run(flags + box.path("out1"), box).exit_code == 0);
    REQUIRE(run(flags + box.path("out2"), box).exit_code == 0);

    const std::string imse1 = slurp(box.path("out1") + "/imse.csv");
    CHECK_THAT(imse1, ContainsSubstring("method,component,imse,imse_x1e4"));
    CHECK_THAT(imse1, ContainsSubstring("tobit-additive,m1,"));
    CHECK_THAT(imse1, ContainsSubstring("naive-spline-ols,m2,"));
    const std::string bands1 = slurp(box.path("out1") + "/bands.csv");
    CHECK_THAT(bands1, ContainsSubstring("component,grid_x,truth,median,q025,q975"));
    CHECK(fs::exists(box.path("out2") + "/bands_naive-spline-ols.csv"));

    auto normalized = [&](std::string text, const std::string& from, const std::string& to) {
        std::string::size_type pos;
        while ((pos = text.find(from)) != std::string::npos) text.replace(pos, from.size(), to);
        return text;
    };
    CHECK(imse1 == normalized(slurp(box.path("out2") + "/imse.csv"), box.path("out2"),
                              box.path("out1")));
    CHECK(bands1 == normalized(slurp(box.path("out2") + "/bands.csv"), box.path("out2"),
                               box.path("out1")));

    // 2 components x 50 grid points, plus comment and header lines.
    std::istringstream lines(bands1);
    int data_rows = 0;
    for (std::string line; std::getline(lines, line);)
        data_rows += (line.rfind("m1,", 0) == 0 || line.rfind("m2,", 0) == 0);
    CHECK(data_rows == 100);
}

TEST_CASE("simulate rejects bad flags and scenarios") {
    Sandbox box;
    CHECK(run("simulate --n 80 --cen 1.2 --reps 2 --outdir " + box.path("o"), box).exit_code == 2);
    CHECK(run("simulate --n 80 --cen 0.1 --methods nope --outdir " + box.path("o"), box)
              .exit_code == 2);
    CHECK(run("simulate --cen 0.1 --outdir " + box.path("o"), box).exit_code == 2);  // missing --n
}
