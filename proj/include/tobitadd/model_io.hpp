#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tobitadd/estimator.hpp"

namespace tobitadd {

/// Unreadable or schema-incompatible model file.
struct ModelFileError : std::runtime_error {
    explicit ModelFileError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kModelSchemaVersion = 1;

struct ModelFile {
    TobitFit fit;
    std::vector<std::string> covariate_names;
    std::string invocation;
};

inline nlohmann::ordered_json to_json(const ModelFile& model) {
    const TobitFit& fit = model.fit;
    if (!std::isfinite(fit.limit))
        throw ModelFileError("cannot serialize a model with a non-finite detection limit");
    nlohmann::ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["invocation"] = model.invocation;
    j["detection_limit"] = fit.limit;
    nlohmann::ordered_json covs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < fit.specs.size(); ++i) {
        const SplineSpec& spec = fit.specs[i];
        covs.push_back({{"name", model.covariate_names[i]},
                        {"degree", spec.degree},
                        {"interior_knots", spec.interior_knots},
                        {"domain_lo", spec.domain_lo},
                        {"domain_hi", spec.domain_hi}});
    }
    j["covariates"] = covs;
    j["intercept"] = fit.intercept;
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    for (const Eigen::VectorXd& block : fit.theta_blocks)
        blocks.push_back(std::vector<double>(block.data(), block.data() + block.size()));
    j["coefficient_blocks"] = blocks;
    j["sigma"] = fit.sigma;
    j["column_means"] = std::vector<double>(fit.column_means.data(),
                                            fit.column_means.data() + fit.column_means.size());
    j["diagnostics"] = {{"loglik", fit.loglik},
                        {"iterations", fit.iterations},
                        {"converged", fit.converged},
                        {"n_used", fit.n_used},
                        {"censored_count", fit.censored_count}};
    return j;
}

inline ModelFile model_from_json(const nlohmann::json& j) {
    try {
        if (!j.contains("schema_version"))
            throw ModelFileError("missing mandatory schema_version field");
        if (j.at("schema_version").get<int>() != kModelSchemaVersion)
            throw ModelFileError("unsupported schema_version");
        ModelFile model;
        model.invocation = j.value("invocation", std::string());
        TobitFit& fit = model.fit;
        fit.limit = j.at("detection_limit").get<double>();
        for (const auto& cov : j.at("covariates")) {
            SplineSpec spec;
            spec.degree = cov.at("degree").get<int>();
            spec.interior_knots = cov.at("interior_knots").get<int>();
            spec.domain_lo = cov.at("domain_lo").get<double>();
            spec.domain_hi = cov.at("domain_hi").get<double>();
            fit.specs.push_back(spec);
            model.covariate_names.push_back(cov.at("name").get<std::string>());
        }
        fit.intercept = j.at("intercept").get<double>();
        for (const auto& block : j.at("coefficient_blocks")) {
            const std::vector<double> values = block.get<std::vector<double>>();
            fit.theta_blocks.push_back(
                Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
        }
        fit.sigma = j.at("sigma").get<double>();
        const std::vector<double> means = j.at("column_means").get<std::vector<double>>();
        fit.column_means =
            Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
        const auto& diag = j.at("diagnostics");
        fit.loglik = diag.at("loglik").get<double>();
        fit.iterations = diag.at("iterations").get<int>();
        fit.converged = diag.at("converged").get<bool>();
        fit.n_used = diag.at("n_used").get<int>();
        fit.censored_count = diag.at("censored_count").get<int>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFileError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const std::string& path, const ModelFile& model) {
    std::ofstream out(path);
    if (!out) throw ModelFileError("cannot open '" + path + "' for writing");
    out << to_json(model).dump(2) << "\n";
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelFileError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFileError(path + ": invalid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace tobitadd
