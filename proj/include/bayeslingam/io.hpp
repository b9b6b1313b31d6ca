#ifndef BAYESLINGAM_IO_HPP
#define BAYESLINGAM_IO_HPP

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "datagen.hpp"
#include "dataset.hpp"
#include "eval.hpp"
#include "posterior.hpp"
#include "score.hpp"

namespace bayeslingam::io {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// CSV: header row of names, comma separated, '.' decimals

struct RawTable {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
};

inline std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline RawTable parse_csv(const std::string& text, const std::string& source = "<input>") {
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw IoError(source + ": empty file (a header row is required)");

    RawTable t;
    for (auto f : bayeslingam::detail::split(lines[0], ',')) t.names.push_back(trim(std::string(f)));
    for (const auto& n : t.names)
        if (n.empty()) throw IoError(source + ": empty column name in header");
    const auto cols = static_cast<Eigen::Index>(t.names.size());
    std::vector<double> vals;
    Eigen::Index rows = 0;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        auto fields = bayeslingam::detail::split(lines[li], ',');
        if (static_cast<Eigen::Index>(fields.size()) != cols)
            throw IoError(source + ":" + std::to_string(li + 1) + ": expected " + std::to_string(cols) + " fields, got " +
                          std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            std::string f = trim(std::string(fields[c]));
            char* end = nullptr;
            errno = 0;
            double v = std::strtod(f.c_str(), &end);
            if (f.empty() || end != f.c_str() + f.size() || errno == ERANGE || !std::isfinite(v))
                throw IoError(source + ":" + std::to_string(li + 1) + ": column '" + t.names[c] + "': '" + f +
                              "' is not a finite number");
            vals.push_back(v);
        }
        ++rows;
    }
    t.X.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) t.X(r, c) = vals[static_cast<std::size_t>(r * cols + c)];
    return t;
}

inline RawTable read_csv(const std::string& path) { return parse_csv(read_text(path), path); }

/// Reads and standardizes a dataset; degenerate data surface as DataError.
inline Dataset load_dataset(const std::string& path) {
    auto t = read_csv(path);
    if (t.X.rows() < 2) throw IoError(path + ": need at least 2 data rows");
    return standardize(t.X, t.names);
}

inline std::string to_csv(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t j = 0; j < names.size(); ++j) s += (j ? "," : "") + names[j];
    s += '\n';
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            if (c) s += ',';
            s += format_double(X(r, c));
        }
        s += '\n';
    }
    return s;
}

// ---------------------------------------------------------------------------
// JSON

inline std::string edge_key(int from, int to) { return std::to_string(from + 1) + "->" + std::to_string(to + 1); }

/// Non-finite numbers become null: JSON has no infinity.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const DensityParams& p) {
    if (auto* gl = std::get_if<GlParams>(&p)) return {{"family", "gl"}, {"alpha", gl->alpha}, {"log_beta", gl->log_beta}};
    const auto& m = std::get<MogParams>(p);
    return {{"family", "mog"}, {"gamma", m.gamma}, {"mu", m.mu}, {"log_sigma", m.log_sigma}};
}

inline json to_json(const FamilyScore& s) {
    json parents = json::array();
    for (int j : s.family.parent_list()) parents.push_back(j + 1);
    json j = {{"node", s.family.node + 1},       {"parents", parents},       {"log_ml", number(s.log_ml)},
              {"dim", s.dim},                    {"converged", s.converged}, {"restarts_used", s.restarts_used},
              {"hessian_shift", s.hessian_shift}};
    j["estimator"] = to_string(s.estimator);
    if (s.estimator == Estimator::Mcmc) j["std_error"] = number(s.std_error);
    j["mode"] = {{"b", s.mode.b}, {"density", to_json(s.mode.density)}};
    return j;
}

inline json to_json(const FamilyScoreCache& c) {
    char fp[17];
    std::snprintf(fp, sizeof fp, "%016llx", static_cast<unsigned long long>(c.fingerprint()));
    json fams = json::array();
    for (const auto& s : c.sorted()) fams.push_back(to_json(s));
    return {{"n", c.size_n()}, {"fingerprint", fp}, {"families", fams}};
}

inline json to_json(const PosteriorResult& r) {
    json dags = json::array();
    for (const auto& e : r.entries) dags.push_back({{"dag", to_text(e.dag)}, {"log_score", e.log_score}, {"prob", e.prob}});
    json j = {{"mode", to_string(r.mode)}, {"log_normalizer", r.log_normalizer}, {"dags", dags}};
    json classes = json::array();
    if (r.class_view)
        for (const auto& c : *r.class_view) classes.push_back({{"cpdag", to_text(c.cpdag)}, {"prob", c.prob}});
    j["classes"] = classes;
    if (r.mode == PosteriorMode::Greedy) j["trajectory"] = r.trajectory;
    return j;
}

inline json truth_json(const GeneratedCase& g) {
    json coef = json::object();
    for (const auto& [e, b] : g.coefficients) coef[edge_key(e.first, e.second)] = b;
    return {{"dag", to_text(g.true_dag)}, {"coefficients", coef}, {"seed", g.seed}, {"q", number(g.q)}};
}

inline std::string dump(const json& j) {
    return j.dump(2) + "\n";
}

/// Reads a truth sidecar back into (dag, coefficients).
inline std::pair<Dag, EdgeCoefficients> parse_truth(const std::string& text, const std::string& source = "<truth>") {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw IoError(source + ": " + e.what());
    }
    if (!j.contains("dag") || !j["dag"].is_string()) throw IoError(source + ": missing \"dag\" string");
    auto dag = parse_dag(j["dag"].get<std::string>());
    EdgeCoefficients coef;
    if (j.contains("coefficients"))
        for (auto& [k, v] : j["coefficients"].items()) {
            auto arrow = k.find("->");
            if (arrow == std::string::npos) throw IoError(source + ": bad edge key '" + k + "'");
            int from = bayeslingam::detail::parse_index(k.substr(0, arrow), dag.size());
            int to = bayeslingam::detail::parse_index(k.substr(arrow + 2), dag.size());
            coef[{from, to}] = v.get<double>();
        }
    return {dag, coef};
}

// ---------------------------------------------------------------------------
// Flat key = value configuration

enum class SearchMode { Exhaustive, Greedy };

struct RunConfig {
    DensitySpec density;
    ScoreOptions score;
    SearchMode mode = SearchMode::Exhaustive;
    int jobs = 1;
    BenchmarkConfig benchmark;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
        throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
    return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
    return i;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    errno = 0;
    unsigned long long i = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE)
        throw ConfigError("config key '" + key + "': '" + v + "' is not an unsigned integer");
    return i;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': '" + v + "' is not a boolean");
}

inline std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    for (auto f : bayeslingam::detail::split(v, ',')) {
        auto t = trim(std::string(f));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

inline GaussianPrior& prior_slot(RunConfig& c, const std::string& name) {
    if (name == "alpha") return c.density.alpha;
    if (name == "log_beta") return c.density.log_beta;
    if (name == "gamma") return c.density.gamma;
    if (name == "mu") return c.density.mu;
    if (name == "log_sigma") return c.density.log_sigma;
    throw ConfigError("unknown hyperprior '" + name + "'");
}

}  // namespace detail

inline SearchMode parse_search_mode(const std::string& s) {
    if (s == "exhaustive") return SearchMode::Exhaustive;
    if (s == "greedy") return SearchMode::Greedy;
    throw ConfigError("unknown search mode '" + s + "' (expected exhaustive or greedy)");
}

/// Applies one setting. Used for config-file lines and command-line overrides alike.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "density") c.density.family = parse_density_family(value);
    else if (key == "mog_components") c.density.mog_components = static_cast<int>(to_int(key, value));
    else if (key.rfind("prior_", 0) == 0 && key.size() > 9 && key.substr(key.size() - 5) == "_mean")
        prior_slot(c, key.substr(6, key.size() - 11)).mean = to_double(key, value);
    else if (key.rfind("prior_", 0) == 0 && key.size() > 9 && key.substr(key.size() - 3) == "_sd")
        prior_slot(c, key.substr(6, key.size() - 9)).sd = to_double(key, value);
    else if (key == "restarts") c.score.optimizer.restarts = static_cast<int>(to_int(key, value));
    else if (key == "max_iterations") c.score.optimizer.max_iterations = static_cast<int>(to_int(key, value));
    else if (key == "gradient_tolerance") c.score.optimizer.gradient_tolerance = to_double(key, value);
    else if (key == "estimator") c.score.estimator = parse_estimator(value);
    else if (key == "mcmc_rungs") c.score.mcmc.rungs = static_cast<int>(to_int(key, value));
    else if (key == "mcmc_steps") c.score.mcmc.steps = static_cast<int>(to_int(key, value));
    else if (key == "mcmc_target_acceptance") c.score.mcmc.target_acceptance = to_double(key, value);
    else if (key == "mcmc_min_temperature") c.score.mcmc.min_temperature = to_double(key, value);
    else if (key == "seed_policy") {
        if (value == "index") c.score.seed_policy = SeedPolicy::ByIndex;
        else if (value == "content") c.score.seed_policy = SeedPolicy::ByContent;
        else throw ConfigError("seed_policy must be index or content");
    } else if (key == "mode") c.mode = parse_search_mode(value);
    else if (key == "seed") c.score.seed = c.benchmark.seed = to_u64(key, value);
    else if (key == "jobs") c.jobs = c.benchmark.jobs = static_cast<int>(to_int(key, value));
    else if (key == "structure_prior") {
        if (value != "uniform") throw ConfigError("only the uniform structure prior is implemented");
    } else if (key == "benchmark_n") c.benchmark.n = static_cast<int>(to_int(key, value));
    else if (key == "q_values") {
        c.benchmark.q_values.clear();
        for (auto& v : to_list(value)) c.benchmark.q_values.push_back(to_double(key, v));
    } else if (key == "N_values") {
        c.benchmark.N_values.clear();
        for (auto& v : to_list(value)) c.benchmark.N_values.push_back(static_cast<int>(to_int(key, v)));
    } else if (key == "reps") c.benchmark.reps = static_cast<int>(to_int(key, value));
    else if (key == "methods") {
        c.benchmark.methods.clear();
        for (auto& v : to_list(value)) c.benchmark.methods.push_back(parse_method(v));
    } else if (key == "calibration_bins") c.benchmark.calibration_bins = static_cast<int>(to_int(key, value));
    else if (key == "record_runtime") c.benchmark.record_runtime = to_bool(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

inline void validate(const RunConfig& c) {
    c.density.validate();
    c.score.validate();
    if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (c.score.estimator == Estimator::Mcmc && c.density.family != DensityFamily::GL)
        throw ConfigError("the MCMC estimator supports the GL density family only");
}

inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        try {
            apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path) { return parse_config(read_text(path), path); }

}  // namespace bayeslingam::io

#endif  // BAYESLINGAM_IO_HPP
