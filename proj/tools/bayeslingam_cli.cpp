// Command-line front end: score, posterior, simulate, resimulate, benchmark.
//
// Exit codes: 0 success, 1 computation error, 2 I/O or usage error.

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bayeslingam/datagen.hpp"
#include "bayeslingam/eval.hpp"
#include "bayeslingam/io.hpp"
#include "bayeslingam/posterior.hpp"

using namespace bayeslingam;

namespace {

struct Shared {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string out;
    std::vector<std::string> settings;  // key=value overrides
};

void add_shared(CLI::App* cmd, Shared& s) {
    cmd->add_option("--config", s.config, "flat key = value configuration file");
    cmd->add_option("--seed", s.seed, "global seed");
    cmd->add_option("--jobs", s.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", s.out, "output path (stdout if omitted where allowed)");
    cmd->add_option("--set", s.settings, "override one config key, as key=value (repeatable)");
}

io::RunConfig resolve(const Shared& s) {
    io::RunConfig c = s.config.empty() ? io::RunConfig{} : io::load_config(s.config);
    for (const auto& kv : s.settings) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        io::apply_setting(c, io::trim(kv.substr(0, eq)), io::trim(kv.substr(eq + 1)));
    }
    if (s.seed) io::apply_setting(c, "seed", std::to_string(*s.seed));
    if (s.jobs) io::apply_setting(c, "jobs", std::to_string(*s.jobs));
    io::validate(c);
    return c;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_text(path, text);
}

std::string truth_path_for(const std::string& out, const std::string& explicit_path) {
    if (!explicit_path.empty()) return explicit_path;
    const std::string ext = ".csv";
    if (out.size() > ext.size() && out.compare(out.size() - ext.size(), ext.size(), ext) == 0)
        return out.substr(0, out.size() - ext.size()) + ".truth.json";
    return out + ".truth.json";
}

Dag dag_flag(const std::string& text) {
    try {
        return parse_dag(text);
    } catch (const GraphError& e) {
        throw ConfigError(std::string("--dag: ") + e.what());
    }
}

void refuse_large(int n) {
    if (n > kMaxExhaustiveNodes)
        throw ConfigError("exhaustive scoring supports at most " + std::to_string(kMaxExhaustiveNodes) +
                          " variables (data have " + std::to_string(n) + "); use 'posterior' with mode = greedy");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian causal discovery for linear non-Gaussian acyclic models"};
    app.require_subcommand(1);

    Shared score_s, post_s, sim_s, resim_s, bench_s;

    auto* score = app.add_subcommand("score", "score every family of a dataset and write diagnostics JSON");
    std::string score_data;
    score->add_option("data", score_data, "dataset CSV")->required();
    add_shared(score, score_s);

    auto* post = app.add_subcommand("posterior", "posterior over DAGs (exhaustive or greedy) as JSON");
    std::string post_data, post_mode;
    std::size_t post_top = 0;
    post->add_option("data", post_data, "dataset CSV")->required();
    post->add_option("--mode", post_mode, "exhaustive or greedy (overrides config)");
    post->add_option("--top", post_top, "list only the K most probable DAGs (0 = all)");
    add_shared(post, post_s);

    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset and its truth file");
    int sim_n = 2, sim_N = 1000;
    double sim_q = 1.0, sim_min_abs = 0.0;
    std::string sim_dag, sim_truth;
    sim->add_option("--n", sim_n, "number of variables");
    sim->add_option("--q", sim_q, "disturbance exponent");
    sim->add_option("--N", sim_N, "number of samples");
    sim->add_option("--dag", sim_dag, "fixed DAG in text form, e.g. \"2;1->2\"");
    sim->add_option("--min-abs-coef", sim_min_abs, "redraw coefficients smaller than this in magnitude");
    sim->add_option("--truth", sim_truth, "truth JSON path (default: next to --out)");
    add_shared(sim, sim_s);

    auto* resim = app.add_subcommand("resimulate", "regenerate data from a fitted DAG with shuffled residuals");
    std::string resim_data, resim_dag, resim_truth;
    std::optional<int> resim_N;
    resim->add_option("data", resim_data, "dataset CSV")->required();
    resim->add_option("--dag", resim_dag, "DAG in text form")->required();
    resim->add_option("--N-out", resim_N, "output sample count (<= input rows)");
    resim->add_option("--truth", resim_truth, "truth JSON path (default: next to --out)");
    add_shared(resim, resim_s);

    auto* bench = app.add_subcommand("benchmark", "run the synthetic benchmark grid and write a CSV");
    std::vector<double> bench_q;
    std::vector<int> bench_N;
    std::optional<int> bench_reps, bench_n;
    std::vector<std::string> bench_methods;
    std::string bench_calibration;
    bool bench_runtime = false;
    bench->add_option("--q", bench_q, "q values")->delimiter(',');
    bench->add_option("--N", bench_N, "sample sizes")->delimiter(',');
    bench->add_option("--reps", bench_reps, "repetitions per cell");
    bench->add_option("--n", bench_n, "variables per case");
    bench->add_option("--methods", bench_methods, "gl-laplace, mog-laplace, gl-mcmc")->delimiter(',');
    bench->add_option("--calibration", bench_calibration, "also write the pooled calibration table here");
    bench->add_flag("--record-runtime", bench_runtime, "fill runtime_s (outputs then differ between runs)");
    add_shared(bench, bench_s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*score) {
            auto cfg = resolve(score_s);
            auto data = io::load_dataset(score_data);
            refuse_large(data.cols());
            auto cache = build_cache(data, cfg.density, cfg.score, CacheFill::All, cfg.jobs);
            emit(score_s.out, io::dump(io::to_json(cache)));
        } else if (*post) {
            auto cfg = resolve(post_s);
            if (!post_mode.empty()) cfg.mode = io::parse_search_mode(post_mode);
            auto data = io::load_dataset(post_data);
            PosteriorOptions po;
            po.jobs = cfg.jobs;
            PosteriorResult r;
            if (cfg.mode == io::SearchMode::Exhaustive) {
                refuse_large(data.cols());
                r = exhaustive_posterior(data, cfg.density, cfg.score, po);
            } else {
                r = greedy_search(data, cfg.density, cfg.score, po);
            }
            auto j = io::to_json(r);
            j["num_dags"] = r.entries.size();
            if (post_top > 0 && r.entries.size() > post_top) {
                auto& dags = j["dags"];
                dags.erase(dags.begin() + static_cast<std::ptrdiff_t>(post_top), dags.end());
            }
            emit(post_s.out, io::dump(j));
        } else if (*sim) {
            auto cfg = resolve(sim_s);
            if (sim_s.out.empty()) throw ConfigError("simulate needs --out");
            SyntheticConfig sc;
            sc.n = sim_n;
            sc.q = sim_q;
            sc.N = sim_N;
            sc.min_abs_coef = sim_min_abs;
            sc.seed = cfg.score.seed;
            if (!sim_dag.empty()) {
                sc.dag = dag_flag(sim_dag);
                if (sim->count("--n") == 0) sc.n = sc.dag->size();
            }
            auto g = generate_synthetic(sc);
            io::write_text(sim_s.out, io::to_csv(g.data.X, g.data.names));
            io::write_text(truth_path_for(sim_s.out, sim_truth), io::dump(io::truth_json(g)));
        } else if (*resim) {
            auto cfg = resolve(resim_s);
            if (resim_s.out.empty()) throw ConfigError("resimulate needs --out");
            auto data = io::load_dataset(resim_data);
            auto dag = dag_flag(resim_dag);
            auto g = resimulate(data, dag, resim_N.value_or(data.rows()), cfg.score.seed);
            io::write_text(resim_s.out, io::to_csv(g.data.X, g.data.names));
            io::write_text(truth_path_for(resim_s.out, resim_truth), io::dump(io::truth_json(g)));
        } else if (*bench) {
            auto cfg = resolve(bench_s);
            auto& bc = cfg.benchmark;
            if (!bench_q.empty()) bc.q_values = bench_q;
            if (!bench_N.empty()) bc.N_values = bench_N;
            if (bench_reps) bc.reps = *bench_reps;
            if (bench_n) bc.n = *bench_n;
            if (!bench_methods.empty()) {
                bc.methods.clear();
                for (const auto& m : bench_methods) bc.methods.push_back(parse_method(m));
            }
            if (bench_runtime) bc.record_runtime = true;
            bc.score = cfg.score;
            for (auto& m : bc.methods) {
                auto family = m.density.family;  // hyperpriors and k come from the config
                m.density = cfg.density;
                m.density.family = family;
            }
            auto res = benchmark_grid(bc);
            emit(bench_s.out, benchmark_csv(res.rows));
            if (!bench_calibration.empty()) io::write_text(bench_calibration, calibration_csv(res.calibration_overall));
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
