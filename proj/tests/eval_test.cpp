#include <gtest/gtest.h>

#include "bayeslingam/eval.hpp"

using namespace bayeslingam;

namespace {

// Posterior with the given (text, probability) pairs.
PosteriorResult make_post(const std::vector<std::pair<std::string, double>>& mass, bool classes = false) {
    std::vector<PosteriorEntry> e;
    for (auto& [t, p] : mass) e.push_back({parse_dag(t), std::log(p), p});
    PosteriorResult r;
    detail::sort_entries(e);
    r.entries = e;
    if (classes) r.class_view = detail::class_view(r.entries);
    return r;
}

const Dag kEmpty = parse_dag("2");
const Dag kFwd = parse_dag("2;1->2");
const Dag kBwd = parse_dag("2;2->1");

}  // namespace

TEST(Losses, BinaryAnchors) {
    EXPECT_EQ(binary_loss(make_post({{"2;1->2", 1.0}}), kFwd), 0);
    EXPECT_EQ(binary_loss(make_post({{"2;1->2", 1.0}}), kBwd), 1);
    auto p = make_post({{"2;1->2", 0.45}, {"2;2->1", 0.30}, {"2", 0.25}});
    EXPECT_EQ(binary_loss(p, kFwd), 0);
    EXPECT_EQ(binary_loss(p, kEmpty), 1);
    // exact tie: text order decides the best guess
    auto tie = make_post({{"2;2->1", 0.5}, {"2;1->2", 0.5}});
    EXPECT_EQ(binary_loss(tie, kFwd), 0);
}

TEST(Losses, ClassAnchors) {
    EXPECT_EQ(class_loss(make_post({{"2;1->2", 1.0}}), kBwd), 0);
    EXPECT_EQ(class_loss(make_post({{"2", 1.0}}), kFwd), 1);
    EXPECT_EQ(class_loss(make_post({{"2;1->2", 1.0}}), kFwd), 0);
    // class-aware prediction: two directed DAGs outweigh the single best empty DAG
    auto p = make_post({{"2", 0.4}, {"2;1->2", 0.3}, {"2;2->1", 0.3}}, true);
    EXPECT_EQ(class_loss(p, kBwd), 0);
    EXPECT_EQ(class_loss(p, kEmpty), 1);
}

TEST(Losses, LogAnchors) {
    EXPECT_EQ(log_loss(make_post({{"2;1->2", 1.0}}), kFwd), 0.0);
    auto u = make_post({{"2", 1.0 / 3}, {"2;1->2", 1.0 / 3}, {"2;2->1", 1.0 / 3}});
    EXPECT_NEAR(log_loss(u, kFwd), std::log(3.0), 1e-12);
    EXPECT_TRUE(std::isinf(log_loss(make_post({{"2;1->2", 1.0}}), kBwd)));
    EXPECT_TRUE(std::isinf(log_loss(make_post({{"2;1->2", 1.0}, {"2;2->1", 0.0}}), kBwd)));
}

TEST(Losses, QuadraticAnchorsAndBounds) {
    EXPECT_EQ(quadratic_loss(make_post({{"2;1->2", 1.0}}), kFwd), 0.0);
    auto u = make_post({{"2", 1.0 / 3}, {"2;1->2", 1.0 / 3}, {"2;2->1", 1.0 / 3}});
    EXPECT_NEAR(quadratic_loss(u, kFwd), 2.0 / 3, 1e-12);
    EXPECT_EQ(quadratic_loss(make_post({{"2;1->2", 1.0}}), kBwd), 2.0);
    std::mt19937_64 rng(1);
    std::gamma_distribution<double> g(0.5);
    for (int k = 0; k < 200; ++k) {
        double a = g(rng), b = g(rng), c = g(rng), s = a + b + c;
        auto p = make_post({{"2", a / s}, {"2;1->2", b / s}, {"2;2->1", c / s}});
        for (const auto& t : {kEmpty, kFwd, kBwd}) {
            double q = quadratic_loss(p, t);
            EXPECT_GE(q, 0.0);
            EXPECT_LE(q, 2.0);
            // class loss never exceeds binary loss when the best class holds the best DAG
            EXPECT_LE(class_loss(p, t), binary_loss(p, t));
        }
    }
}

TEST(Losses, ProperScoresDecreaseInTruthProbability) {
    double prev_log = std::numeric_limits<double>::infinity(), prev_q = 3.0;
    for (int k = 1; k <= 9; ++k) {
        double p = k / 10.0;
        auto post = make_post({{"2;1->2", p}, {"2", 1 - p}});
        double l = log_loss(post, kFwd), q = quadratic_loss(post, kFwd);
        EXPECT_LT(l, prev_log);
        EXPECT_LT(q, prev_q);
        prev_log = l;
        prev_q = q;
    }
}

TEST(ClassSpread, SplitsMassEvenly) {
    auto two = class_spread({{to_cpdag(kFwd), 1.0}}, 2);
    ASSERT_EQ(two.entries.size(), 2u);
    EXPECT_EQ(two.prob_of(kFwd), 0.5);
    EXPECT_EQ(two.prob_of(kBwd), 0.5);
    auto empty = class_spread({{to_cpdag(kEmpty), 1.0}}, 2);
    EXPECT_EQ(empty.prob_of(kEmpty), 1.0);
    // three-node chain class: members found by brute force over all 25 DAGs
    auto chain = parse_dag("3;1->2;2->3");
    auto cls = to_cpdag(chain);
    int members = 0;
    for (const auto& g : enumerate_dags(3)) members += to_cpdag(g) == cls;
    ASSERT_EQ(members, 3);
    auto r = class_spread({{cls, 0.9}, {to_cpdag(parse_dag("3")), 0.1}}, 3);
    for (const auto& g : enumerate_dags(3))
        if (to_cpdag(g) == cls) {
            EXPECT_NEAR(r.prob_of(g), 0.3, 1e-15);
        }
    EXPECT_NEAR(r.prob_of(parse_dag("3")), 0.1, 1e-15);
    EXPECT_NEAR(log_loss(r, chain), -std::log(0.3), 1e-12);
}

TEST(Calibration, Anchors) {
    auto sure = make_post({{"2;1->2", 1.0}});
    auto t = calibration_table({{&sure, kFwd}}, 10);
    EXPECT_EQ(t.back().freq, 1.0);
    EXPECT_EQ(t.back().count, 1);
    EXPECT_EQ(t.front().count, 2);  // the two unlisted DAGs at probability 0
    EXPECT_EQ(t.front().freq, 0.0);

    auto u = make_post({{"2", 1.0 / 3}, {"2;1->2", 1.0 / 3}, {"2;2->1", 1.0 / 3}});
    std::vector<std::pair<const PosteriorResult*, Dag>> runs;
    for (int k = 0; k < 300; ++k) runs.push_back({&u, k % 3 == 0 ? kEmpty : (k % 3 == 1 ? kFwd : kBwd)});
    auto tu = calibration_table(runs, 10);
    EXPECT_EQ(tu[3].count, 900);
    EXPECT_NEAR(tu[3].freq, 1.0 / 3, 1e-12);
    EXPECT_NEAR(tu[3].mean_pred, 1.0 / 3, 1e-12);
    EXPECT_TRUE(std::isnan(tu[5].freq));
}

TEST(Calibration, BinsPartitionPairs) {
    std::mt19937_64 rng(3);
    std::gamma_distribution<double> g(0.3);
    std::vector<PosteriorResult> posts;
    for (int k = 0; k < 100; ++k) {
        double a = g(rng), b = g(rng), c = g(rng), s = a + b + c;
        posts.push_back(make_post({{"2", a / s}, {"2;1->2", b / s}, {"2;2->1", c / s}}));
    }
    std::vector<std::pair<const PosteriorResult*, Dag>> runs;
    for (auto& p : posts) runs.push_back({&p, kFwd});
    for (int bins : {2, 7, 10}) {
        long long total = 0, hits = 0;
        for (const auto& b : calibration_table(runs, bins)) {
            total += b.count;
            if (b.count) hits += std::llround(b.freq * static_cast<double>(b.count));
        }
        EXPECT_EQ(total, 300);
        EXPECT_EQ(hits, 100);
    }
    EXPECT_THROW(calibration_table(runs, 1), ConfigError);
}

TEST(DagCount, Recurrence) {
    const double want[] = {1, 1, 3, 25, 543, 29281, 3781503};
    for (int n = 0; n <= 6; ++n) EXPECT_EQ(dag_count(n), want[n]);
}

TEST(Benchmark, DefaultsMirrorSweep) {
    BenchmarkConfig c;
    ASSERT_EQ(c.q_values.size(), 9u);
    EXPECT_NEAR(c.q_values.front(), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(c.q_values[4], 1.0, 1e-15);
    EXPECT_NEAR(c.q_values.back(), std::exp(1.0), 1e-14);
    EXPECT_EQ(c.N_values.front(), 10);
    EXPECT_EQ(c.N_values.back(), 10000);
    EXPECT_EQ(c.reps, 100);
}

TEST(Benchmark, OneCellOneRow) {
    BenchmarkConfig c;
    c.q_values = {2.0};
    c.N_values = {50};
    c.reps = 1;
    c.methods = {parse_method("gl-laplace")};
    auto r = benchmark_grid(c);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_TRUE(r.rows[0].error.empty());
    auto csv = benchmark_csv(r.rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "q,N,rep,method,binary,class,log,quadratic,runtime_s,error");
}

TEST(Benchmark, RerunIsByteIdenticalAndParallelSafe) {
    BenchmarkConfig c;
    c.q_values = {0.5, 2.0};
    c.N_values = {30, 100};
    c.reps = 3;
    c.seed = 17;
    auto a = benchmark_grid(c);
    c.jobs = 4;
    auto b = benchmark_grid(c);
    EXPECT_EQ(benchmark_csv(a.rows), benchmark_csv(b.rows));
    EXPECT_EQ(calibration_csv(a.calibration.at("gl-laplace")), calibration_csv(b.calibration.at("gl-laplace")));
    ASSERT_EQ(a.rows.size(), 2u * 2 * 3 * 2);
    EXPECT_EQ(a.rows[0].method, "gl-laplace");
    EXPECT_EQ(a.rows[1].method, "mog-laplace");
    long long pairs = 0;
    for (const auto& bin : a.calibration.at("mog-laplace")) pairs += bin.count;
    EXPECT_EQ(pairs, 2 * 2 * 3 * 3);
}

TEST(Benchmark, ErrorRowsKeepTheirShape) {
    BenchmarkRow bad;
    bad.q = 1;
    bad.N = 2;
    bad.method = "gl-laplace";
    bad.error = "boom, with comma\nand newline";
    auto csv = benchmark_csv({bad});
    auto line = csv.substr(csv.find('\n') + 1);
    EXPECT_EQ(line, "1,2,0,gl-laplace,,,,,0,boom; with comma and newline\n");
    EXPECT_THROW(parse_method("pc"), ConfigError);
}

TEST(Format, InfinityToken) {
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(std::stod(format_double(1.0 / 3)), 1.0 / 3);
}
