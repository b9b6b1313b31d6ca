#ifndef BAYESLINGAM_DATASET_HPP
#define BAYESLINGAM_DATASET_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "common.hpp"

namespace bayeslingam {

/// N x n observations (rows are samples) plus variable names.
struct Dataset {
    Eigen::MatrixXd X;
    std::vector<std::string> names;
    bool standardized = false;

    int rows() const { return static_cast<int>(X.rows()); }
    int cols() const { return static_cast<int>(X.cols()); }
};

inline std::vector<std::string> default_names(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back("x" + std::to_string(i + 1));
    return out;
}

/// Column-wise (x - mean) / sd with the N-1 sample standard deviation.
inline Dataset standardize(const Eigen::MatrixXd& raw, std::vector<std::string> names = {}) {
    const auto N = raw.rows();
    const auto n = raw.cols();
    if (N < 2) throw DataError("need at least 2 observations, got " + std::to_string(N));
    if (n < 1) throw DataError("dataset has no columns");
    if (names.empty()) names = default_names(static_cast<int>(n));
    if (static_cast<Eigen::Index>(names.size()) != n) throw DataError("variable name count does not match column count");
    if (!raw.allFinite()) throw DataError("dataset contains non-finite values");

    Dataset d;
    d.X.resize(N, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double mean = raw.col(j).mean();
        double ss = (raw.col(j).array() - mean).square().sum();
        double sd = std::sqrt(ss / static_cast<double>(N - 1));
        if (!(sd > 0.0) || sd <= 1e-300 * std::max(1.0, std::abs(mean)))
            throw DataError("column '" + names[static_cast<std::size_t>(j)] + "' (" + std::to_string(j + 1) +
                            ") has zero variance");
        d.X.col(j) = (raw.col(j).array() - mean) / sd;
    }
    d.names = std::move(names);
    d.standardized = true;
    return d;
}

/// Byte hash of one column; used to key seeds and parent order to data content.
inline std::uint64_t column_hash(const Dataset& d, int j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index m = 0; m < d.X.rows(); ++m) {
        std::uint64_t bits;
        double v = d.X(m, j);
        std::memcpy(&bits, &v, sizeof bits);
        h = seeding::splitmix64(h ^ bits);
    }
    return h;
}

inline std::uint64_t fingerprint(const Dataset& d) {
    std::uint64_t h = seeding::splitmix64(static_cast<std::uint64_t>(d.rows()) * 1000003ULL + static_cast<std::uint64_t>(d.cols()));
    for (int j = 0; j < d.cols(); ++j) h = seeding::splitmix64(h ^ column_hash(d, j));
    return h;
}

}  // namespace bayeslingam

#endif  // BAYESLINGAM_DATASET_HPP
