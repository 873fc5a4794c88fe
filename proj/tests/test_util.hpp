#pragma once

// Shared generators for the test suites.

#include <random>

#include "qloop/transport.hpp"

namespace qloop::testutil {

// Random smooth so(n) loop: skew-symmetric trigonometric polynomial of
// degree 3, sampled on K points.
inline LoopConnection random_so_loop(int n, int K, unsigned seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::MatrixXd> C, S;
    for (int k = 0; k <= 3; ++k) {
        Eigen::MatrixXd A(n, n), B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                A(i, j) = gauss(rng);
                B(i, j) = gauss(rng);
            }
        C.push_back(0.5 * (A - A.transpose()) / (1.0 + k * k));
        S.push_back(0.5 * (B - B.transpose()) / (1.0 + k * k));
    }
    LoopConnection conn;
    conn.n = n;
    conn.algebra = MatrixAlgebra::SO;
    for (int k = 0; k < K; ++k) {
        double t = double(k) / K;
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        for (int m = 0; m <= 3; ++m)
            A += C[m] * std::cos(2 * kPi * m * t) + S[m] * std::sin(2 * kPi * m * t);
        conn.samples.push_back((scale * A).cast<Complex>());
    }
    return conn;
}

inline Mat random_complex_mat(int d, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = scale * Complex(g(rng), g(rng));
    return m;
}

}  // namespace qloop::testutil
