#pragma once

// Parallel transport of periodic linear ODEs psi' = A(t) psi on matrix
// groups, Floquet reduction to constant connections, the spinor supertrace,
// the zeta-regularized circle Pfaffian, and the classical Atiyah-Witten
// checker.
//
// Integrator: 4th-order commutator-free Magnus (two exponentials per step,
// Gauss nodes c = 1/2 -+ sqrt(3)/6), with 4-point Lagrange interpolation of
// the samples on the periodic grid.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>
#include <unsupported/Eigen/MatrixFunctions>

#include "qloop/errors.hpp"
#include "qloop/qseries.hpp"

namespace qloop {

using Mat = Eigen::MatrixXcd;

enum class MatrixAlgebra { SO, U, GL };

inline const char* algebra_name(MatrixAlgebra a) {
    switch (a) {
        case MatrixAlgebra::SO: return "so";
        case MatrixAlgebra::U: return "u";
        case MatrixAlgebra::GL: return "gl";
    }
    return "?";
}

// Uniformly sampled path t -> A(t) over one period, values in a declared
// matrix Lie algebra. samples[k] = A(k/K).
struct LoopConnection {
    int n = 0;
    MatrixAlgebra algebra = MatrixAlgebra::GL;
    std::vector<Mat> samples;

    int K() const { return static_cast<int>(samples.size()); }

    void validate() const {
        if (K() < 16) throw ValidationError("LoopConnection: need at least 16 samples");
        for (const Mat& A : samples) {
            if (A.rows() != n || A.cols() != n) throw ValidationError("LoopConnection: sample size");
            switch (algebra) {
                case MatrixAlgebra::SO:
                    if ((A + A.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
                        A.imag().cwiseAbs().maxCoeff() > 1e-12)
                        throw ValidationError("LoopConnection: sample not in so(n)");
                    break;
                case MatrixAlgebra::U:
                    if ((A + A.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
                        throw ValidationError("LoopConnection: sample not in u(n)");
                    break;
                case MatrixAlgebra::GL: break;
            }
        }
    }

    LoopConnection scaled(double s) const {
        LoopConnection c = *this;
        for (Mat& A : c.samples) A *= s;
        return c;
    }
};

struct Monodromy {
    Mat hol;
    MatrixAlgebra algebra = MatrixAlgebra::GL;
    int steps = 0;
    int order = 4;
};

namespace detail {

// 4-point Lagrange interpolation at parameter c in (0,1) past sample k on
// the periodic grid (nodes k-1, k, k+1, k+2).
template <class Sampler>
Mat lagrange4(const Sampler& at, int K, int k, double c) {
    const double w0 = -c * (c - 1.0) * (c - 2.0) / 6.0;
    const double w1 = (c + 1.0) * (c - 1.0) * (c - 2.0) / 2.0;
    const double w2 = -(c + 1.0) * c * (c - 2.0) / 2.0;
    const double w3 = (c + 1.0) * c * (c - 1.0) / 6.0;
    auto idx = [&](int i) { return ((i % K) + K) % K; };
    return w0 * at(idx(k - 1)) + w1 * at(idx(k)) + w2 * at(idx(k + 1)) + w3 * at(idx(k + 2));
}

// Commutator-free 4th-order Magnus over [0,1] with K steps; A given by an
// interpolating callable t -> Mat. Each step multiplies
//   exp(h(b A1 + a A2)) exp(h(a A1 + b A2)),  a = 1/4 + sqrt(3)/6, b = 1/4 - sqrt(3)/6,
// where A1, A2 sit at the Gauss nodes of the step.
template <class AFun>
Mat cf4_transport(const AFun& A, int K, int dim) {
    const double rt3 = std::sqrt(3.0);
    const double c1 = 0.5 - rt3 / 6.0, c2 = 0.5 + rt3 / 6.0;
    const double a = 0.25 + rt3 / 6.0, b = 0.25 - rt3 / 6.0;
    const double h = 1.0 / K;
    Mat psi = Mat::Identity(dim, dim);
    for (int k = 0; k < K; ++k) {
        Mat A1 = A((k + c1) * h);
        Mat A2 = A((k + c2) * h);
        Mat E1 = (h * (a * A1 + b * A2)).exp();
        Mat E2 = (h * (b * A1 + a * A2)).exp();
        psi = E2 * (E1 * psi);
    }
    return psi;
}

}  // namespace detail

// Interpolated evaluation of the connection at arbitrary t (period 1).
inline Mat connection_at(const LoopConnection& conn, double t) {
    const int K = conn.K();
    double u = (t - std::floor(t)) * K;
    int k = static_cast<int>(std::floor(u));
    if (k >= K) k = 0;
    double c = u - k;
    return detail::lagrange4([&](int i) -> const Mat& { return conn.samples[i]; }, K, k, c);
}

// Solve psi' = A(t) psi, psi(0) = I; returns psi(1).
inline Monodromy parallel_transport(const LoopConnection& conn) {
    conn.validate();
    Mat hol = detail::cf4_transport([&](double t) { return connection_at(conn, t); }, conn.K(), conn.n);
    return Monodromy{hol, conn.algebra, conn.K(), 4};
}

struct FloquetResult {
    Mat K0;           // principal logarithm of the monodromy
    double residual;  // ||exp(K0) - hol||_max
};

// Constant connection gauge-equivalent to the loop: eigenvalue-wise
// principal log of the monodromy rotated back through the eigenbasis.
inline FloquetResult floquet_reduce_monodromy(const Mat& hol) {
    Eigen::ComplexEigenSolver<Mat> es(hol);
    if (es.info() != Eigen::Success) throw DefectiveMonodromy("floquet: eigensolver failed");
    const Mat& V = es.eigenvectors();
    Eigen::JacobiSVD<Mat> svd(V);
    double cond = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    if (!(cond < 1e8)) throw DefectiveMonodromy("floquet: monodromy too close to defective");
    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::VectorXcd loglam(lam.size());
    for (int i = 0; i < lam.size(); ++i) loglam(i) = std::log(lam(i));  // principal branch
    Mat K0 = V * loglam.asDiagonal() * V.inverse();
    double residual = (K0.exp() - hol).cwiseAbs().maxCoeff();
    return {K0, residual};
}

inline FloquetResult floquet_reduce(const LoopConnection& conn) {
    return floquet_reduce_monodromy(parallel_transport(conn).hol);
}

namespace detail {

// Rotation angles of a special orthogonal matrix folded to [0, pi], one per
// conjugate eigenvalue pair. Degenerate +-1 clusters are resolved by a tiny
// random conjugation retry.
inline std::vector<double> so_angles(const Mat& hol, int retry = 0) {
    const int n2 = static_cast<int>(hol.rows());
    Eigen::ComplexEigenSolver<Mat> es(hol, false);
    std::vector<double> args;
    for (int i = 0; i < n2; ++i) args.push_back(std::arg(es.eigenvalues()(i)));
    std::sort(args.begin(), args.end());
    // pair each positive angle with its negative partner; zeros and pis pair
    // among themselves
    std::vector<double> pos, zeros, pis;
    const double tol = 1e-7;
    for (double a : args) {
        if (std::abs(a) < tol)
            zeros.push_back(0.0);
        else if (std::abs(std::abs(a) - kPi) < tol)
            pis.push_back(kPi);
        else if (a > 0)
            pos.push_back(a);
    }
    std::vector<double> out = pos;
    for (std::size_t i = 0; i + 1 < zeros.size(); i += 2) out.push_back(0.0);
    for (std::size_t i = 0; i + 1 < pis.size(); i += 2) out.push_back(kPi);
    if (static_cast<int>(out.size()) != n2 / 2) {
        if (retry >= 3) throw NotSpecialOrthogonal("so_angles: could not pair eigenvalues");
        // perturb by a 1e-10 rotation and retry
        Mat G = Mat::Zero(n2, n2);
        for (int i = 0; i + 1 < n2; i += 2) {
            G(i, i + 1) = 1e-10 * (1.0 + retry);
            G(i + 1, i) = -1e-10 * (1.0 + retry);
        }
        Mat R = G.exp();
        return so_angles(R * hol * R.transpose(), retry + 1);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline void require_special_orthogonal(const Mat& m) {
    const int n = static_cast<int>(m.rows());
    if (n % 2 != 0) throw NotSpecialOrthogonal("expected SO(2n) matrix");
    if ((m * m.transpose() - Mat::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-8)
        throw NotSpecialOrthogonal("matrix is not orthogonal");
    if (std::abs(m.determinant() - Complex(1.0, 0.0)) > 1e-8)
        throw NotSpecialOrthogonal("matrix has determinant != 1");
}

// Continuation of folded angle sets along a parameter: each tracked angle
// is lifted to the real line, choosing +-theta + 2 pi m nearest to the
// linearly predicted value (prediction handles the reflection of folded
// paths at 0 and pi).
inline std::vector<double> continue_lifts(const std::vector<double>& prev,
                                          const std::vector<double>& velocity,
                                          const std::vector<double>& folded) {
    std::vector<double> lifts(prev.size());
    std::vector<bool> used(folded.size(), false);
    auto best_candidate = [&](double p, double th) {
        double best = 1e300;
        for (double s : {th, -th}) {
            double m = std::round((p - s) / (2.0 * kPi));
            double cand = s + 2.0 * kPi * m;
            if (std::abs(cand - p) < std::abs(best - p)) best = cand;
        }
        return best;
    };
    std::vector<std::size_t> order(prev.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto predicted = [&](std::size_t i) { return prev[i] + velocity[i]; };
    std::sort(order.begin(), order.end(), [&](std::size_t A, std::size_t B) {
        double dA = 1e300, dB = 1e300;
        for (std::size_t j = 0; j < folded.size(); ++j) {
            dA = std::min(dA, std::abs(best_candidate(predicted(A), folded[j]) - predicted(A)));
            dB = std::min(dB, std::abs(best_candidate(predicted(B), folded[j]) - predicted(B)));
        }
        return dA < dB;
    });
    for (std::size_t oi : order) {
        double p = predicted(oi);
        double best = 1e300;
        std::size_t bj = 0;
        for (std::size_t j = 0; j < folded.size(); ++j) {
            if (used[j]) continue;
            double cand = best_candidate(p, folded[j]);
            if (std::abs(cand - p) < std::abs(best - p)) { best = cand; bj = j; }
        }
        used[bj] = true;
        lifts[oi] = best;
    }
    return lifts;
}

}  // namespace detail

// Supertrace of the holonomy in the Z_2-graded spinor module of SO(2n):
// prod_j (e^{i theta_j/2} - e^{-i theta_j/2}) with angles folded to [0, pi]
// (the identity-connected branch; sign continuation along a family is the
// caller's concern, see aw_check).
inline Complex spin_supertrace(const Monodromy& m) {
    detail::require_special_orthogonal(m.hol);
    Complex p(1.0, 0.0);
    for (double th : detail::so_angles(m.hol)) p *= 2.0 * kI * std::sin(th / 2.0);
    return p;
}

// Zeta-regularized Pfaffian of the covariant derivative along the loop:
// Floquet angles 2 pi a_j with a_j in (-1/2, 1/2], one factor 2i sin(pi a_j)
// per conjugate pair (the zeta value of prod_{m in Z} (a + m)).
inline Complex zeta_pfaffian_circle(const LoopConnection& conn) {
    if (conn.algebra != MatrixAlgebra::SO || conn.n % 2 != 0)
        throw NotSpecialOrthogonal("zeta_pfaffian_circle: need an so(2n) loop");
    FloquetResult f = floquet_reduce(conn);
    // K0 is conjugate-skew; its eigenvalues come in pairs +-2 pi i a.
    Eigen::ComplexEigenSolver<Mat> es(f.K0, false);
    std::vector<double> a;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        double ai = es.eigenvalues()(i).imag() / (2.0 * kPi);
        if (ai > 1e-12) a.push_back(ai);
    }
    // zero angles: pairs of (numerically) zero eigenvalues
    int zeros = conn.n / 2 - static_cast<int>(a.size());
    Complex p(1.0, 0.0);
    for (double ai : a) p *= 2.0 * kI * std::sin(kPi * ai);
    for (int i = 0; i < zeros; ++i) p *= 0.0;
    return p;
}

struct AwReport {
    Complex supertrace;        // Tr_s hol, sign-continued from the zero connection
    Complex zeta_pfaffian;     // pf_zeta, sign-continued from the zero connection
    double absdiff;
    double det_identity_err;   // | |Tr_s|^2 - det(I - hol) |
    std::vector<double> angles;  // final lifted angles (radians)
};

// Runs both sides of the classical Atiyah-Witten identity with the
// continuity sign convention: both angle families are lifted along
// s * conn, s = 1/8 .. 1, from the zero connection.
inline AwReport aw_check(const LoopConnection& conn, int continuation_steps = 8) {
    if (conn.algebra != MatrixAlgebra::SO || conn.n % 2 != 0)
        throw NotSpecialOrthogonal("aw_check: need an so(2n) loop");
    const int n = conn.n / 2;
    std::vector<double> lift_hol(n, 0.0), lift_pf(n, 0.0);
    std::vector<double> vel_hol(n, 0.0), vel_pf(n, 0.0);
    Mat hol_full;
    for (int s = 1; s <= continuation_steps; ++s) {
        double fac = double(s) / continuation_steps;
        Monodromy m = parallel_transport(conn.scaled(fac));
        if (s == continuation_steps) hol_full = m.hol;
        std::vector<double> folded = detail::so_angles(m.hol);
        std::vector<double> next = detail::continue_lifts(lift_hol, vel_hol, folded);
        for (int i = 0; i < n; ++i) vel_hol[i] = next[i] - lift_hol[i];
        lift_hol = next;

        FloquetResult f = floquet_reduce_monodromy(m.hol);
        Eigen::ComplexEigenSolver<Mat> es(f.K0, false);
        std::vector<double> fl;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            double th = es.eigenvalues()(i).imag();
            if (th > 1e-12) fl.push_back(th);
        }
        while (static_cast<int>(fl.size()) < n) fl.push_back(0.0);
        std::sort(fl.begin(), fl.end());
        next = detail::continue_lifts(lift_pf, vel_pf, fl);
        for (int i = 0; i < n; ++i) vel_pf[i] = next[i] - lift_pf[i];
        lift_pf = next;
    }
    Complex ts(1.0, 0.0), pf(1.0, 0.0);
    for (double th : lift_hol) ts *= 2.0 * kI * std::sin(th / 2.0);
    for (double th : lift_pf) pf *= 2.0 * kI * std::sin(th / 2.0);
    Complex det = (Mat::Identity(conn.n, conn.n) - hol_full).determinant();
    double det_err = std::abs(Complex(std::norm(ts), 0.0) - det);
    return {ts, pf, std::abs(ts - pf), det_err, lift_hol};
}

}  // namespace qloop
