#pragma once

// Finite exterior algebra with square-matrix coefficients: the desk-scale
// model of differential forms along a loop. Basis elements are subsets of
// {0..g-1} encoded as bitmasks; products obey the Koszul sign rule
// e_S e_T = sign(S,T) e_{S u T} for disjoint S, T.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <set>
#include <vector>
#include <unsupported/Eigen/MatrixFunctions>

#include "qloop/errors.hpp"
#include "qloop/qseries.hpp"

namespace qloop {

using Mat = Eigen::MatrixXcd;

struct ExtAlgebra {
    int g = 0;

    explicit ExtAlgebra(int gens) : g(gens) {
        if (gens < 0 || gens > 16) throw DimMismatch("ExtAlgebra: need 0 <= g <= 16");
    }

    // (-1)^{#inversions between S and T}; caller guarantees S & T == 0.
    static int sign(std::uint32_t S, std::uint32_t T) {
        int inv = 0;
        for (std::uint32_t t = T; t; t &= t - 1) {
            int bit = __builtin_ctz(t);
            inv += __builtin_popcount(S >> (bit + 1));
        }
        return (inv % 2) ? -1 : 1;
    }

    static int parity(std::uint32_t S) { return __builtin_popcount(S) % 2; }
};

inline bool operator==(const ExtAlgebra& a, const ExtAlgebra& b) { return a.g == b.g; }

// Coefficient map of an exterior-algebra element over d x d complex matrices.
struct GrassMat {
    ExtAlgebra algebra{0};
    int dim = 0;
    std::map<std::uint32_t, Mat> coeffs;

    GrassMat() = default;
    GrassMat(ExtAlgebra alg, int d) : algebra(alg), dim(d) {}

    static GrassMat identity(ExtAlgebra alg, int d) {
        GrassMat m(alg, d);
        m.coeffs[0] = Mat::Identity(d, d);
        return m;
    }

    const Mat* find(std::uint32_t mask) const {
        auto it = coeffs.find(mask);
        return it == coeffs.end() ? nullptr : &it->second;
    }

    void add(std::uint32_t mask, const Mat& m) {
        if (m.rows() != dim || m.cols() != dim) throw DimMismatch("GrassMat: coefficient size");
        auto it = coeffs.find(mask);
        if (it == coeffs.end())
            coeffs.emplace(mask, m);
        else
            it->second += m;
    }

    void prune(double tol = 0.0) {
        for (auto it = coeffs.begin(); it != coeffs.end();) {
            if (it->second.cwiseAbs().maxCoeff() <= tol)
                it = coeffs.erase(it);
            else
                ++it;
        }
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& [k, v] : coeffs) m = std::max(m, v.cwiseAbs().maxCoeff());
        return m;
    }
};

inline void check_compatible(const GrassMat& a, const GrassMat& b) {
    if (!(a.algebra == b.algebra)) throw AlgebraMismatch("GrassMat: generator count mismatch");
    if (a.dim != b.dim) throw DimMismatch("GrassMat: matrix dimension mismatch");
}

inline GrassMat g_add(const GrassMat& a, const GrassMat& b) {
    check_compatible(a, b);
    GrassMat r = a;
    for (const auto& [k, v] : b.coeffs) r.add(k, v);
    return r;
}

inline GrassMat g_scale(Complex c, const GrassMat& a) {
    GrassMat r(a.algebra, a.dim);
    for (const auto& [k, v] : a.coeffs) r.coeffs.emplace(k, c * v);
    return r;
}

inline GrassMat g_mul(const GrassMat& a, const GrassMat& b) {
    check_compatible(a, b);
    GrassMat r(a.algebra, a.dim);
    for (const auto& [ka, va] : a.coeffs)
        for (const auto& [kb, vb] : b.coeffs) {
            if (ka & kb) continue;
            double s = ExtAlgebra::sign(ka, kb);
            r.add(ka | kb, s * (va * vb));
        }
    return r;
}

// Scalar-valued exterior element (e.g. a supertrace).
using GrassScalar = std::map<std::uint32_t, Complex>;

// Coefficientwise (super)trace, tr(grading * coeff) per subset.
inline GrassScalar g_str(const GrassMat& a, const Mat& grading) {
    if (grading.rows() != a.dim || grading.cols() != a.dim)
        throw DimMismatch("g_str: grading size mismatch");
    if (((grading * grading) - Mat::Identity(a.dim, a.dim)).cwiseAbs().maxCoeff() > 1e-12)
        throw DimMismatch("g_str: grading must square to the identity");
    GrassScalar out;
    for (const auto& [k, v] : a.coeffs) {
        Complex t = (grading * v).trace();
        if (t != Complex(0.0, 0.0)) out[k] = t;
    }
    return out;
}

inline GrassScalar g_trace(const GrassMat& a) {
    GrassScalar out;
    for (const auto& [k, v] : a.coeffs) {
        Complex t = v.trace();
        if (t != Complex(0.0, 0.0)) out[k] = t;
    }
    return out;
}

namespace detail {

// Union closure of the supports of a set of elements: the subset lattice the
// left-regular representation acts on. Always contains the empty set.
inline std::vector<std::uint32_t> reachable_subsets(const std::vector<const GrassMat*>& elems) {
    std::set<std::uint32_t> reach = {0u};
    bool grew = true;
    std::vector<std::uint32_t> supports;
    for (const auto* e : elems)
        for (const auto& [k, v] : e->coeffs)
            if (k) supports.push_back(k);
    while (grew) {
        grew = false;
        std::vector<std::uint32_t> cur(reach.begin(), reach.end());
        for (std::uint32_t s : cur)
            for (std::uint32_t t : supports)
                if (!(s & t) && reach.insert(s | t).second) grew = true;
    }
    return std::vector<std::uint32_t>(reach.begin(), reach.end());
}

// Matrix of left multiplication by x on span{ e_S : S in basis } (x) C^d.
inline Mat left_regular(const GrassMat& x, const std::vector<std::uint32_t>& basis) {
    const int d = x.dim;
    const int R = static_cast<int>(basis.size());
    std::map<std::uint32_t, int> index;
    for (int i = 0; i < R; ++i) index[basis[i]] = i;
    Mat M = Mat::Zero(R * d, R * d);
    for (int col = 0; col < R; ++col) {
        std::uint32_t S = basis[col];
        for (const auto& [T, v] : x.coeffs) {
            if (T & S) continue;
            auto it = index.find(T | S);
            if (it == index.end()) throw DimMismatch("left_regular: basis not closed");
            double sgn = ExtAlgebra::sign(T, S);
            M.block(it->second * d, col * d, d, d) += sgn * v;
        }
    }
    return M;
}

// Read an algebra element back off the regular representation: coefficients
// are the column block over the empty subset.
inline GrassMat from_regular_column(const Mat& M, const std::vector<std::uint32_t>& basis,
                                    ExtAlgebra alg, int d) {
    GrassMat r(alg, d);
    int col0 = -1;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i)
        if (basis[i] == 0u) col0 = i;
    for (int i = 0; i < static_cast<int>(basis.size()); ++i) {
        Mat blk = M.block(i * d, col0 * d, d, d);
        if (blk.cwiseAbs().maxCoeff() > 0.0) r.coeffs[basis[i]] = blk;
    }
    return r;
}

}  // namespace detail

// Exponential of a GrassMat. The degree-0 block may be arbitrary; all higher
// parts are nilpotent, so exp is exact as the matrix exponential of the
// left-regular representation on the (finite) union-closed subset basis.
inline GrassMat g_exp(const GrassMat& a) {
    auto basis = detail::reachable_subsets({&a});
    Mat M = detail::left_regular(a, basis);
    Mat E = M.exp();
    return detail::from_regular_column(E, basis, a.algebra, a.dim);
}

}  // namespace qloop
