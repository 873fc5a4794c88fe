#pragma once

// Formal Chern-root computations: truncated multivariate polynomial ring,
// Chern characters, q-graded Chern characters, the Witten characteristic
// series with its modular completion, Bismut-Chern iterated integrals over
// the Grassmann engine, and the energy-truncated restriction identities.

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "qloop/affine.hpp"
#include "qloop/grassmann.hpp"
#include "qloop/special.hpp"
#include "qloop/transport.hpp"

namespace qloop {

namespace detail {

// Coefficient traits for the formal ring: complex numbers or QSeries.
inline bool coef_is_zero(const Complex& c) { return c == Complex(0.0, 0.0); }
inline bool coef_is_zero(const QSeries& s) { return s.empty(); }

}  // namespace detail

// Multivariate polynomial in x_1..x_nvars with total degree > degcap killed.
// Monomials are packed 8 bits per variable (nvars <= 4).
template <class Coef>
class TruncPoly {
public:
    static constexpr int kMaxVars = 4;

    TruncPoly() = default;
    TruncPoly(int nvars, int degcap) : nvars_(nvars), degcap_(degcap) {
        if (nvars < 0 || nvars > kMaxVars) throw DimMismatch("TruncPoly: nvars out of range");
    }

    int nvars() const { return nvars_; }
    int degcap() const { return degcap_; }
    const std::map<std::uint32_t, Coef>& terms() const { return terms_; }

    static std::uint32_t mono(std::initializer_list<int> exps) {
        std::uint32_t m = 0;
        int i = 0;
        for (int e : exps) m |= (std::uint32_t(e) & 0xff) << (8 * i++);
        return m;
    }
    static int mono_exp(std::uint32_t m, int var) { return int((m >> (8 * var)) & 0xff); }
    int mono_total(std::uint32_t m) const {
        int t = 0;
        for (int v = 0; v < nvars_; ++v) t += mono_exp(m, v);
        return t;
    }

    Coef coeff(std::uint32_t m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Coef{} : it->second;
    }

    void add_term(std::uint32_t m, const Coef& c) {
        if (mono_total(m) > degcap_) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            if (!detail::coef_is_zero(c)) terms_.emplace(m, c);
        } else {
            it->second = it->second + c;
            if (detail::coef_is_zero(it->second)) terms_.erase(it);
        }
    }

    static TruncPoly constant(int nvars, int degcap, const Coef& c) {
        TruncPoly p(nvars, degcap);
        p.add_term(0, c);
        return p;
    }
    static TruncPoly variable(int nvars, int degcap, int var, const Coef& c) {
        TruncPoly p(nvars, degcap);
        p.add_term(std::uint32_t(1) << (8 * var), c);
        return p;
    }

    friend TruncPoly operator+(const TruncPoly& a, const TruncPoly& b) {
        TruncPoly r = a;
        for (const auto& [m, c] : b.terms_) r.add_term(m, c);
        return r;
    }
    friend TruncPoly operator-(const TruncPoly& a, const TruncPoly& b) {
        TruncPoly r = a;
        for (const auto& [m, c] : b.terms_) r.add_term(m, Coef{} - c);
        return r;
    }
    friend TruncPoly operator*(const TruncPoly& a, const TruncPoly& b) {
        TruncPoly r(a.nvars_, std::min(a.degcap_, b.degcap_));
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                if (r.mono_total(ma) + r.mono_total(mb) > r.degcap_) continue;
                r.add_term(ma + mb, ca * cb);
            }
        return r;
    }

    TruncPoly scaled(const Coef& c) const {
        TruncPoly r(nvars_, degcap_);
        for (const auto& [m, v] : terms_) r.add_term(m, v * c);
        return r;
    }

    // exp of an element with no constant term
    TruncPoly exp_nilpotent() const {
        if (terms_.count(0)) throw DimMismatch("exp_nilpotent: nonzero constant term");
        TruncPoly r = constant(nvars_, degcap_, unit_coef());
        TruncPoly pw = r;
        double fact = 1.0;
        for (int k = 1; k <= degcap_; ++k) {
            pw = pw * (*this);
            fact *= k;
            if (pw.terms_.empty()) break;
            r = r + pw.scaled(scalar_coef(1.0 / fact));
        }
        return r;
    }

    // multiplicative inverse of a unit (invertible constant term)
    TruncPoly invert_unit() const;

    // divide by the monomial prod x_v^{e_v}; every term must be divisible
    TruncPoly divide_monomial(std::uint32_t m) const {
        TruncPoly r(nvars_, degcap_);
        for (const auto& [mm, c] : terms_) {
            for (int v = 0; v < nvars_; ++v)
                if (mono_exp(mm, v) < mono_exp(m, v))
                    throw DimMismatch("divide_monomial: not divisible");
            r.add_term(mm - m, c);
        }
        return r;
    }

    TruncPoly truncated_to(int cap) const {
        TruncPoly r(nvars_, cap);
        for (const auto& [mm, c] : terms_) r.add_term(mm, c);
        return r;
    }

    double max_abs() const;

private:
    int nvars_ = 0;
    int degcap_ = 0;
    std::map<std::uint32_t, Coef> terms_;

    static Coef unit_coef();
    static Coef scalar_coef(double v);
};

template <>
inline Complex TruncPoly<Complex>::unit_coef() { return Complex(1.0, 0.0); }
template <>
inline Complex TruncPoly<Complex>::scalar_coef(double v) { return Complex(v, 0.0); }
template <>
inline QSeries TruncPoly<QSeries>::unit_coef() { return QSeries::constant(1.0); }
template <>
inline QSeries TruncPoly<QSeries>::scalar_coef(double v) { return QSeries::constant(Complex(v, 0.0)); }

template <>
inline double TruncPoly<Complex>::max_abs() const {
    double m = 0.0;
    for (const auto& [mm, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}
template <>
inline double TruncPoly<QSeries>::max_abs() const {
    double m = 0.0;
    for (const auto& [mm, c] : terms_) m = std::max(m, c.max_abs_coeff());
    return m;
}

template <>
inline TruncPoly<Complex> TruncPoly<Complex>::invert_unit() const {
    Complex c0 = coeff(0);
    if (detail::coef_is_zero(c0)) throw DimMismatch("invert_unit: zero constant term");
    TruncPoly n = scaled(1.0 / c0);
    TruncPoly m = n - constant(nvars_, degcap_, Complex(1.0, 0.0));
    TruncPoly r = constant(nvars_, degcap_, Complex(1.0, 0.0));
    TruncPoly pw = r;
    for (int k = 1; k <= degcap_; ++k) {
        pw = pw * m;
        if (pw.terms().empty()) break;
        r = r + pw.scaled(Complex((k % 2) ? -1.0 : 1.0, 0.0));
    }
    return r.scaled(1.0 / c0);
}

// complex evaluation of QSeries coefficients
inline TruncPoly<Complex> eval_coeffs(const TruncPoly<QSeries>& p, const QPoint& pt) {
    TruncPoly<Complex> r(p.nvars(), p.degcap());
    for (const auto& [m, s] : p.terms()) r.add_term(m, s.eval(pt));
    return r;
}

// ---------------------------------------------------------------------------
// Chern characters.
// ---------------------------------------------------------------------------

// ch = sum_mu m_mu exp(mu(x)), the classical Chern character of a weight list.
inline TruncPoly<Complex> chern_character(const std::vector<WeightLine>& weights, int nvars, int degcap) {
    TruncPoly<Complex> r(nvars, degcap);
    for (const WeightLine& w : weights) {
        TruncPoly<Complex> lin(nvars, degcap);
        for (int v = 0; v < nvars && v < static_cast<int>(w.mu.size()); ++v)
            if (w.mu[v] != 0)
                lin = lin + TruncPoly<Complex>::variable(nvars, degcap, v, Complex(double(w.mu[v]), 0.0));
        r = r + lin.exp_nilpotent().scaled(Complex(double(w.mult), 0.0));
    }
    return r;
}

namespace detail {

// Formal exponential exp(c x_var) as a TruncPoly with QSeries coefficients.
inline TruncPoly<QSeries> formal_exp(int nvars, int degcap, int var, Complex c) {
    TruncPoly<QSeries> r(nvars, degcap);
    double fact = 1.0;
    Complex pw(1.0, 0.0);
    for (int k = 0; k <= degcap; ++k) {
        if (k > 0) { fact *= k; pw *= c; }
        std::uint32_t m = std::uint32_t(k) << (8 * var);
        r.add_term(m, QSeries::constant(pw / fact));
    }
    return r;
}

// One theta_ij(x_var, tau)/eta factor as a q-series with polynomial
// coefficients in the formal variable, from the product form with
// w = exp(2 pi i x).
inline TruncPoly<QSeries> theta_over_eta_formal(int i, int j, int nvars, int degcap, int var, Rational T) {
    double sgn = (j == 0) ? 1.0 : -1.0;
    Rational offset = (i == 0) ? Rational(-1, 24) : Rational(1, 12);
    Rational Tprod = T - offset;
    auto truncate_q = [&](TruncPoly<QSeries>& p) {
        TruncPoly<QSeries> r(nvars, degcap);
        for (const auto& [m, s] : p.terms()) r.add_term(m, s.truncated(Tprod));
        p = r;
    };

    TruncPoly<QSeries> p = TruncPoly<QSeries>::constant(nvars, degcap, QSeries::constant(1.0).truncated(Tprod));
    if (i == 1) {
        TruncPoly<QSeries> lead = formal_exp(nvars, degcap, var, Complex(0.0, kPi));
        TruncPoly<QSeries> leadm = formal_exp(nvars, degcap, var, Complex(0.0, -kPi));
        p = p * ((j == 0) ? lead + leadm : lead - leadm);
        truncate_q(p);
    }
    TruncPoly<QSeries> wplus = formal_exp(nvars, degcap, var, Complex(0.0, 2.0 * kPi));
    TruncPoly<QSeries> wminus = formal_exp(nvars, degcap, var, Complex(0.0, -2.0 * kPi));
    for (int n = 1; Rational(i == 0 ? 2 * n - 1 : 2 * n, 2) < Tprod; ++n) {
        Rational e = (i == 0) ? Rational(2 * n - 1, 2) : Rational(n);
        QSeries qe = QSeries::monomial(e, sgn);
        TruncPoly<QSeries> one = TruncPoly<QSeries>::constant(nvars, degcap, QSeries::constant(1.0));
        TruncPoly<QSeries> f1 = one + wplus.scaled(qe);
        TruncPoly<QSeries> f2 = one + wminus.scaled(qe);
        p = p * f1;
        truncate_q(p);
        p = p * f2;
        truncate_q(p);
    }
    // apply the fractional offset
    TruncPoly<QSeries> r(nvars, degcap);
    for (const auto& [m, s] : p.terms()) r.add_term(m, s.shifted(offset).truncated(T));
    return r;
}

}  // namespace detail

// q-graded (modified) character with formal Chern roots: the x_j enter the
// theta factors directly, prod_j theta_ij(x_j, tau)/eta as a q-series with
// polynomial coefficients. At x = 0 this is char_qexpansion.
inline TruncPoly<QSeries> q_graded_chern(LevelOneRep rep, int l, int degcap, Rational T) {
    if (T <= Rational(0)) throw TruncationTooSmall("q_graded_chern: T must be positive");
    if (l < 1 || l > TruncPoly<QSeries>::kMaxVars) throw InvalidRank("q_graded_chern: 1 <= l <= 4");
    TruncPoly<QSeries> r =
        TruncPoly<QSeries>::constant(l, degcap, QSeries::constant(1.0).truncated(T));
    for (int v = 0; v < l; ++v)
        r = r * detail::theta_over_eta_formal(rep_i(rep), rep_j(rep), l, degcap, v, T);
    return r;
}

// Witten characteristic series, one root: x theta_11'(0)/theta_11(x, tau) as
// an even series with constant term 1; the recorded normalization constant
// theta_11'(0)/eta^3 = 2 pi i is exposed separately.
inline std::vector<Complex> witten_root_series(Complex tau, int degcap) {
    auto d = theta11_z_derivs_at0(tau, degcap + 1);
    // theta_11(x)/ (x theta'(0)) = 1 + sum_{m>=1} (d_{2m+1}/d_1) x^{2m}/(2m+1)!
    std::vector<Complex> u(degcap + 1, Complex(0.0, 0.0));
    u[0] = 1.0;
    double fact = 1.0;
    for (int m = 1; 2 * m <= degcap; ++m) {
        fact *= (2.0 * m) * (2.0 * m + 1.0);
        u[2 * m] = d[2 * m + 1] / d[1] / fact;
    }
    // invert the unit power series
    std::vector<Complex> w(degcap + 1, Complex(0.0, 0.0));
    w[0] = 1.0;
    for (int k = 1; k <= degcap; ++k) {
        Complex s(0.0, 0.0);
        for (int j = 1; j <= k; ++j) s += u[j] * w[k - j];
        w[k] = -s;
    }
    return w;
}

inline Complex witten_normalization(Complex tau) {
    return theta11_z_derivs_at0(tau, 1)[1] / eta_pow(tau, 3);
}

inline TruncPoly<Complex> witten_series(int nroots, Complex tau, int degcap) {
    auto w = witten_root_series(tau, degcap);
    TruncPoly<Complex> r = TruncPoly<Complex>::constant(nroots, degcap, Complex(1.0, 0.0));
    for (int v = 0; v < nroots; ++v) {
        TruncPoly<Complex> f(nroots, degcap);
        for (int k = 0; k <= degcap; ++k)
            if (w[k] != Complex(0.0, 0.0)) f.add_term(std::uint32_t(k) << (8 * v), w[k]);
        r = r * f;
    }
    return r;
}

// A-hat series prod (x/2)/sinh(x/2) per root (e^x-eigenvalue convention).
inline TruncPoly<Complex> a_hat_series(int nroots, int degcap) {
    // sinh(x/2)/(x/2) = sum x^{2m} / (4^m (2m+1)!)
    std::vector<Complex> u(degcap + 1, Complex(0.0, 0.0));
    u[0] = 1.0;
    double fourm = 1.0, fact = 1.0;
    for (int m = 1; 2 * m <= degcap; ++m) {
        fourm *= 4.0;
        fact *= (2.0 * m) * (2.0 * m + 1.0);
        u[2 * m] = 1.0 / (fourm * fact);
    }
    std::vector<Complex> w(degcap + 1, Complex(0.0, 0.0));
    w[0] = 1.0;
    for (int k = 1; k <= degcap; ++k) {
        Complex s(0.0, 0.0);
        for (int j = 1; j <= k; ++j) s += u[j] * w[k - j];
        w[k] = -s;
    }
    TruncPoly<Complex> r = TruncPoly<Complex>::constant(nroots, degcap, Complex(1.0, 0.0));
    for (int v = 0; v < nroots; ++v) {
        TruncPoly<Complex> f(nroots, degcap);
        for (int k = 0; k <= degcap; ++k)
            if (w[k] != Complex(0.0, 0.0)) f.add_term(std::uint32_t(k) << (8 * v), w[k]);
        r = r * f;
    }
    return r;
}

// Witten-genus localization identity: the q-resummed route
//   C^l prod x_j / [ q^m qCh(S11)(x) / eta^{2l} ],  C = theta_11'(0)/eta^3,
// must match the direct expansion route witten_series. eta_power_shift != 0
// is the negative control. Returns the max coefficient deviation.
inline double localization_identity_check(int l, Complex tau, int degcap, Rational T,
                                          int eta_power_shift = 0) {
    if (l < 1 || l > 3) throw InvalidRank("localization_identity_check: 1 <= l <= 3");
    // build the q-resummed route with headroom: dividing by prod x_j costs
    // one degree per variable
    const int cap = degcap + l;
    TruncPoly<QSeries> qch = q_graded_chern(LevelOneRep::S11, l, cap, T);
    QPoint pt(tau);
    TruncPoly<Complex> P = eval_coeffs(qch, pt);
    // the anomaly power q^{l/12} of the display is already inside the
    // product-form expansion; only the eta powers remain
    P = P.scaled(1.0 / eta_pow(tau, 2 * l + eta_power_shift));
    std::uint32_t xprod = 0;
    for (int v = 0; v < l; ++v) xprod |= std::uint32_t(1) << (8 * v);
    TruncPoly<Complex> lhs = P.divide_monomial(xprod).truncated_to(degcap).invert_unit();
    Complex C = witten_normalization(tau);
    Complex Cl(1.0, 0.0);
    for (int v = 0; v < l; ++v) Cl *= C;
    lhs = lhs.scaled(Cl);
    TruncPoly<Complex> rhs = witten_series(l, tau, degcap);
    return (lhs - rhs).max_abs();
}

// ---------------------------------------------------------------------------
// Bismut-Chern iterated integrals over the Grassmann engine.
// ---------------------------------------------------------------------------

struct BChInput {
    LoopConnection conn;               // degree-0 part iota_K A-hat
    std::vector<GrassMat> curvature;   // per-sample even elements (may be empty)
    std::vector<GrassMat> bfield;      // empty, 1 (constant), or K entries; central
    ExtAlgebra algebra{0};
    void validate() const {
        conn.validate();
        const int K = conn.K();
        if (!curvature.empty() && static_cast<int>(curvature.size()) != K)
            throw ValidationError("BChInput: curvature must have one sample per connection sample");
        auto check_elem = [&](const GrassMat& g, const char* what) {
            if (!(g.algebra == algebra)) throw AlgebraMismatch(std::string("BChInput: ") + what);
            if (g.dim != conn.n) throw DimMismatch(std::string("BChInput: ") + what + " dimension");
        };
        for (const auto& g : curvature) check_elem(g, "curvature algebra");
        if (!(bfield.empty() || bfield.size() == 1 || static_cast<int>(bfield.size()) == K))
            throw ValidationError("BChInput: bfield must have 0, 1 or K samples");
        for (const auto& g : bfield) {
            check_elem(g, "bfield algebra");
            for (const auto& [mask, mat] : g.coeffs) {
                Mat dev = mat - mat(0, 0) * Mat::Identity(g.dim, g.dim);
                if (dev.cwiseAbs().maxCoeff() > 1e-12)
                    throw ValidationError("BChInput: bfield coefficients must be scalar");
            }
        }
    }
};

namespace detail {

// Assemble the full generator A(t) + R(t) + B(t) as a GrassMat at sample k.
inline GrassMat bch_generator_sample(const BChInput& in, int k) {
    GrassMat g(in.algebra, in.conn.n);
    g.coeffs[0] = in.conn.samples[k];
    if (!in.curvature.empty())
        for (const auto& [mask, mat] : in.curvature[k].coeffs) g.add(mask, mat);
    if (!in.bfield.empty()) {
        const GrassMat& b = in.bfield.size() == 1 ? in.bfield[0] : in.bfield[k];
        for (const auto& [mask, mat] : b.coeffs) g.add(mask, mat);
    }
    return g;
}

}  // namespace detail

// Transport of the Grassmann-matrix ODE psi' = (A + R + B) psi via the same
// CF4 stepper, run in the left-regular representation on the union-closed
// subset basis. Returns psi(1).
inline GrassMat bismut_chern_transport(const BChInput& input) {
    input.validate();
    const int K = input.conn.K();
    const int d = input.conn.n;
    // union-closure over all samples
    std::vector<GrassMat> gens(K);
    std::vector<const GrassMat*> ptrs;
    for (int k = 0; k < K; ++k) {
        gens[k] = detail::bch_generator_sample(input, k);
        ptrs.push_back(&gens[k]);
    }
    auto basis = detail::reachable_subsets(ptrs);
    std::vector<Mat> reg(K);
    for (int k = 0; k < K; ++k) reg[k] = detail::left_regular(gens[k], basis);
    const int bigdim = static_cast<int>(reg[0].rows());
    auto A = [&](double t) {
        double u = (t - std::floor(t)) * K;
        int k = static_cast<int>(std::floor(u));
        if (k >= K) k = 0;
        return detail::lagrange4([&](int i) -> const Mat& { return reg[i]; }, K, k, u - k);
    };
    Mat psi = detail::cf4_transport(A, K, bigdim);
    return detail::from_regular_column(psi, basis, input.algebra, d);
}

// Bismut-Chern value: trace (or supertrace against a grading) of psi(1).
inline GrassScalar bismut_chern(const BChInput& input, const Mat* grading = nullptr) {
    GrassMat psi = bismut_chern_transport(input);
    return grading ? g_str(psi, *grading) : g_trace(psi);
}

// Sum over energy levels with a rational exponent shift:
// sum_n q^{n + shift} BCh(input_n).
inline std::map<std::uint32_t, QSeries> q_graded_bismut_chern(
    const std::vector<std::pair<int, BChInput>>& levels, Rational shift, Rational T) {
    std::map<std::uint32_t, QSeries> out;
    for (const auto& [n, input] : levels) {
        GrassScalar v = bismut_chern(input);
        for (const auto& [mask, c] : v) {
            auto it = out.find(mask);
            if (it == out.end()) it = out.emplace(mask, QSeries::zero_truncated(T)).first;
            it->second.add_term(Rational(n) + shift, c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energy-truncated restriction identity (y-constant loops reduce to the
// exponential). The representation model is the tag's free-fermion Fock
// space truncated at energy N, with d acting as 2 pi i n, the Cartan through
// weights, and a Cartan-valued even curvature acting diagonally.
// ---------------------------------------------------------------------------

// Cartan-valued even element: subset -> l coefficients.
using CartanTwoForm = std::map<std::uint32_t, std::vector<Complex>>;

struct EchReport {
    GrassScalar transported;   // path (a): CF4 on the truncated model
    GrassScalar direct;        // path (b): per-state closed-form exponential
    double deviation;          // max coefficient difference
};

namespace detail {

// Grassmann exponential of a scalar-coefficient even element (terminating).
inline GrassScalar gexp_scalar(const GrassScalar& x, int gens) {
    GrassScalar r;
    r[0] = 1.0;
    GrassScalar pw = r;
    double fact = 1.0;
    for (int k = 1; k <= gens; ++k) {
        GrassScalar next;
        for (const auto& [ka, va] : pw)
            for (const auto& [kb, vb] : x) {
                if (ka & kb) continue;
                double s = ExtAlgebra::sign(ka, kb);
                next[ka | kb] += s * va * vb;
            }
        pw = std::move(next);
        fact *= k;
        bool any = false;
        for (const auto& [k2, v] : pw)
            if (std::abs(v) > 0) { any = true; r[k2] += v / fact; }
        if (!any) break;
    }
    return r;
}

}  // namespace detail

inline EchReport ech_restriction_check(LevelOneRep rep, const CartanPoint& z, Complex tau,
                                       const CartanTwoForm& rconst, int gens, int N, int K = 64) {
    const int l = static_cast<int>(z.size());
    detail::require_upper(tau, "ech_restriction_check");
    auto states = fock_states(rep, l, N);
    const int dim = static_cast<int>(states.size());
    ExtAlgebra alg(gens);

    // Path (a): constant generator through the iterated-integral engine.
    GrassMat gen(alg, dim);
    Mat diag = Mat::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) {
        Complex wz(0.0, 0.0);
        for (int c = 0; c < l; ++c) wz += states[s].weight[c].value() * z[c];
        diag(s, s) = Complex(0.0, 2.0 * kPi) * (tau * states[s].energy.value() + wz);
    }
    gen.coeffs[0] = diag;
    for (const auto& [mask, coefs] : rconst) {
        Mat rm = Mat::Zero(dim, dim);
        for (int s = 0; s < dim; ++s) {
            Complex v(0.0, 0.0);
            for (int c = 0; c < l && c < static_cast<int>(coefs.size()); ++c)
                v += states[s].weight[c].value() * coefs[c];
            rm(s, s) = v;
        }
        gen.add(mask, rm);
    }
    BChInput input;
    input.algebra = alg;
    input.conn.n = dim;
    input.conn.algebra = MatrixAlgebra::GL;
    input.conn.samples.assign(K, diag);
    input.curvature.assign(K, [&] {
        GrassMat r(alg, dim);
        for (const auto& [mask, coefs] : gen.coeffs)
            if (mask) r.coeffs[mask] = coefs;
        return r;
    }());
    Mat grading = Mat::Zero(dim, dim);
    for (int s = 0; s < dim; ++s) grading(s, s) = double(states[s].sign);
    GrassScalar path_a = bismut_chern(input, &grading);

    // Path (b): per-state closed form, q^{E} e^{2 pi i mu(z)} gexp(mu(R)).
    GrassScalar path_b;
    for (int s = 0; s < dim; ++s) {
        Complex wz(0.0, 0.0);
        for (int c = 0; c < l; ++c) wz += states[s].weight[c].value() * z[c];
        Complex amp = double(states[s].sign) *
                      std::exp(Complex(0.0, 2.0 * kPi) * (tau * states[s].energy.value() + wz));
        GrassScalar rx;
        for (const auto& [mask, coefs] : rconst) {
            Complex v(0.0, 0.0);
            for (int c = 0; c < l && c < static_cast<int>(coefs.size()); ++c)
                v += states[s].weight[c].value() * coefs[c];
            if (v != Complex(0.0, 0.0)) rx[mask] = v;
        }
        for (const auto& [mask, v] : detail::gexp_scalar(rx, gens)) path_b[mask] += amp * v;
    }

    double dev = 0.0;
    for (const auto& [mask, v] : path_a) {
        auto it = path_b.find(mask);
        Complex w = (it == path_b.end()) ? Complex(0.0, 0.0) : it->second;
        dev = std::max(dev, std::abs(v - w));
    }
    for (const auto& [mask, v] : path_b)
        if (!path_a.count(mask)) dev = std::max(dev, std::abs(v));
    return {path_a, path_b, dev};
}

}  // namespace qloop
