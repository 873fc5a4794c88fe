#pragma once

// Jacobi theta functions with characteristics, Dedekind eta, normalized
// Eisenstein series, heat-operator residuals and modular transformation
// checks.
//
// Conventions pinned here (everything downstream relies on them):
//  * q = e^{2 pi i tau}. Fractional powers of q derived from a known tau use
//    log q := 2 pi i tau, so T-covariance (tau -> tau+1) produces the
//    expected phases. This agrees with the principal branch whenever
//    |Re tau| <= 1/2.
//  * theta[a,b](z,tau) = sum_n exp(pi i (n+a)^2 tau + 2 pi i (n+a)(z+b)) is
//    the general characteristics sum (theta_char_sum).
//  * The four standard theta_ij use the triple-product normalization: for
//    (i,j) != (1,1) this equals the characteristics sum; theta_11 is
//    normalized so that the product expansion
//      theta_11 = q^{1/8}(e^{xi/2}-e^{-xi/2}) prod (1-q^n)(1-q^n e^xi)(1-q^n e^-xi)
//    holds with no extra phase (this is -i times the raw (1/2,1/2) sum).
//    With this choice q^{-1/12} theta_11(z)/eta -> e^{pi i z}-e^{-pi i z}
//    = 2i sin(pi z) as q -> 0, and theta_11'(0) = 2 pi i eta^3.
//  * G_k(tau) = (k-1)!/(2 (2 pi i)^k) E_k(tau) = -B_k/(2k) + sum sigma_{k-1}(n) q^n.
//    For this normalization the true laws are
//      G_2(-1/tau) = tau^2 G_2(tau) - tau/(4 pi i),
//      Ghat_2 = G_2 + 1/(8 pi Im tau)   (weight-2 covariant),
//      (log eta)' = -2 pi i G_2,
//    and e^{4 pi^2 G_2 z^2} z eta^3 / theta_11 is SL_2(Z)-invariant.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "qloop/errors.hpp"
#include "qloop/qseries.hpp"

namespace qloop {

struct ThetaChar {
    double a = 0.0;
    double b = 0.0;
};

// Spin structure on the torus as a pair of bits; (1,1) is the odd one.
struct SpinStructure {
    int i = 0;
    int j = 0;
};

namespace detail {

inline void require_upper(Complex tau, const char* who) {
    if (!(tau.imag() > 0.0)) throw NonConvergent(std::string(who) + ": Im(tau) must be positive");
}

// q^r with the branch log q = 2 pi i tau.
inline Complex q_pow(Complex tau, double r) {
    return std::exp(Complex(0.0, 2.0 * kPi) * tau * r);
}

// Summation cutoff for theta series: |q|^{(N+a)^2} e^{2 pi (N+|a|) M} < 1e-17,
// with a minimum of 8 terms.
inline int theta_cutoff(Complex tau, double a, double im_z_abs) {
    const double y = kPi * tau.imag();      // -log|q^{1/2}| per unit exponent
    const double M = 2.0 * kPi * im_z_abs;  // growth from e^{+-2 pi i n z}
    int N = 8;
    while (N < 4000) {
        double na = N - std::abs(a) - 1.0;
        if (na > 0.0 && na * na * y - (N + 1.0) * M - y * a * a > 40.0) break;  // e^{-40} ~ 4e-18
        ++N;
    }
    if (N >= 4000) throw NonConvergent("theta: series cutoff not reached");
    return N;
}

}  // namespace detail

// General characteristics sum, the paper's literal definition.
inline Complex theta_char_sum(double a, double b, Complex z, Complex tau) {
    detail::require_upper(tau, "theta_char_sum");
    const int N = detail::theta_cutoff(tau, a, std::abs(z.imag()) + std::abs(b) * 0.0);
    Complex s(0.0, 0.0);
    for (int n = -N; n <= N; ++n) {
        double na = n + a;
        Complex e = Complex(0.0, kPi) * (na * na) * tau + Complex(0.0, 2.0 * kPi) * na * (z + b);
        s += std::exp(e);
    }
    return s;
}

// Standard four theta functions, sum form, paired over n and -n-1 (or n and
// -n) so parity in z is exact in floating point. theta_11 carries the
// triple-product normalization (see the header comment).
inline Complex theta_sum(int i, int j, Complex z, Complex tau) {
    detail::require_upper(tau, "theta_sum");
    const double a = (i == 1) ? 0.5 : 0.0;
    const int N = detail::theta_cutoff(tau, a, std::abs(z.imag()));
    const Complex ipitau(0.0, kPi);
    Complex s(0.0, 0.0);
    if (i == 0 && j == 0) {  // 1 + 2 sum q^{n^2/2} cos(2 pi n z)
        s = 1.0;
        for (int n = 1; n <= N; ++n)
            s += 2.0 * std::exp(ipitau * tau * double(n) * double(n)) * std::cos(2.0 * kPi * double(n) * z);
    } else if (i == 0 && j == 1) {
        s = 1.0;
        for (int n = 1; n <= N; ++n) {
            double sgn = (n % 2) ? -1.0 : 1.0;
            s += 2.0 * sgn * std::exp(ipitau * tau * double(n) * double(n)) * std::cos(2.0 * kPi * double(n) * z);
        }
    } else if (i == 1 && j == 0) {  // 2 sum q^{(n+1/2)^2/2} cos((2n+1) pi z)
        for (int n = 0; n <= N; ++n) {
            double na = n + 0.5;
            s += 2.0 * std::exp(ipitau * tau * na * na) * std::cos((2.0 * n + 1.0) * kPi * z);
        }
    } else {  // 2i sum (-1)^n q^{(n+1/2)^2/2} sin((2n+1) pi z)
        for (int n = 0; n <= N; ++n) {
            double na = n + 0.5;
            double sgn = (n % 2) ? -1.0 : 1.0;
            s += 2.0 * sgn * std::exp(ipitau * tau * na * na) * std::sin((2.0 * n + 1.0) * kPi * z);
        }
        s *= Complex(0.0, 1.0);
    }
    return s;
}

// Product expansions, xi = 2 pi i z. Independent code path from theta_sum.
inline Complex theta_product(int i, int j, Complex z, Complex tau) {
    detail::require_upper(tau, "theta_product");
    const Complex q = std::exp(Complex(0.0, 2.0 * kPi) * tau);
    const Complex xi = Complex(0.0, 2.0 * kPi) * z;
    const Complex w = std::exp(xi), winv = std::exp(-xi);
    const double growth = std::max(std::abs(w), std::abs(winv));

    // stop once the remaining factors are within 1e-17 of 1; only finitely
    // many leading factors may exceed 1 in magnitude
    int N = 8;
    while (N < 4000 && std::pow(std::abs(q), N - 0.5) * growth > 1e-17) ++N;
    if (std::pow(std::abs(q), N - 0.5) * growth > 1e-17)
        throw NonConvergent("theta_product: |q^N e^{|xi|}| >= tolerance at the truncation bound");

    Complex p(1.0, 0.0);
    if (i == 0) {
        double sgn = (j == 0) ? 1.0 : -1.0;
        for (int n = 1; n <= N; ++n) {
            Complex qn = std::pow(q, n);
            Complex qh = detail::q_pow(tau, n - 0.5);
            p *= (1.0 - qn) * (1.0 + sgn * qh * w) * (1.0 + sgn * qh * winv);
        }
        return p;
    }
    double sgn = (j == 0) ? 1.0 : -1.0;
    for (int n = 1; n <= N; ++n) {
        Complex qn = std::pow(q, n);
        p *= (1.0 - qn) * (1.0 + sgn * qn * w) * (1.0 + sgn * qn * winv);
    }
    Complex half = std::exp(xi * 0.5), halfinv = std::exp(-xi * 0.5);
    Complex lead = (j == 0) ? (half + halfinv) : (half - halfinv);
    return detail::q_pow(tau, 0.125) * lead * p;
}

// Primary evaluator for the standard four.
inline Complex theta(int i, int j, Complex z, Complex tau) { return theta_sum(i, j, z, tau); }

// Number of summation terms the certified tail bound selects (metadata).
inline int theta_terms_used(int i, Complex z, Complex tau) {
    return detail::theta_cutoff(tau, (i == 1) ? 0.5 : 0.0, std::abs(z.imag()));
}

// Dedekind eta, q^{1/24} prod (1-q^n), tail-bounded truncated product.
inline Complex eta(Complex tau) {
    detail::require_upper(tau, "eta");
    const Complex q = std::exp(Complex(0.0, 2.0 * kPi) * tau);
    int N = 8;
    while (N < 40000 && std::pow(std::abs(q), N) > 1e-18) ++N;
    Complex p(1.0, 0.0);
    Complex qn(1.0, 0.0);
    for (int n = 1; n <= N; ++n) {
        qn *= q;
        p *= (1.0 - qn);
    }
    return detail::q_pow(tau, 1.0 / 24.0) * p;
}

inline Complex eta_pow(Complex tau, int k) {
    Complex e = eta(tau);
    Complex r(1.0, 0.0);
    for (int i = 0; i < std::abs(k); ++i) r *= e;
    return k >= 0 ? r : 1.0 / r;
}

namespace detail {

// Bernoulli numbers B_2..B_12 as rationals (even index k/2 - 1 offsets).
inline Rational bernoulli_even(int k) {
    switch (k) {
        case 2: return Rational(1, 6);
        case 4: return Rational(-1, 30);
        case 6: return Rational(1, 42);
        case 8: return Rational(-1, 30);
        case 10: return Rational(5, 66);
        case 12: return Rational(-691, 2730);
        default: throw InvalidRank("bernoulli_even: k must be even, 2 <= k <= 12");
    }
}

inline std::vector<std::int64_t> divisor_power_sums(int kminus1, int N) {
    std::vector<std::int64_t> s(N + 1, 0);
    for (int d = 1; d <= N; ++d) {
        std::int64_t dp = 1;
        for (int e = 0; e < kminus1; ++e) dp *= d;
        for (int m = d; m <= N; m += d) s[m] += dp;
    }
    return s;
}

}  // namespace detail

// Normalized Eisenstein series by q-expansion, G_k = -B_k/(2k) + sum sigma_{k-1}(n) q^n.
// N = 0 picks the truncation from |q| automatically.
inline Complex eisenstein_G(int k, Complex tau, int N = 0) {
    detail::require_upper(tau, "eisenstein_G");
    if (k < 2 || k % 2 != 0) throw InvalidRank("eisenstein_G: k must be even and >= 2");
    const Complex q = std::exp(Complex(0.0, 2.0 * kPi) * tau);
    if (N <= 0) {
        N = 8;
        while (N < 4000 && std::pow(std::abs(q), N) * std::pow(double(N), double(k)) > 1e-19) ++N;
    }
    auto sig = detail::divisor_power_sums(k - 1, N);
    Complex s = -detail::bernoulli_even(k).value() / (2.0 * k);
    Complex qn(1.0, 0.0);
    for (int n = 1; n <= N; ++n) {
        qn *= q;
        s += double(sig[n]) * qn;
    }
    return s;
}

// Exact q-expansion of G_k as a QSeries truncated at T (integer exponents).
inline QSeries eisenstein_G_qexp(int k, int T) {
    if (k < 2 || k % 2 != 0) throw InvalidRank("eisenstein_G_qexp: k must be even and >= 2");
    if (T <= 0) throw TruncationTooSmall("eisenstein_G_qexp: T must be positive");
    QSeries s{Rational(T)};
    Rational b = detail::bernoulli_even(k);
    Rational c0 = Rational(-1) * b / Rational(2 * k);
    s.set(Rational(0), Complex(c0.value(), 0.0));
    auto sig = detail::divisor_power_sums(k - 1, T);
    for (int n = 1; n < T; ++n) s.set(Rational(n), Complex(double(sig[n]), 0.0));
    return s;
}

// Weight-2 completion of G_2. With the normalization above the covariant
// combination is G_2 + 1/(8 pi Im tau).
inline Complex g2_hat(Complex tau) {
    detail::require_upper(tau, "g2_hat");
    return eisenstein_G(2, tau) + 1.0 / (8.0 * kPi * tau.imag());
}

// ---------------------------------------------------------------------------
// Heat operators.  D = d/dtau - (1/4 pi i) d^2/dz^2 annihilates every
// theta_ij; the eta^3-normalized versions satisfy the shifted operator with
// the 6 pi i G_2 counterterm (equivalently (log eta)' = -2 pi i G_2).
// Derivatives are central differences of step h in each complex variable.
// ---------------------------------------------------------------------------

inline Complex heat_residual(int i, int j, Complex z, Complex tau, double h) {
    if (!(tau.imag() > h)) throw NonConvergent("heat_residual: need Im(tau) > h");
    Complex dtau = (theta(i, j, z, tau + h) - theta(i, j, z, tau - h)) / (2.0 * h);
    Complex dzz = (theta(i, j, z + h, tau) - 2.0 * theta(i, j, z, tau) + theta(i, j, z - h, tau)) / (h * h);
    return dtau - dzz / (Complex(0.0, 4.0 * kPi));
}

inline Complex modified_heat_residual(int i, int j, Complex z, Complex tau, double h) {
    if (!(tau.imag() > h)) throw NonConvergent("modified_heat_residual: need Im(tau) > h");
    auto f = [&](Complex zz, Complex tt) { return theta(i, j, zz, tt) / eta_pow(tt, 3); };
    Complex dtau = (f(z, tau + h) - f(z, tau - h)) / (2.0 * h);
    Complex dzz = (f(z + h, tau) - 2.0 * f(z, tau) + f(z - h, tau)) / (h * h);
    return dtau - Complex(0.0, 6.0 * kPi) * eisenstein_G(2, tau) * f(z, tau) - dzz / (Complex(0.0, 4.0 * kPi));
}

// Conjugated operator Dt = e^{b z^2} Dhat e^{-b z^2} with b = 4 pi^2 G_2,
// expanded via the Ramanujan derivative G_2' = 2 pi i (-2 G_2^2 + 5/6 G_4):
//   Dt = D + C1 z d_z + C2 z^2 + C3,
//   C1 = -4 pi i G_2, C2 = i pi^3 (32 G_2^2 - 20/3 G_4), C3 = -8 pi i G_2.
// Applied to e^{4 pi^2 G_2 z^2} theta_11/eta^3, the residual is O(h^2).
inline Complex conjugated_heat_residual(Complex z, Complex tau, double h) {
    if (!(tau.imag() > h)) throw NonConvergent("conjugated_heat_residual: need Im(tau) > h");
    auto f = [&](Complex zz, Complex tt) {
        Complex b = 4.0 * kPi * kPi * eisenstein_G(2, tt);
        return std::exp(b * zz * zz) * theta(1, 1, zz, tt) / eta_pow(tt, 3);
    };
    Complex G2 = eisenstein_G(2, tau), G4 = eisenstein_G(4, tau);
    Complex dtau = (f(z, tau + h) - f(z, tau - h)) / (2.0 * h);
    Complex dz = (f(z + h, tau) - f(z - h, tau)) / (2.0 * h);
    Complex dzz = (f(z + h, tau) - 2.0 * f(z, tau) + f(z - h, tau)) / (h * h);
    Complex C1 = Complex(0.0, -4.0 * kPi) * G2;
    Complex C2 = Complex(0.0, kPi * kPi * kPi) * (32.0 * G2 * G2 - (20.0 / 3.0) * G4);
    Complex C3 = Complex(0.0, -8.0 * kPi) * G2;
    return dtau - dzz / Complex(0.0, 4.0 * kPi) + C1 * z * dz + C2 * z * z * f(z, tau) + C3 * f(z, tau);
}

// ---------------------------------------------------------------------------
// Modular transformation checks.
// ---------------------------------------------------------------------------

enum class ModTransform { T, S };
enum class ModTarget { Theta11OverEta, Theta11OverEta3, CompletedSeries };

struct ModularCheckResult {
    Complex lhs;  // target at the transformed point
    Complex rhs;  // stated law applied at (z, tau)
    double absdiff;
};

inline ModularCheckResult modular_check(ModTransform which, ModTarget target, Complex z, Complex tau) {
    detail::require_upper(tau, "modular_check");
    auto value = [&](Complex zz, Complex tt) -> Complex {
        switch (target) {
            case ModTarget::Theta11OverEta:
                return theta(1, 1, zz, tt) / eta(tt);
            case ModTarget::Theta11OverEta3:
                return theta(1, 1, zz, tt) / eta_pow(tt, 3);
            case ModTarget::CompletedSeries:
                // e^{4 pi^2 G_2 z^2} z eta^3 / theta_11, the SL_2(Z)-invariant
                // completion of the Witten characteristic series.
                return std::exp(4.0 * kPi * kPi * eisenstein_G(2, tt) * zz * zz) * zz * eta_pow(tt, 3) /
                       theta(1, 1, zz, tt);
        }
        return {};
    };
    Complex lhs, mult;
    if (which == ModTransform::T) {
        lhs = value(z, tau + 1.0);
        switch (target) {
            case ModTarget::Theta11OverEta: mult = std::exp(Complex(0.0, kPi / 6.0)); break;
            case ModTarget::Theta11OverEta3: mult = 1.0; break;
            case ModTarget::CompletedSeries: mult = 1.0; break;
        }
    } else {
        lhs = value(z / tau, -1.0 / tau);
        switch (target) {
            case ModTarget::Theta11OverEta:
                mult = -kI * std::exp(Complex(0.0, kPi) * z * z / tau);
                break;
            case ModTarget::Theta11OverEta3:
                mult = std::exp(Complex(0.0, kPi) * z * z / tau) / tau;
                break;
            case ModTarget::CompletedSeries: mult = 1.0; break;
        }
    }
    Complex rhs = mult * value(z, tau);
    return {lhs, rhs, std::abs(lhs - rhs)};
}

// Residual of the true quasimodular law for this normalization:
// G_2(-1/tau) - tau^2 G_2(tau) + tau/(4 pi i).
inline Complex g2_quasimodular_residual(Complex tau) {
    return eisenstein_G(2, -1.0 / tau) - tau * tau * eisenstein_G(2, tau) + tau / Complex(0.0, 4.0 * kPi);
}

// Weight-k covariance residual G_k(-1/tau) - tau^k G_k(tau), zero for k >= 4.
inline Complex gk_covariance_residual(int k, Complex tau) {
    return eisenstein_G(k, -1.0 / tau) - std::pow(tau, double(k)) * eisenstein_G(k, tau);
}

// z-derivatives of theta_11 at z = 0 up to order maxorder (inclusive),
// termwise from the alternating sum; even orders are exactly zero.
// d^{2m+1} theta_11/dz^{2m+1}(0) = 2i (-1)^m pi^{2m+1} sum (-1)^n (2n+1)^{2m+1} q^{(n+1/2)^2/2}.
inline std::vector<Complex> theta11_z_derivs_at0(Complex tau, int maxorder) {
    detail::require_upper(tau, "theta11_z_derivs_at0");
    const int N = detail::theta_cutoff(tau, 0.5, 0.0) + maxorder;
    std::vector<Complex> d(maxorder + 1, Complex(0.0, 0.0));
    for (int m = 0; 2 * m + 1 <= maxorder; ++m) {
        Complex s(0.0, 0.0);
        for (int n = 0; n <= N; ++n) {
            double na = n + 0.5;
            double sgn = (n % 2) ? -1.0 : 1.0;
            s += sgn * std::pow(2.0 * n + 1.0, 2.0 * m + 1.0) * std::exp(Complex(0.0, kPi) * tau * na * na);
        }
        double pm = (m % 2) ? -1.0 : 1.0;
        d[2 * m + 1] = 2.0 * kI * pm * std::pow(kPi, 2.0 * m + 1.0) * s;
    }
    return d;
}

}  // namespace qloop
