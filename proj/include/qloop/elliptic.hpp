#pragma once

// Torus-side computations: elliptic holonomy at constant Cartan and abelian
// polystable fields, flat-torus zeta determinants for the four spin
// structures (closed theta form and an independent Ewald/incomplete-gamma
// Epstein oracle), pushdown determinants, the elliptic Atiyah-Witten
// checker, and the q -> 0 degeneration.
//
// Spin-structure bookkeeping (resolved convention):
//   * closed form for spin (i,j): |theta[i/2, j/2](z,tau)/eta|^2, so the odd
//     structure (1,1) vanishes at z = 0;
//   * spectral twist for the Epstein oracle: w = z + ((1-j) + (1-i) tau)/2,
//     which has its zero mode exactly where the closed form vanishes.

#include <cmath>
#include <complex>
#include <vector>

#include "qloop/affine.hpp"
#include "qloop/errors.hpp"
#include "qloop/qseries.hpp"
#include "qloop/special.hpp"

namespace qloop {

// Cartan-valued (0,1)-gauge field sampled on an N x N torus grid at modulus
// tau. grid[c][y*N + x] is coordinate c of a(x/N, y/N).
struct TorusField {
    int l = 0;
    int N = 0;
    Complex tau;
    std::vector<std::vector<Complex>> grid;

    void validate() const {
        if (l < 1) throw ValidationError("TorusField: l must be >= 1");
        if (N < 16 || (N & (N - 1)) != 0) throw ValidationError("TorusField: N must be a power of two >= 16");
        if (!(tau.imag() > 0.0)) throw ValidationError("TorusField: Im(tau) must be positive");
        if (static_cast<int>(grid.size()) != l) throw ValidationError("TorusField: wrong number of coordinates");
        for (const auto& g : grid) {
            if (static_cast<int>(g.size()) != N * N) throw ValidationError("TorusField: wrong grid size");
            for (const Complex& v : g)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw ValidationError("TorusField: non-finite sample");
        }
    }
};

namespace detail {

// In-place radix-2 complex FFT; sign = -1 forward, +1 inverse (unscaled).
inline void fft_radix2(std::vector<Complex>& a, int sign) {
    const int n = static_cast<int>(a.size());
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * kPi / len;
        Complex wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            Complex w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                Complex u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// 2D FFT on an N x N row-major grid.
inline void fft2(std::vector<Complex>& g, int N, int sign) {
    std::vector<Complex> tmp(N);
    for (int y = 0; y < N; ++y) {
        std::copy(g.begin() + y * N, g.begin() + (y + 1) * N, tmp.begin());
        fft_radix2(tmp, sign);
        std::copy(tmp.begin(), tmp.end(), g.begin() + y * N);
    }
    for (int x = 0; x < N; ++x) {
        for (int y = 0; y < N; ++y) tmp[y] = g[y * N + x];
        fft_radix2(tmp, sign);
        for (int y = 0; y < N; ++y) g[y * N + x] = tmp[y];
    }
}

inline int signed_freq(int k, int N) { return (k <= N / 2 - 1) ? k : k - N; }

// Symbol of dbar = (tau d_x - d_y) / (2 i Im tau) on e^{2 pi i (m x + n y)}:
// pi (m tau - n) / Im tau.
inline Complex dbar_symbol(int m, int n, Complex tau) {
    return kPi * (double(m) * tau - double(n)) / tau.imag();
}

// Symbol of d_z: pi (n - m conj(tau)) / Im tau.
inline Complex dz_symbol(int m, int n, Complex tau) {
    return kPi * (double(n) - double(m) * std::conj(tau)) / tau.imag();
}

}  // namespace detail

struct AbelianReduction {
    CartanPoint z0;                           // harmonic (mean) part
    std::vector<std::vector<Complex>> f;      // potential with a = z0 + dbar f
    double residual;                          // || z0 + dbar f - a ||_inf
};

// Split a = z0 + dbar f on the torus by FFT; exact on band-limited fields.
inline AbelianReduction reduce_abelian(const TorusField& field) {
    field.validate();
    const int N = field.N;
    AbelianReduction out;
    out.z0.resize(field.l);
    out.f.resize(field.l);
    out.residual = 0.0;
    for (int c = 0; c < field.l; ++c) {
        std::vector<Complex> hat = field.grid[c];
        detail::fft2(hat, N, -1);
        out.z0[c] = hat[0] / double(N * N);
        std::vector<Complex> fhat(N * N, Complex(0.0, 0.0));
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) {
                if (x == 0 && y == 0) continue;
                int m = detail::signed_freq(x, N), n = detail::signed_freq(y, N);
                fhat[y * N + x] = hat[y * N + x] / detail::dbar_symbol(m, n, field.tau);
            }
        // residual via spectral differentiation
        std::vector<Complex> rec(N * N);
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) {
                int m = detail::signed_freq(x, N), n = detail::signed_freq(y, N);
                rec[y * N + x] = fhat[y * N + x] * detail::dbar_symbol(m, n, field.tau);
            }
        rec[0] = hat[0];
        detail::fft2(rec, N, +1);
        for (int i = 0; i < N * N; ++i)
            out.residual = std::max(out.residual, std::abs(rec[i] / double(N * N) - field.grid[c][i]));
        std::vector<Complex> f = fhat;
        detail::fft2(f, N, +1);
        for (Complex& v : f) v /= double(N * N);
        out.f[c] = std::move(f);
    }
    return out;
}

struct EllipticHolonomyValue {
    Complex value;
    CartanPoint cartan;
    Complex phase_log;  // accumulated central / cocycle contribution
};

// Constant-Cartan elliptic holonomy: the CS-trivialization prefactor
// exp((pi/(2 Im tau)) <z, z - zbar>) times the modified character. The
// prefactor is exp((pi i / Im tau) sum z_j Im z_j); its modulus is the
// standard theta-norm factor exp(-pi sum (Im z_j)^2 / Im tau), which makes
// the assembled section norm lattice-invariant.
inline EllipticHolonomyValue elliptic_holonomy_const(LevelOneRep rep, const CartanPoint& z, Complex tau) {
    detail::require_upper(tau, "elliptic_holonomy_const");
    Complex s(0.0, 0.0);
    for (const Complex& zj : z) s += zj * zj.imag();
    Complex pre = std::exp(Complex(0.0, kPi) * s / tau.imag());
    return {pre * char_level_one(rep, z, tau), z, Complex(0.0, 0.0)};
}

// Abelian gauged field: reduce to the constant part and accumulate the
// gauged-WZW cocycle phase -(1/4 pi) int <a ^ df> (gerbal term Gamma(exp f)
// vanishes for single-valued f). The wedge orientation gives
// dzbar ^ dz = 2 i Im tau dx dy.
inline EllipticHolonomyValue elliptic_holonomy_field(LevelOneRep rep, const TorusField& field) {
    AbelianReduction red = reduce_abelian(field);
    const int N = field.N;
    Complex acc(0.0, 0.0);
    for (int c = 0; c < field.l; ++c) {
        // d_z f by spectral differentiation
        std::vector<Complex> fh = red.f[c];
        detail::fft2(fh, N, -1);
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) {
                int m = detail::signed_freq(x, N), n = detail::signed_freq(y, N);
                fh[y * N + x] *= detail::dz_symbol(m, n, field.tau);
            }
        detail::fft2(fh, N, +1);
        Complex mean(0.0, 0.0);
        for (int i = 0; i < N * N; ++i) mean += field.grid[c][i] * (fh[i] / double(N * N));
        acc += mean / double(N * N);
    }
    Complex phase_log = -(Complex(0.0, 2.0) * field.tau.imag() / (4.0 * kPi)) * acc;
    EllipticHolonomyValue v = elliptic_holonomy_const(rep, red.z0, field.tau);
    v.phase_log = phase_log;
    v.value *= std::exp(phase_log);
    return v;
}

namespace detail {

// E1 exponential integral for x > 0 (series for small x, Lentz continued
// fraction for large x).
inline double exp_int_e1(double x) {
    if (x <= 0.0) throw ZeroMode("exp_int_e1: requires x > 0");
    if (x <= 1.0) {
        const double euler = 0.577215664901532860606512090082;
        double s = -euler - std::log(x);
        double term = 1.0;
        for (int k = 1; k < 60; ++k) {
            term *= -x / k;
            s -= term / k;
        }
        return s;
    }
    // modified Lentz for E1(x) = e^{-x} * CF
    double b = x + 1.0, c = 1e308, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        double a = -double(i) * double(i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-17) break;
    }
    return h * std::exp(-x);
}

}  // namespace detail

// Closed-form flat-torus zeta determinant for the coupled dbar at spin
// structure (i,j): |theta[i/2, j/2](z, tau) / eta(tau)|^2.
inline double zeta_det_torus(Complex z, Complex tau, SpinStructure spin) {
    detail::require_upper(tau, "zeta_det_torus");
    Complex th = (spin.i == 1 && spin.j == 1) ? theta(1, 1, z, tau)
                                              : theta_char_sum(spin.i * 0.5, spin.j * 0.5, z, tau);
    return std::norm(th / eta(tau));
}

struct EpsteinMetadata {
    Complex twist;          // w = z + ((1-j) + (1-i) tau)/2
    double gaussian_log;    // declared Quillen-vs-L2 adjustment 2 pi v^2 Im tau
    double zprime;          // Z'(0, w)
    int cutoff;
};

// Z'(0, w) for Z(s) = sum_{(m,n)} |m + n tau + w|^{-2s} via the
// incomplete-gamma Ewald split (double-exponential convergence):
//   Z'(0) = sum_k E1(pi Q(k + s0)) + (1/Im tau)[ -1 + sum_{h != 0}
//            e^{2 pi i h.s0} e^{-pi Q*(h)} / (pi Q*(h)) ].
inline double epstein_zprime0(Complex w, Complex tau, int cutoff = 8) {
    // real coordinates of w in the basis {1, tau}
    double v = w.imag() / tau.imag();
    double u = w.real() - v * tau.real();
    const double im = tau.imag(), re = tau.real(), tt = std::norm(tau);
    double direct = 0.0;
    for (int m = -cutoff; m <= cutoff; ++m)
        for (int n = -cutoff; n <= cutoff; ++n) {
            double x = m + u, y = n + v;
            double Q = x * x + 2.0 * re * x * y + tt * y * y;  // |x + y tau|^2
            if (Q < 1e-18) throw ZeroMode("epstein_zprime0: twist hits the lattice (zero mode)");
            direct += detail::exp_int_e1(kPi * Q);
        }
    double dual = -1.0;
    for (int h1 = -cutoff; h1 <= cutoff; ++h1)
        for (int h2 = -cutoff; h2 <= cutoff; ++h2) {
            if (h1 == 0 && h2 == 0) continue;
            double Qs = (tt * h1 * h1 - 2.0 * re * h1 * h2 + h2 * h2) / (im * im);
            dual += std::cos(2.0 * kPi * (h1 * u + h2 * v)) * std::exp(-kPi * Qs) / (kPi * Qs);
        }
    return direct + dual / im;
}

// Spectral-side determinant with the declared Gaussian metric adjustment:
//   exp(2 pi (Im z / Im tau)^2 Im tau) * exp(-Z'(0, w)).
// Proportional to the closed form with a z-independent constant; calibrate
// once per (tau, spin).
inline double epstein_zeta_det_raw(Complex z, Complex tau, SpinStructure spin, EpsteinMetadata* meta = nullptr,
                                   int cutoff = 8) {
    detail::require_upper(tau, "epstein_zeta_det");
    Complex w = z + (double(1 - spin.j) + double(1 - spin.i) * tau) * 0.5;
    double zp = epstein_zprime0(w, tau, cutoff);
    double vz = z.imag() / tau.imag();
    double glog = 2.0 * kPi * vz * vz * tau.imag();
    if (meta) *meta = {w, glog, zp, cutoff};
    return std::exp(glog - zp);
}

struct EpsteinCalibration {
    Complex z_cal;
    double kappa;  // closed(z_cal) / raw(z_cal)
};

inline EpsteinCalibration calibrate_epstein(Complex tau, SpinStructure spin, Complex z_cal, int cutoff = 8) {
    double closed = zeta_det_torus(z_cal, tau, spin);
    double raw = epstein_zeta_det_raw(z_cal, tau, spin, nullptr, cutoff);
    return {z_cal, closed / raw};
}

inline double epstein_zeta_det(Complex z, Complex tau, SpinStructure spin, const EpsteinCalibration& cal,
                               EpsteinMetadata* meta = nullptr, int cutoff = 8) {
    return cal.kappa * epstein_zeta_det_raw(z, tau, spin, meta, cutoff);
}

// ---------------------------------------------------------------------------
// Pushdown determinants and the elliptic Atiyah-Witten checker.
// ---------------------------------------------------------------------------

// res(det^{Delta}_{[a,b]})(z) ~ prod_mu { theta[a+1/2, b+1/2](mu(z), tau)/eta }^{m_mu}.
inline Complex pushdown_determinant(const std::vector<WeightLine>& weights, const CartanPoint& z,
                                    Complex tau, double a, double b) {
    detail::require_upper(tau, "pushdown_determinant");
    Complex e = eta(tau);
    Complex p(1.0, 0.0);
    for (const WeightLine& wline : weights) {
        Complex mz(0.0, 0.0);
        for (std::size_t i = 0; i < wline.mu.size() && i < z.size(); ++i)
            mz += double(wline.mu[i]) * z[i];
        Complex f = theta_char_sum(a + 0.5, b + 0.5, mz, tau) / e;
        for (int m = 0; m < wline.mult; ++m) p *= f;
    }
    return p;
}

struct EawSample {
    CartanPoint z;
    Complex char_side;
    Complex pfaffian_side;
    Complex ratio;
    bool both_zero;
};

struct EawReport {
    std::vector<EawSample> samples;
    double unimodular_err;  // max | |ratio| - mean |ratio| |
    double mean_ratio_abs;
};

// One pfaffian factor per Cartan coordinate with the (1-i,1-j) pairing:
// spin structure (1-i,1-j) paired with rep S_ij lands on theta[i/2,j/2].
inline Complex eaw_pfaffian_side(LevelOneRep rep, const CartanPoint& z, Complex tau, bool wrong_pairing) {
    int si = wrong_pairing ? 1 - rep_i(rep) : rep_i(rep);
    int sj = wrong_pairing ? 1 - rep_j(rep) : rep_j(rep);
    Complex e = eta(tau);
    Complex p(1.0, 0.0);
    // theta[a+1/2, b+1/2] with (a,b) the pfaffian label ((1-i)/2, (1-j)/2)
    double a = (1 - si) * 0.5 + 0.5, b = (1 - sj) * 0.5 + 0.5;
    for (const Complex& zj : z) p *= theta_char_sum(a, b, zj, tau) / e;
    return p;
}

inline EawReport elliptic_aw_check(LevelOneRep rep, const std::vector<CartanPoint>& zsamples, Complex tau,
                                   bool wrong_pairing = false) {
    detail::require_upper(tau, "elliptic_aw_check");
    if (zsamples.empty()) throw ValidationError("elliptic_aw_check: need at least one Cartan point");
    const int l = static_cast<int>(zsamples.front().size());
    Rational m = modular_anomaly(rep, l);
    Complex qm = detail::q_pow(tau, m.value());
    EawReport rep_out;
    double sum = 0.0;
    int live = 0;
    for (const CartanPoint& z : zsamples) {
        Complex cs = qm * char_level_one(rep, z, tau);
        Complex ps = eaw_pfaffian_side(rep, z, tau, wrong_pairing);
        EawSample s;
        s.z = z;
        s.char_side = cs;
        s.pfaffian_side = ps;
        s.both_zero = (std::abs(cs) < 1e-14 && std::abs(ps) < 1e-14);
        s.ratio = s.both_zero ? Complex(0.0, 0.0) : cs / ps;
        if (!s.both_zero) {
            sum += std::abs(s.ratio);
            ++live;
        }
        rep_out.samples.push_back(std::move(s));
    }
    rep_out.mean_ratio_abs = live ? sum / live : 0.0;
    rep_out.unimodular_err = 0.0;
    for (const EawSample& s : rep_out.samples)
        if (!s.both_zero)
            rep_out.unimodular_err =
                std::max(rep_out.unimodular_err, std::abs(std::abs(s.ratio) - rep_out.mean_ratio_abs));
    return rep_out;
}

// q^{-1/12} theta_11(z, tau_k)/eta -> 2 i sin(pi z); returns (|q|, relerr)
// per tau. z = 0 reports exact zeros.
inline std::vector<std::pair<double, double>> degeneration_check(Complex z, const std::vector<Complex>& taus) {
    std::vector<std::pair<double, double>> out;
    Complex target = 2.0 * kI * std::sin(kPi * z);
    for (Complex tau : taus) {
        detail::require_upper(tau, "degeneration_check");
        double absq = std::exp(-2.0 * kPi * tau.imag());
        Complex lhs = detail::q_pow(tau, -1.0 / 12.0) * theta(1, 1, z, tau) / eta(tau);
        if (std::abs(target) == 0.0) {
            out.emplace_back(absq, std::abs(lhs));
        } else {
            out.emplace_back(absq, std::abs(lhs - target) / std::abs(target));
        }
    }
    return out;
}

}  // namespace qloop
