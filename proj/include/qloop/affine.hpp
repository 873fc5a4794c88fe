#pragma once

// Root data of spin(2l) = D_l, the four level-one virtual representations,
// their modified characters as theta products, modular anomalies, and an
// exact integer free-fermion Fock oracle for the q-expansions.
//
// Tag map (paper convention): S11 = S^+ - S^-, S10 = S^+ + S^-,
// S01 = S_+ - S_-, S00 = S_+ + S_-; chi_{S_ij} = prod_j theta_ij(z_j)/eta.

#include <complex>
#include <cstdint>
#include <vector>

#include "qloop/errors.hpp"
#include "qloop/qseries.hpp"
#include "qloop/special.hpp"

namespace qloop {

enum class LevelOneRep { S11, S10, S01, S00 };

inline int rep_i(LevelOneRep r) { return (r == LevelOneRep::S11 || r == LevelOneRep::S10) ? 1 : 0; }
inline int rep_j(LevelOneRep r) { return (r == LevelOneRep::S11 || r == LevelOneRep::S01) ? 1 : 0; }

inline const char* rep_name(LevelOneRep r) {
    switch (r) {
        case LevelOneRep::S11: return "S11";
        case LevelOneRep::S10: return "S10";
        case LevelOneRep::S01: return "S01";
        case LevelOneRep::S00: return "S00";
    }
    return "?";
}

// Root data for D_l at level one.
struct DRootData {
    int l;

    explicit DRootData(int rank) : l(rank) {
        if (l < 2) throw InvalidRank("DRootData: rank must be >= 2");
    }

    int dual_coxeter() const { return 2 * l - 2; }
    int dim_g() const { return l * (2 * l - 1); }
    int num_roots() const { return 2 * l * (l - 1); }
    // c = k dim g / (k + h_vee) at k = 1
    Rational central_charge() const { return Rational(dim_g(), 1 + dual_coxeter()); }

    std::vector<int> weyl_vector() const {  // rho = (l-1, l-2, ..., 0)
        std::vector<int> rho(l);
        for (int i = 0; i < l; ++i) rho[i] = l - 1 - i;
        return rho;
    }
};

using CartanPoint = std::vector<Complex>;

// One weight with multiplicity, in e-coordinates.
struct WeightLine {
    std::vector<int> mu;
    int mult = 1;
};

// Weights of the vector representation of D_l: +-e_1, ..., +-e_l.
inline std::vector<WeightLine> vector_rep_weights(int l) {
    std::vector<WeightLine> w;
    for (int i = 0; i < l; ++i) {
        std::vector<int> p(l, 0), m(l, 0);
        p[i] = 1;
        m[i] = -1;
        w.push_back({p, 1});
        w.push_back({m, 1});
    }
    return w;
}

// Modified level-one character chi_{S_ij}(z, tau) = prod_j theta_ij(z_j, tau)/eta(tau).
inline Complex char_level_one(LevelOneRep rep, const CartanPoint& z, Complex tau) {
    Complex e = eta(tau);
    Complex p(1.0, 0.0);
    for (const Complex& zj : z) p *= theta(rep_i(rep), rep_j(rep), zj, tau) / e;
    return p;
}

// Lowest conformal weight h_Lambda = <Lambda + 2 rho, Lambda> / (2 (k + h_vee))
// for the three level-one weight classes of D_l.
enum class LevelOneWeight { Vacuum, Vector, Spinor };

inline Rational conformal_weight(LevelOneWeight w, int l) {
    if (l < 2) throw InvalidRank("conformal_weight: rank must be >= 2");
    switch (w) {
        case LevelOneWeight::Vacuum: return Rational(0);
        case LevelOneWeight::Vector: return Rational(1, 2);       // (1 + 2(l-1)) / (2(2l-1))
        case LevelOneWeight::Spinor: return Rational(l, 8);      // l(2l-1)/4 / (2(2l-1))
    }
    return Rational(0);
}

inline Rational anomaly_from_weight(LevelOneWeight w, int l) {
    DRootData d(l);
    return conformal_weight(w, l) - d.central_charge() / Rational(24);
}

// The single exponent m such that q^{-m} * (theta-product expansion of the
// tag) is graded like the matching Fock sector: l/12 for the spinor family
// (S11, S10), -l/24 for the vacuum/vector family (S00, S01; the vector part
// enters at +1/2 inside).
inline Rational modular_anomaly(LevelOneRep rep, int l) {
    if (l < 2) throw InvalidRank("modular_anomaly: rank must be >= 2");
    if (rep_i(rep) == 1) return Rational(l, 12);
    return Rational(-l, 24);
}

// ---------------------------------------------------------------------------
// q-expansions via the product form, exact in e^{+-2 pi i z}.
// ---------------------------------------------------------------------------

namespace detail {

// theta_ij(z)/eta as a QSeries with complex coefficients from fixed z:
//   theta_00/eta = q^{-1/24} prod (1 + q^{n-1/2} w)(1 + q^{n-1/2}/w)
//   theta_01/eta = q^{-1/24} prod (1 - q^{n-1/2} w)(1 - q^{n-1/2}/w)
//   theta_10/eta = q^{1/12} (w^{1/2}+w^{-1/2}) prod (1 + q^n w)(1 + q^n/w)
//   theta_11/eta = q^{1/12} (w^{1/2}-w^{-1/2}) prod (1 - q^n w)(1 - q^n/w)
// with w = e^{2 pi i z}.
inline QSeries theta_over_eta_qexp(int i, int j, Complex z, Rational T) {
    Complex w = std::exp(Complex(0.0, 2.0 * kPi) * z);
    Complex wh = std::exp(Complex(0.0, kPi) * z);
    double sgn = (j == 0) ? 1.0 : -1.0;
    Rational offset = (i == 0) ? Rational(-1, 24) : Rational(1, 12);
    // window: after shifting by offset the product part is needed up to T - offset
    Rational Tprod = T - offset;
    QSeries p = QSeries::constant(1.0).truncated(Tprod);
    if (i == 1) {
        QSeries lead{std::optional<Rational>{}};
        lead.set(Rational(0), (j == 0) ? (wh + 1.0 / wh) : (wh - 1.0 / wh));
        p = (p * lead).truncated(Tprod);
    }
    for (int n = 1; Rational(i == 0 ? 2 * n - 1 : 2 * n, i == 0 ? 2 : 2) < Tprod; ++n) {
        Rational e = (i == 0) ? Rational(2 * n - 1, 2) : Rational(n);
        QSeries f1{std::optional<Rational>{}}, f2{std::optional<Rational>{}};
        f1.set(Rational(0), 1.0);
        f1.set(e, sgn * w);
        f2.set(Rational(0), 1.0);
        f2.set(e, sgn / w);
        p = (p * f1).truncated(Tprod);
        p = (p * f2).truncated(Tprod);
    }
    return p.shifted(offset);
}

}  // namespace detail

// q-expansion of the modified character at a fixed Cartan point, truncated at T.
inline QSeries char_qexpansion(LevelOneRep rep, const CartanPoint& z, Rational T) {
    if (T <= Rational(0)) throw TruncationTooSmall("char_qexpansion: T must be positive");
    QSeries r = QSeries::constant(1.0).truncated(T);
    for (const Complex& zj : z)
        r = (r * detail::theta_over_eta_qexp(rep_i(rep), rep_j(rep), zj, T)).truncated(T);
    return r;
}

// ---------------------------------------------------------------------------
// Free-fermion Fock oracle: exact integer dimensions of the energy-graded
// pieces for 2l real (l complex) fermions. Independent of all floating-point
// paths. NS modes sit at half-integer exponents, R modes at integers with
// 2^l ground states split evenly between chiralities.
// ---------------------------------------------------------------------------

enum class FockSector { NSEven, NSOdd, RPlus, RMinus };

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("fock dims: int64 overflow");
    return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("fock dims: int64 overflow");
    return r;
}

inline std::vector<std::int64_t> binomials(int n) {
    std::vector<std::int64_t> c(n + 1, 0);
    c[0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int k = i; k > 0; --k) c[k] = checked_add(c[k], c[k - 1]);
    return c;
}

}  // namespace detail

// Graded dimensions up to exponent < T (exclusive); exponents in units of
// 1/2 internally, returned as exact rationals.
inline std::vector<std::pair<Rational, std::int64_t>> fock_energy_dims(FockSector sector, int l, int T) {
    if (l < 1) throw InvalidRank("fock_energy_dims: l must be >= 1");
    if (T <= 0) throw TruncationTooSmall("fock_energy_dims: T must be positive");
    const int H = 2 * T;  // capacity in half-units, exponents 0 .. H-1 of q^{1/2}
    const auto binom = detail::binomials(2 * l);
    const bool ns = (sector == FockSector::NSEven || sector == FockSector::NSOdd);

    if (ns) {
        // DP over modes r = 1/2, 3/2, ... with parity tracking: each mode
        // contributes binom(2l, k) states of parity k at energy r*k.
        std::vector<std::array<std::int64_t, 2>> dp(H, {0, 0});
        dp[0][0] = 1;
        for (int twor = 1; twor < H; twor += 2) {  // 2r = 1, 3, 5, ...
            std::vector<std::array<std::int64_t, 2>> next(H, {0, 0});
            for (int e = 0; e < H; ++e)
                for (int par = 0; par < 2; ++par) {
                    if (dp[e][par] == 0) continue;
                    for (int k = 0; k <= 2 * l; ++k) {
                        long long ee = e + (long long)twor * k;
                        if (ee >= H) break;
                        int np = (par + k) % 2;
                        next[ee][np] = detail::checked_add(next[ee][np],
                                                           detail::checked_mul(dp[e][par], binom[k]));
                    }
                }
            dp.swap(next);
        }
        int want = (sector == FockSector::NSEven) ? 0 : 1;
        std::vector<std::pair<Rational, std::int64_t>> out;
        for (int e = 0; e < H; ++e)
            if (dp[e][want] != 0) out.emplace_back(Rational(e, 2), dp[e][want]);
        return out;
    }

    // R sector: integer modes n >= 1, each chirality carries 2^{l-1} ground
    // states; excitations flip chirality per mode, so the unsigned dims per
    // chirality coincide: 2^{l-1} * N(e) with N from prod (1+q^n)^{2l}.
    std::vector<std::int64_t> dp(T, 0);
    dp[0] = 1;
    for (int n = 1; n < T; ++n) {
        std::vector<std::int64_t> next(T, 0);
        for (int e = 0; e < T; ++e) {
            if (dp[e] == 0) continue;
            for (int k = 0; k <= 2 * l; ++k) {
                long long ee = e + (long long)n * k;
                if (ee >= T) break;
                next[ee] = detail::checked_add(next[ee], detail::checked_mul(dp[e], binom[k]));
            }
        }
        dp.swap(next);
    }
    std::int64_t ground = 1;
    for (int i = 0; i < l - 1; ++i) ground = detail::checked_mul(ground, 2);
    std::vector<std::pair<Rational, std::int64_t>> out;
    for (int e = 0; e < T; ++e)
        if (dp[e] != 0) out.emplace_back(Rational(e), detail::checked_mul(ground, dp[e]));
    return out;
}

// Signed/unsigned Fock q-series matching a tag at z = 0, as exact integers:
// S00 <-> NS even + odd, S01 <-> NS even - odd, S10 <-> R_+ + R_-,
// S11 <-> R_+ - R_- (identically zero).
inline std::vector<std::pair<Rational, std::int64_t>> fock_tag_series(LevelOneRep rep, int l, int T) {
    auto combine = [&](FockSector a, FockSector b, int sign) {
        auto da = fock_energy_dims(a, l, T);
        auto db = fock_energy_dims(b, l, T);
        std::map<Rational, std::int64_t> m;
        for (auto& [e, d] : da) m[e] += d;
        for (auto& [e, d] : db) m[e] += sign * d;
        std::vector<std::pair<Rational, std::int64_t>> out;
        for (auto& [e, d] : m)
            if (d != 0) out.emplace_back(e, d);
        return out;
    };
    switch (rep) {
        case LevelOneRep::S00: return combine(FockSector::NSEven, FockSector::NSOdd, +1);
        case LevelOneRep::S01: return combine(FockSector::NSEven, FockSector::NSOdd, -1);
        case LevelOneRep::S10: return combine(FockSector::RPlus, FockSector::RMinus, +1);
        case LevelOneRep::S11: return combine(FockSector::RPlus, FockSector::RMinus, -1);
    }
    return {};
}

// ---------------------------------------------------------------------------
// Weyl group checks. W(D_l) = permutations with an even number of sign flips.
// ---------------------------------------------------------------------------

struct SignedPermutation {
    std::vector<int> perm;    // image of index i
    std::vector<bool> flip;   // sign flip at slot i
};

inline double weyl_check(LevelOneRep rep, const CartanPoint& z, Complex tau, const SignedPermutation& w) {
    const int l = static_cast<int>(z.size());
    if (static_cast<int>(w.perm.size()) != l || static_cast<int>(w.flip.size()) != l)
        throw DimMismatch("weyl_check: permutation size mismatch");
    std::vector<bool> seen(l, false);
    int flips = 0;
    for (int i = 0; i < l; ++i) {
        if (w.perm[i] < 0 || w.perm[i] >= l || seen[w.perm[i]])
            throw NotInWeylGroup("weyl_check: not a permutation");
        seen[w.perm[i]] = true;
        if (w.flip[i]) ++flips;
    }
    if (flips % 2 != 0)
        throw NotInWeylGroup("weyl_check: odd number of sign flips is not in W(D_l)");
    CartanPoint wz(l);
    for (int i = 0; i < l; ++i) wz[i] = (w.flip[i] ? -1.0 : 1.0) * z[w.perm[i]];
    return std::abs(char_level_one(rep, wz, tau) - char_level_one(rep, z, tau));
}

// ---------------------------------------------------------------------------
// Explicit Fock states (energy + weight + sign) for small truncations; used
// by the energy-truncated restriction checks. NS states carry integer
// weights (sums of +-e_j), R states carry half-integer spinor weights.
// ---------------------------------------------------------------------------

struct FockState {
    Rational energy;
    std::vector<Rational> weight;  // length l
    int sign;                      // +1 / -1 under the tag's virtual grading
};

// All states of the tag's sector with energy <= N (inclusive), signed per the
// virtual combination (S01: (-1)^{fermion number}; S11: chirality grading).
inline std::vector<FockState> fock_states(LevelOneRep rep, int l, int N) {
    if (l < 1 || l > 3) throw InvalidRank("fock_states: supported for 1 <= l <= 3");
    if (N < 0 || N > 6) throw TruncationTooSmall("fock_states: need 0 <= N <= 6");
    const bool ns = rep_i(rep) == 0;
    const bool graded = (rep == LevelOneRep::S01 || rep == LevelOneRep::S11);
    std::vector<FockState> out;

    // collect single-fermion modes (energy, flavor weight sign, coordinate)
    struct Mode { Rational e; int coord; int sgn; };
    std::vector<Mode> modes;
    if (ns) {
        for (int twor = 1; Rational(twor, 2) <= Rational(N); twor += 2)
            for (int c = 0; c < l; ++c)
                for (int s : {+1, -1}) modes.push_back({Rational(twor, 2), c, s});
    } else {
        for (int n = 1; Rational(n) <= Rational(N); ++n)
            for (int c = 0; c < l; ++c)
                for (int s : {+1, -1}) modes.push_back({Rational(n), c, s});
    }
    const int M = static_cast<int>(modes.size());
    if (M > 26) throw TruncationTooSmall("fock_states: state space too large");

    auto emit_with_ground = [&](Rational e0, const std::vector<Rational>& w0, int sign0) {
        for (std::uint64_t mask = 0; mask < (1ull << M); ++mask) {
            Rational e = e0;
            std::vector<Rational> w = w0;
            int nf = 0;
            bool over = false;
            for (int m = 0; m < M; ++m)
                if (mask & (1ull << m)) {
                    e = e + modes[m].e;
                    if (e > Rational(N)) { over = true; break; }
                    w[modes[m].coord] = w[modes[m].coord] + Rational(modes[m].sgn);
                    ++nf;
                }
            if (over || e > Rational(N)) continue;
            int sign = sign0;
            if (graded && (nf % 2)) sign = -sign;
            out.push_back({e, w, sign});
        }
    };

    if (ns) {
        emit_with_ground(Rational(0), std::vector<Rational>(l, Rational(0)), +1);
    } else {
        // 2^l ground spinor states of weight (+-1/2, ..., +-1/2); for the
        // graded tag the chirality sign is the parity of minus components.
        for (int s = 0; s < (1 << l); ++s) {
            std::vector<Rational> w(l);
            int minus = 0;
            for (int c = 0; c < l; ++c) {
                bool neg = (s >> c) & 1;
                w[c] = neg ? Rational(-1, 2) : Rational(1, 2);
                if (neg) ++minus;
            }
            emit_with_ground(Rational(0), w, (graded && (minus % 2)) ? -1 : +1);
        }
    }
    return out;
}

}  // namespace qloop
