#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <optional>

#include "qloop/errors.hpp"
#include "qloop/rational.hpp"

namespace qloop {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline const Complex kI{0.0, 1.0};

// A point tau in the upper half-plane together with its nome q = e^{2 pi i tau}.
struct QPoint {
    Complex tau;
    Complex q;

    explicit QPoint(Complex t) : tau(t) {
        if (!(t.imag() > 0.0)) throw NonConvergent("QPoint: Im(tau) must be positive");
        q = std::exp(Complex(0.0, 2.0 * kPi) * t);
    }
};

// Truncated Laurent series in the nome q with exact rational exponents and
// complex double coefficients. Terms with exponent >= trunc are unknown and
// never stored; trunc == nullopt means the series is exact (a finite sum).
// Stored coefficients are never exactly 0+0i.
class QSeries {
public:
    using TermMap = std::map<Rational, Complex>;

    QSeries() = default;
    explicit QSeries(std::optional<Rational> trunc) : trunc_(trunc) {}

    static QSeries zero() { return QSeries(); }
    static QSeries zero_truncated(Rational t) { return QSeries(t); }
    static QSeries constant(Complex c) {
        QSeries s;
        s.set(Rational(0), c);
        return s;
    }
    static QSeries monomial(Rational exp, Complex c, std::optional<Rational> trunc = std::nullopt) {
        QSeries s(trunc);
        s.set(exp, c);
        return s;
    }

    const TermMap& terms() const { return terms_; }
    const std::optional<Rational>& trunc() const { return trunc_; }
    bool exact() const { return !trunc_.has_value(); }
    bool empty() const { return terms_.empty(); }

    // Smallest stored exponent; 0 for the empty series.
    Rational val() const { return terms_.empty() ? Rational(0) : terms_.begin()->first; }

    Complex coeff(const Rational& e) const {
        auto it = terms_.find(e);
        return it == terms_.end() ? Complex(0.0, 0.0) : it->second;
    }

    void set(const Rational& e, Complex c) {
        if (trunc_ && !(e < *trunc_)) return;
        if (c == Complex(0.0, 0.0)) {
            terms_.erase(e);
        } else {
            terms_[e] = c;
        }
    }

    void add_term(const Rational& e, Complex c) {
        if (trunc_ && !(e < *trunc_)) return;
        auto it = terms_.find(e);
        if (it == terms_.end()) {
            if (c != Complex(0.0, 0.0)) terms_.emplace(e, c);
        } else {
            it->second += c;
            if (it->second == Complex(0.0, 0.0)) terms_.erase(it);
        }
    }

    friend QSeries operator+(const QSeries& a, const QSeries& b) {
        QSeries r(min_trunc(a.trunc_, b.trunc_));
        for (const auto& [e, c] : a.terms_) r.add_term(e, c);
        for (const auto& [e, c] : b.terms_) r.add_term(e, c);
        return r;
    }

    friend QSeries operator-(const QSeries& a, const QSeries& b) {
        QSeries r(min_trunc(a.trunc_, b.trunc_));
        for (const auto& [e, c] : a.terms_) r.add_term(e, c);
        for (const auto& [e, c] : b.terms_) r.add_term(e, -c);
        return r;
    }

    QSeries operator-() const {
        QSeries r(trunc_);
        for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
        return r;
    }

    // Cauchy product. The result is only known on the provably-correct
    // window: trunc = min(a.trunc + val(b), b.trunc + val(a)).
    friend QSeries operator*(const QSeries& a, const QSeries& b) {
        if (a.terms_.empty() && a.exact()) return QSeries();
        if (b.terms_.empty() && b.exact()) return QSeries();
        std::optional<Rational> t;
        if (a.trunc_) t = *a.trunc_ + b.val();
        if (b.trunc_) {
            Rational tb = *b.trunc_ + a.val();
            t = t ? std::min(*t, tb) : tb;
        }
        QSeries r(t);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) r.add_term(ea + eb, ca * cb);
        return r;
    }

    friend QSeries operator*(Complex c, const QSeries& a) {
        QSeries r(a.trunc_);
        if (c == Complex(0.0, 0.0)) return r;
        for (const auto& [e, v] : a.terms_) r.terms_.emplace(e, c * v);
        return r;
    }

    // Multiply by the monomial q^s.
    QSeries shifted(const Rational& s) const {
        QSeries r(trunc_ ? std::optional<Rational>(*trunc_ + s) : std::nullopt);
        for (const auto& [e, c] : terms_) r.terms_.emplace(e + s, c);
        return r;
    }

    QSeries truncated(const Rational& t) const {
        QSeries r(trunc_ ? std::min(*trunc_, t) : t);
        for (const auto& [e, c] : terms_)
            if (e < *r.trunc_) r.terms_.emplace(e, c);
        return r;
    }

    // Finite evaluation at a point. Fractional powers use the principal
    // branch of log q, arg q in (-pi, pi].
    Complex eval(const QPoint& p) const {
        Complex logq = std::log(p.q);
        Complex s(0.0, 0.0);
        for (const auto& [e, c] : terms_) s += c * std::exp(e.value() * logq);
        return s;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
        return m;
    }

private:
    TermMap terms_;
    std::optional<Rational> trunc_;

    static std::optional<Rational> min_trunc(const std::optional<Rational>& a,
                                             const std::optional<Rational>& b) {
        if (!a) return b;
        if (!b) return a;
        return std::min(*a, *b);
    }
};

inline QSeries operator*(const QSeries& a, Complex c) { return c * a; }

// Geometric-series inverse of a unit series (nonzero constant term at
// exponent 0, all other exponents positive), up to truncation t.
inline QSeries qs_invert_unit(const QSeries& a, Rational t) {
    Complex c0 = a.coeff(Rational(0));
    if (c0 == Complex(0.0, 0.0))
        throw TruncationTooSmall("qs_invert_unit: series has no constant term");
    QSeries n = (1.0 / c0) * a;  // 1 + m, m with positive valuation
    QSeries m = n - QSeries::constant(1.0);
    if (!m.empty() && !(m.val() > Rational(0)))
        throw TruncationTooSmall("qs_invert_unit: negative-exponent tail");
    // 1/(1+m) = sum (-m)^k, terminating once m^k falls past the truncation.
    QSeries r = QSeries::constant(1.0).truncated(t);
    QSeries pw = QSeries::constant(1.0).truncated(t);
    for (int k = 1; k < 4096; ++k) {
        pw = (pw * m).truncated(t);
        if (pw.empty()) break;
        r = r + ((k % 2) ? -pw : pw);
    }
    return (1.0 / c0) * r;
}

}  // namespace qloop
