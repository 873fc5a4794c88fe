#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "qloop/json_io.hpp"
#include "qloop/qseries.hpp"

using namespace qloop;

namespace {

// Independent eta q-expansion straight from the defining product, built with
// plain coefficient convolution (test-side oracle).
QSeries eta_expansion_oracle(int T) {
    QSeries p = QSeries::constant(1.0).truncated(Rational(T));
    for (int n = 1; n < T; ++n) {
        QSeries f{std::optional<Rational>{}};
        f.set(Rational(0), 1.0);
        f.set(Rational(n), -1.0);
        p = (p * f).truncated(Rational(T));
    }
    return p.shifted(Rational(1, 24));
}

QSeries random_series(std::mt19937_64& rng, int nterms, int maxden, Rational trunc) {
    std::uniform_int_distribution<int> num(-12, 12), den(1, maxden);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    QSeries s{trunc};
    for (int i = 0; i < nterms; ++i)
        s.add_term(Rational(num(rng), den(rng)), Complex(coef(rng), coef(rng)));
    return s;
}

double series_dist(const QSeries& a, const QSeries& b) {
    double d = 0.0;
    for (const auto& [e, c] : a.terms()) d = std::max(d, std::abs(c - b.coeff(e)));
    for (const auto& [e, c] : b.terms()) d = std::max(d, std::abs(c - a.coeff(e)));
    return d;
}

}  // namespace

TEST_CASE("qs_add basics") {
    QSeries a = QSeries::monomial(Rational(1, 2), 1.0);
    QSeries b = QSeries::monomial(Rational(1, 2), -1.0);
    REQUIRE((a + b).empty());

    QSeries c{Rational(2)};
    c.add_term(Rational(0), 1.0);
    c.add_term(Rational(1), 1.0);
    QSeries d{Rational(3)};
    d.add_term(Rational(1), 1.0);
    d.add_term(Rational(2), 1.0);
    QSeries s = c + d;
    REQUIRE(s.trunc().has_value());
    REQUIRE(*s.trunc() == Rational(2));
    REQUIRE(s.coeff(Rational(0)) == Complex(1.0, 0.0));
    REQUIRE(s.coeff(Rational(1)) == Complex(2.0, 0.0));
    REQUIRE(s.coeff(Rational(2)) == Complex(0.0, 0.0));
}

TEST_CASE("eta expansion cancels against its negation") {
    QSeries e = eta_expansion_oracle(5);
    REQUIRE((e + (-e)).empty());
}

TEST_CASE("qs_mul exponent arithmetic and truncation window") {
    QSeries a = QSeries::monomial(Rational(1, 8), 1.0);
    QSeries b = QSeries::monomial(Rational(1, 24), 1.0);
    QSeries p = a * b;
    REQUIRE(p.terms().size() == 1);
    REQUIRE(p.terms().begin()->first == Rational(1, 6));

    // (1 - q) * geometric series = 1 up to the window
    QSeries one_minus_q{std::optional<Rational>{}};
    one_minus_q.set(Rational(0), 1.0);
    one_minus_q.set(Rational(1), -1.0);
    QSeries geom{Rational(10)};
    for (int n = 0; n < 10; ++n) geom.set(Rational(n), 1.0);
    QSeries prod = one_minus_q * geom;
    REQUIRE(prod.trunc().has_value());
    REQUIRE(*prod.trunc() == Rational(10));
    REQUIRE(std::abs(prod.coeff(Rational(0)) - 1.0) == 0.0);
    for (int n = 1; n < 10; ++n) REQUIRE(prod.coeff(Rational(n)) == Complex(0.0, 0.0));
}

TEST_CASE("eta^24 matches q prod(1-q^n)^24 term by term") {
    const int T = 12;
    QSeries e = eta_expansion_oracle(T);
    QSeries e24 = QSeries::constant(1.0);
    for (int i = 0; i < 24; ++i) e24 = (e24 * e).truncated(Rational(T));
    // independent route: q * prod (1-q^n)^24 by direct convolution
    QSeries p = QSeries::constant(1.0).truncated(Rational(T));
    for (int n = 1; n < T; ++n) {
        QSeries f{std::optional<Rational>{}};
        f.set(Rational(0), 1.0);
        f.set(Rational(n), -1.0);
        for (int k = 0; k < 24; ++k) p = (p * f).truncated(Rational(T));
    }
    p = p.shifted(Rational(1)).truncated(Rational(T));
    REQUIRE(series_dist(e24, p) < 1e-9);
    // spot-check the Ramanujan tau values
    REQUIRE(std::abs(e24.coeff(Rational(1)) - 1.0) < 1e-12);
    REQUIRE(std::abs(e24.coeff(Rational(2)) - (-24.0)) < 1e-9);
    REQUIRE(std::abs(e24.coeff(Rational(6)) - (-6048.0)) < 1e-6);
}

TEST_CASE("ring axioms on matched truncations") {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        Rational T(8);
        QSeries a = random_series(rng, 6, 4, T);
        QSeries b = random_series(rng, 6, 4, T);
        QSeries c = random_series(rng, 6, 4, T);
        REQUIRE(series_dist((a + b) + c, a + (b + c)) == 0.0);
        double scale = std::max(1.0, a.max_abs_coeff() * b.max_abs_coeff() * c.max_abs_coeff());
        REQUIRE(series_dist((a * b) * c, a * (b * c)) / scale < 1e-14);
        REQUIRE(series_dist(a * (b + c), a * b + a * c) / scale < 1e-14);
    }
}

TEST_CASE("qs_eval is a ring homomorphism up to truncation") {
    std::mt19937_64 rng(7);
    QPoint p(Complex(0.21, 1.1));
    for (int rep = 0; rep < 20; ++rep) {
        Rational T(10);
        QSeries a = random_series(rng, 5, 3, T);
        QSeries b = random_series(rng, 5, 3, T);
        // positive-valuation inputs keep the window at T
        QSeries ap = a.shifted(Rational(1) - std::min(a.val(), Rational(0)));
        QSeries bp = b.shifted(Rational(1) - std::min(b.val(), Rational(0)));
        Complex lhs = (ap * bp).eval(p);
        Complex rhs = ap.eval(p) * bp.eval(p);
        double window = std::pow(std::abs(p.q), (ap * bp).trunc()->value());
        double scale = std::max(1.0, ap.max_abs_coeff() * bp.max_abs_coeff());
        // truncation window plus a floating-point floor for the two routes
        double bound = 50.0 * window * scale + 1e-12 * (std::abs(lhs) + std::abs(rhs) + scale);
        REQUIRE(std::abs(lhs - rhs) <= bound);
    }
}

TEST_CASE("qs_eval basics and eta product cross-check") {
    QPoint p(Complex(0.0, 1.0));
    REQUIRE(QSeries::zero().eval(p) == Complex(0.0, 0.0));
    REQUIRE(QSeries::constant(1.0).eval(p) == Complex(1.0, 0.0));

    QSeries e = eta_expansion_oracle(60);
    Complex q = p.q;
    Complex direct = std::pow(q, 1.0 / 24.0);
    for (int n = 1; n <= 60; ++n) direct *= (1.0 - std::pow(q, n));
    REQUIRE(std::abs(e.eval(p) - direct) / std::abs(direct) < 1e-12);
}

TEST_CASE("QSeries JSON round trip") {
    std::mt19937_64 rng(3);
    QSeries s = random_series(rng, 8, 24, Rational(7, 2));
    Json j = to_json(s);
    QSeries back = qseries_from_json(j);
    REQUIRE(series_dist(s, back) == 0.0);
    REQUIRE(back.trunc().has_value());
    REQUIRE(*back.trunc() == Rational(7, 2));

    QSeries exact = QSeries::monomial(Rational(-1, 24), Complex(0.5, -0.25));
    QSeries back2 = qseries_from_json(to_json(exact));
    REQUIRE(!back2.trunc().has_value());
    REQUIRE(series_dist(exact, back2) == 0.0);
}

TEST_CASE("rational arithmetic overflow detection") {
    Rational big(INT64_MAX / 2, 1);
    REQUIRE_THROWS_AS(big * Rational(4), std::overflow_error);
    REQUIRE((Rational(1, 8) + Rational(1, 24)) == Rational(1, 6));
    REQUIRE((Rational(1, 8) / Rational(1, 24)) == Rational(3));
}
