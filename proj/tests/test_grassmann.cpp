#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "qloop/grassmann.hpp"
#include "test_util.hpp"

using namespace qloop;
using testutil::random_complex_mat;

namespace {

GrassMat random_grass(ExtAlgebra alg, int d, std::mt19937_64& rng, int nterms, double scale = 0.6) {
    GrassMat g(alg, d);
    std::uniform_int_distribution<std::uint32_t> mask(0, (1u << alg.g) - 1);
    for (int i = 0; i < nterms; ++i) g.add(mask(rng), random_complex_mat(d, rng, scale));
    return g;
}

double gdist(const GrassMat& a, const GrassMat& b) {
    double d = 0.0;
    for (const auto& [k, v] : a.coeffs) {
        const Mat* w = b.find(k);
        d = std::max(d, (w ? (v - *w) : v).cwiseAbs().maxCoeff());
    }
    for (const auto& [k, v] : b.coeffs)
        if (!a.find(k)) d = std::max(d, v.cwiseAbs().maxCoeff());
    return d;
}

}  // namespace

TEST_CASE("sign rule equals brute-force inversion count for g <= 6") {
    for (std::uint32_t S = 0; S < 64; ++S)
        for (std::uint32_t T = 0; T < 64; ++T) {
            if (S & T) continue;
            std::vector<int> seq;
            for (int b = 0; b < 6; ++b)
                if (S >> b & 1) seq.push_back(b);
            for (int b = 0; b < 6; ++b)
                if (T >> b & 1) seq.push_back(b);
            int inv = 0;
            for (std::size_t i = 0; i < seq.size(); ++i)
                for (std::size_t j = i + 1; j < seq.size(); ++j)
                    if (seq[i] > seq[j]) ++inv;
            REQUIRE(ExtAlgebra::sign(S, T) == ((inv % 2) ? -1 : 1));
        }
}

TEST_CASE("generator nilpotence and anticommutation") {
    ExtAlgebra alg(3);
    GrassMat e1(alg, 1), e2(alg, 1);
    e1.coeffs[0b001] = Mat::Identity(1, 1);
    e2.coeffs[0b010] = Mat::Identity(1, 1);
    REQUIRE(g_mul(e1, e1).coeffs.empty());
    GrassMat ab = g_mul(e1, e2), ba = g_mul(e2, e1);
    REQUIRE(gdist(ab, g_scale(-1.0, ba)) == 0.0);
}

TEST_CASE("even elements with matrix coefficients multiply with plus sign") {
    ExtAlgebra alg(4);
    std::mt19937_64 rng(4);
    Mat M = random_complex_mat(3, rng), N = random_complex_mat(3, rng);
    GrassMat a(alg, 3), b(alg, 3);
    a.coeffs[0b0011] = M;
    b.coeffs[0b1100] = N;
    GrassMat p = g_mul(a, b);
    REQUIRE(p.coeffs.size() == 1);
    REQUIRE((p.coeffs[0b1111] - M * N).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("g_mul associativity on random triples") {
    std::mt19937_64 rng(8);
    ExtAlgebra alg(5);
    for (int rep = 0; rep < 20; ++rep) {
        GrassMat a = random_grass(alg, 3, rng, 4), b = random_grass(alg, 3, rng, 4),
                 c = random_grass(alg, 3, rng, 4);
        double scale = std::max(1.0, a.max_abs() * b.max_abs() * c.max_abs());
        REQUIRE(gdist(g_mul(g_mul(a, b), c), g_mul(a, g_mul(b, c))) / scale < 1e-13);
    }
}

TEST_CASE("dimension and algebra mismatches are rejected") {
    ExtAlgebra a3(3), a4(4);
    GrassMat x(a3, 2), y(a3, 3), z(a4, 2);
    REQUIRE_THROWS_AS(g_mul(x, y), DimMismatch);
    REQUIRE_THROWS_AS(g_mul(x, z), AlgebraMismatch);
    REQUIRE_THROWS_AS(ExtAlgebra(17), DimMismatch);
}

TEST_CASE("g_exp basics") {
    ExtAlgebra alg(2);
    // exp(0) = identity
    GrassMat zero(alg, 3);
    GrassMat e0 = g_exp(zero);
    REQUIRE(e0.coeffs.size() == 1);
    REQUIRE((e0.coeffs[0] - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    // exp(B e1e2) = 1 + B e1e2 for scalar B
    GrassMat b(alg, 1);
    b.coeffs[0b11] = Mat::Constant(1, 1, Complex(0.7, 0.2));
    GrassMat eb = g_exp(b);
    REQUIRE(eb.coeffs.size() == 2);
    REQUIRE(std::abs(eb.coeffs[0](0, 0) - 1.0) < 1e-15);
    REQUIRE(std::abs(eb.coeffs[0b11](0, 0) - Complex(0.7, 0.2)) < 1e-15);
}

TEST_CASE("g_exp of commuting central 2-forms factorizes") {
    ExtAlgebra alg(4);
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 10; ++rep) {
        std::normal_distribution<double> g(0.0, 0.5);
        GrassMat x(alg, 2), y(alg, 2);
        x.coeffs[0b0011] = Complex(g(rng), g(rng)) * Mat::Identity(2, 2);
        y.coeffs[0b1100] = Complex(g(rng), g(rng)) * Mat::Identity(2, 2);
        REQUIRE(gdist(g_exp(g_add(x, y)), g_mul(g_exp(x), g_exp(y))) < 1e-14);
    }
}

TEST_CASE("g_exp against the brute-force series with general degree-0 part") {
    ExtAlgebra alg(4);
    std::mt19937_64 rng(9);
    GrassMat x = random_grass(alg, 3, rng, 3, 0.4);
    x.add(0, random_complex_mat(3, rng, 0.4));
    // brute-force: sum x^k / k! converges for the whole element
    GrassMat sum = GrassMat::identity(alg, 3);
    GrassMat pw = GrassMat::identity(alg, 3);
    double fact = 1.0;
    for (int k = 1; k <= 40; ++k) {
        pw = g_mul(pw, x);
        fact *= k;
        GrassMat scaled = g_scale(1.0 / fact, pw);
        sum = g_add(sum, scaled);
        if (pw.max_abs() / fact < 1e-18) break;
    }
    REQUIRE(gdist(g_exp(x), sum) < 1e-13);
}

TEST_CASE("g_str supertrace properties") {
    ExtAlgebra alg(2);
    const int d = 4;
    // trivial grading picks up the dimension
    GrassMat id = GrassMat::identity(alg, d);
    auto s = g_str(id, Mat::Identity(d, d));
    REQUIRE(std::abs(s[0] - Complex(double(d), 0.0)) == 0.0);
    // balanced grading kills the identity
    Mat bal = Mat::Identity(d, d);
    bal(2, 2) = -1;
    bal(3, 3) = -1;
    auto s2 = g_str(id, bal);
    REQUIRE(s2.count(0) == 0);
    // str(exp(R e1e2)) coefficients match the exact series
    std::mt19937_64 rng(21);
    Mat R = random_complex_mat(d, rng, 0.5);
    GrassMat x(alg, d);
    x.coeffs[0b11] = R;
    auto st = g_str(g_exp(x), bal);
    REQUIRE(std::abs(st[0b11] - (bal * R).trace()) < 1e-14);
    // rejects non-involutive gradings
    Mat badg = 2.0 * Mat::Identity(d, d);
    REQUIRE_THROWS_AS(g_str(id, badg), DimMismatch);
}

TEST_CASE("trace property with the Koszul sign on homogeneous elements") {
    ExtAlgebra alg(4);
    std::mt19937_64 rng(31);
    // homogeneous elements of fixed degree: str(ab) = (-1)^{|a||b|} str(ba)
    for (auto [ka, kb] : {std::pair<std::uint32_t, std::uint32_t>{0b0001, 0b0010},
                          {0b0001, 0b0110}, {0b0011, 0b1100}, {0b0111, 0b1000}}) {
        GrassMat a(alg, 3), b(alg, 3);
        a.coeffs[ka] = random_complex_mat(3, rng);
        b.coeffs[kb] = random_complex_mat(3, rng);
        auto sab = g_trace(g_mul(a, b));
        auto sba = g_trace(g_mul(b, a));
        double koszul = (ExtAlgebra::parity(ka) && ExtAlgebra::parity(kb)) ? -1.0 : 1.0;
        for (auto& [k, v] : sab) REQUIRE(std::abs(v - koszul * sba[k]) < 1e-13);
    }
}
