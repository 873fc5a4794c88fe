#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "qloop/transport.hpp"
#include "test_util.hpp"

using namespace qloop;
using testutil::random_so_loop;

TEST_CASE("zero and constant connections") {
    LoopConnection zero;
    zero.n = 4;
    zero.algebra = MatrixAlgebra::SO;
    zero.samples.assign(64, Mat::Zero(4, 4));
    Mat h = parallel_transport(zero).hol;
    REQUIRE((h - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);

    LoopConnection c = random_so_loop(4, 256, 1);
    Mat A0 = c.samples[0];
    for (auto& s : c.samples) s = A0;
    REQUIRE((parallel_transport(c).hol - A0.exp()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("integrator is fourth order") {
    LoopConnection c64 = random_so_loop(4, 64, 2), c128 = random_so_loop(4, 128, 2),
                   cref = random_so_loop(4, 2048, 2);
    Mat ref = parallel_transport(cref).hol;
    double e1 = (parallel_transport(c64).hol - ref).cwiseAbs().maxCoeff();
    double e2 = (parallel_transport(c128).hol - ref).cwiseAbs().maxCoeff();
    REQUIRE(e1 / e2 >= 14.0);
}

TEST_CASE("orthogonality preservation at K = 1024") {
    LoopConnection c = random_so_loop(6, 1024, 3);
    Mat h = parallel_transport(c).hol;
    REQUIRE((h * h.transpose() - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(std::abs(h.determinant() - Complex(1.0, 0.0)) < 1e-9);
}

TEST_CASE("validation rejects bad input") {
    LoopConnection c;
    c.n = 4;
    c.algebra = MatrixAlgebra::SO;
    c.samples.assign(8, Mat::Zero(4, 4));
    REQUIRE_THROWS_AS(c.validate(), ValidationError);  // too few samples
    c.samples.assign(32, Mat::Ones(4, 4));
    REQUIRE_THROWS_AS(c.validate(), ValidationError);  // not skew
    c.algebra = MatrixAlgebra::U;
    REQUIRE_THROWS_AS(c.validate(), ValidationError);  // not skew-Hermitian
}

TEST_CASE("u(n) and gl(n) loops transport too") {
    // skew-Hermitian constant: unitary monodromy equal to exp
    Mat A(2, 2);
    A << Complex(0.0, 0.4), Complex(0.3, 0.2), Complex(-0.3, 0.2), Complex(0.0, -0.9);
    LoopConnection cu;
    cu.n = 2;
    cu.algebra = MatrixAlgebra::U;
    cu.samples.assign(32, A);
    cu.validate();
    Mat h = parallel_transport(cu).hol;
    REQUIRE((h - A.exp()).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE((h * h.adjoint() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937_64 rng(64);
    Mat G = testutil::random_complex_mat(3, rng, 0.5);
    LoopConnection cg;
    cg.n = 3;
    cg.algebra = MatrixAlgebra::GL;
    cg.samples.assign(32, G);
    REQUIRE((parallel_transport(cg).hol - G.exp()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("gauge covariance of the monodromy") {
    LoopConnection c = random_so_loop(4, 512, 21);
    const int K = c.K();
    Eigen::MatrixXd X0 = Eigen::MatrixXd::Zero(4, 4);
    X0(0, 1) = 1.3; X0(1, 0) = -1.3;
    X0(1, 2) = -0.4; X0(2, 1) = 0.4;
    X0(2, 3) = 0.9; X0(3, 2) = -0.9;
    auto f = [](double t) { return 0.8 * std::sin(2 * kPi * t) + 0.3 * std::cos(4 * kPi * t); };
    auto fp = [](double t) {
        return 0.8 * 2 * kPi * std::cos(2 * kPi * t) - 0.3 * 4 * kPi * std::sin(4 * kPi * t);
    };
    LoopConnection cg = c;
    for (int k = 0; k < K; ++k) {
        double t = double(k) / K;
        Mat g = (f(t) * X0).cast<Complex>().exp();
        cg.samples[k] = g * c.samples[k] * g.adjoint() + fp(t) * X0.cast<Complex>();
    }
    Mat g0 = (f(0.0) * X0).cast<Complex>().exp();
    Mat lhs = parallel_transport(cg).hol;
    Mat rhs = g0 * parallel_transport(c).hol * g0.adjoint();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("floquet_reduce") {
    // constant input: K0 = A up to branch
    LoopConnection c = random_so_loop(4, 256, 4, 0.3);
    Mat A0 = c.samples[0];
    for (auto& s : c.samples) s = A0;
    auto f = floquet_reduce(c);
    REQUIRE((f.K0 - A0).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(f.residual < 1e-10);

    // so(2) rotation with |a| < 1/2: eigenvalues +-2 pi i a
    LoopConnection r;
    r.n = 2;
    r.algebra = MatrixAlgebra::SO;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
    const double a = 0.31;
    R(0, 1) = -2 * kPi * a;
    R(1, 0) = 2 * kPi * a;
    r.samples.assign(64, R.cast<Complex>());
    auto fr = floquet_reduce(r);
    Eigen::ComplexEigenSolver<Mat> es(fr.K0, false);
    std::vector<double> im = {es.eigenvalues()(0).imag(), es.eigenvalues()(1).imag()};
    std::sort(im.begin(), im.end());
    REQUIRE(std::abs(im[0] + 2 * kPi * a) < 1e-10);
    REQUIRE(std::abs(im[1] - 2 * kPi * a) < 1e-10);

    // random loop: spectra of exp(K0) and the monodromy agree
    LoopConnection rl = random_so_loop(4, 512, 6);
    Mat hol = parallel_transport(rl).hol;
    auto f2 = floquet_reduce_monodromy(hol);
    REQUIRE(f2.residual < 1e-9);

    // branch stability: moderate constant K0 round-trips through transport
    LoopConnection cc = random_so_loop(4, 256, 7, 0.35);
    Mat K0 = cc.samples[0];
    for (auto& s : cc.samples) s = K0;
    auto f3 = floquet_reduce(cc);
    REQUIRE((f3.K0 - K0).cwiseAbs().maxCoeff() < 1e-9);

    // a Jordan block has no eigenbasis: DefectiveMonodromy
    Mat jordan(2, 2);
    jordan << 1.0, 1.0, 0.0, 1.0;
    REQUIRE_THROWS_AS(floquet_reduce_monodromy(jordan), DefectiveMonodromy);
}

TEST_CASE("spin supertrace basics") {
    // identity monodromy -> 0
    Monodromy id{Mat::Identity(4, 4), MatrixAlgebra::SO, 0, 4};
    REQUIRE(std::abs(spin_supertrace(id)) == 0.0);
    // single rotation by theta -> 2 i sin(theta/2)
    double th = 1.1;
    Mat R(2, 2);
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Monodromy m{R, MatrixAlgebra::SO, 0, 4};
    REQUIRE(std::abs(spin_supertrace(m) - 2.0 * kI * std::sin(th / 2.0)) < 1e-12);
    // rejects non-orthogonal input
    Monodromy bad{2.0 * Mat::Identity(4, 4), MatrixAlgebra::GL, 0, 4};
    REQUIRE_THROWS_AS(spin_supertrace(bad), NotSpecialOrthogonal);
}

TEST_CASE("|Tr_s hol|^2 = det(I - hol) for random SO(4) and SO(6)") {
    for (int n : {4, 6}) {
        for (unsigned seed = 30; seed < 36; ++seed) {
            Monodromy m = parallel_transport(random_so_loop(n, 512, seed));
            Complex ts = spin_supertrace(m);
            Complex det = (Mat::Identity(n, n) - m.hol).determinant();
            REQUIRE(std::abs(Complex(std::norm(ts), 0.0) - det) <
                    1e-9 * std::max(1.0, std::abs(det)));
        }
    }
}

TEST_CASE("zeta pfaffian") {
    // zero connection: exact zero (kernel of the covariant derivative)
    LoopConnection zero;
    zero.n = 4;
    zero.algebra = MatrixAlgebra::SO;
    zero.samples.assign(64, Mat::Zero(4, 4));
    REQUIRE(std::abs(zeta_pfaffian_circle(zero)) == 0.0);

    // constant block rotations: 2i sin(pi a) per block
    LoopConnection c;
    c.n = 4;
    c.algebra = MatrixAlgebra::SO;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
    const double a1 = 0.2, a2 = 0.35;
    A(0, 1) = -2 * kPi * a1; A(1, 0) = 2 * kPi * a1;
    A(2, 3) = -2 * kPi * a2; A(3, 2) = 2 * kPi * a2;
    c.samples.assign(128, A.cast<Complex>());
    Complex expect = (2.0 * kI * std::sin(kPi * a1)) * (2.0 * kI * std::sin(kPi * a2));
    REQUIRE(std::abs(zeta_pfaffian_circle(c) - expect) < 1e-12);

    // equals the supertrace on random loops (classical Atiyah-Witten)
    for (unsigned seed = 40; seed < 44; ++seed) {
        LoopConnection rl = random_so_loop(4, 512, seed);
        Complex pf = zeta_pfaffian_circle(rl);
        Complex ts = spin_supertrace(parallel_transport(rl));
        REQUIRE(std::abs(pf - ts) < 1e-8);
    }
    REQUIRE_THROWS_AS(zeta_pfaffian_circle(random_so_loop(3, 64, 1)), NotSpecialOrthogonal);
}

TEST_CASE("aw_check report and gauge invariance") {
    LoopConnection zero;
    zero.n = 4;
    zero.algebra = MatrixAlgebra::SO;
    zero.samples.assign(64, Mat::Zero(4, 4));
    AwReport rz = aw_check(zero);
    REQUIRE(std::abs(rz.supertrace) == 0.0);
    REQUIRE(std::abs(rz.zeta_pfaffian) == 0.0);
    REQUIRE(rz.absdiff == 0.0);

    LoopConnection c = random_so_loop(4, 512, 50);
    AwReport r = aw_check(c);
    REQUIRE(r.absdiff < 1e-7);
    REQUIRE(r.det_identity_err < 1e-9);

    // conjugation invariance (class function): constant conjugation
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4, 4);
    X(0, 2) = 0.7; X(2, 0) = -0.7; X(1, 3) = -0.4; X(3, 1) = 0.4;
    Mat g = X.cast<Complex>().exp();
    LoopConnection cg = c;
    for (auto& s : cg.samples) s = g * s * g.adjoint();
    AwReport rg = aw_check(cg);
    REQUIRE(std::abs(rg.supertrace - r.supertrace) < 1e-7);
    REQUIRE(std::abs(rg.zeta_pfaffian - r.zeta_pfaffian) < 1e-7);
}

TEST_CASE("continuity sign convention survives large rotations") {
    // a constant rotation with angle above pi: the folded product and the
    // continued product differ by the tracked branch
    LoopConnection c;
    c.n = 2;
    c.algebra = MatrixAlgebra::SO;
    const double th = 4.4;  // > pi, sin(th/2) > 0 still; push past 2 pi below
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
    A(0, 1) = -th;
    A(1, 0) = th;
    c.samples.assign(64, A.cast<Complex>());
    AwReport r = aw_check(c);
    // the continued angle is th itself, not its fold
    REQUIRE(std::abs(r.angles[0] - th) < 1e-8);
    REQUIRE(std::abs(r.supertrace - 2.0 * kI * std::sin(th / 2.0)) < 1e-8);
    REQUIRE(r.absdiff < 1e-8);
}
