#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qloop/json_io.hpp"
#include "test_util.hpp"

using namespace qloop;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(QLOOP_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), p)) > 0) out.append(buf, n);
    int status = pclose(p);
    return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_CASE("cli: theta value and domain error") {
    auto r = run_cli("theta --ij 11 --z 0 --tau 0+2i");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["value"].get<std::string>().substr(0, 2) == "0+");
    REQUIRE(j["sum_vs_product"].get<double>() < 1e-12);
    // lower half-plane: domain error, exit 2
    REQUIRE(run_cli("theta --ij 00 --z 0 --tau 0-1i").exit_code == 2);
}

TEST_CASE("cli: eta transform check") {
    auto r = run_cli("eta --tau 0+1i --check-transform S");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["absdiff"].get<double>() < 1e-10);
}

TEST_CASE("cli: eisenstein quasimodular residual") {
    auto r = run_cli("eisenstein --k 2 --tau 0.2+1.3i --check quasimodular");
    REQUIRE(r.exit_code == 0);
    REQUIRE(Json::parse(r.out)["residual"].get<double>() < 1e-9);
}

TEST_CASE("cli: char values, anomaly and fock comparison") {
    auto r = run_cli("char --rep S11 --l 2 --z 0,0 --tau 0+1i");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(std::abs(std::stod(j["value"].get<std::string>())) < 1e-15);

    auto ra = run_cli("char --rep S10 --l 2 --anomaly");
    REQUIRE(Json::parse(ra.out)["anomaly"].get<std::string>() == "1/6");
    auto ra1 = run_cli("char --rep S10 --l 1 --anomaly");
    REQUIRE(Json::parse(ra1.out)["anomaly"].get<std::string>() == "1/12");

    auto rf = run_cli("char --rep S00 --l 2 --z 0,0 --qexpand 10 --against-fock");
    REQUIRE(rf.exit_code == 0);
    Json jf = Json::parse(rf.out);
    REQUIRE(jf["all_match"].get<bool>());
}

TEST_CASE("cli: aw on the bundled fixture with a gauge orbit") {
    std::string fixture = std::string(QLOOP_FIXTURE_DIR) + "/so4_smooth.json";
    auto r = run_cli("aw --loop " + fixture + " --gauge-orbit 5 --seed 7");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["absdiff"].get<double>() < 1e-7);
    REQUIRE(j["det_identity_err"].get<double>() < 1e-9);
    REQUIRE(j["orbit_spread"].get<double>() < 1e-7);
    // missing seed with --gauge-orbit: validation failure
    REQUIRE(run_cli("aw --loop " + fixture + " --gauge-orbit 2").exit_code == 3);
}

TEST_CASE("cli: aw rejects invalid loop files with exit 3") {
    std::string path = "bad_loop_test.json";
    {
        std::ofstream f(path);
        f << "{\"n\": 4, \"algebra\": \"so\", \"samples\": [";
        // one non-skew sample replicated 16 times
        for (int k = 0; k < 16; ++k) {
            f << (k ? "," : "") << "[";
            for (int i = 0; i < 16; ++i) f << (i ? "," : "") << "[1.0, 0.0]";
            f << "]";
        }
        f << "]}";
    }
    REQUIRE(run_cli("aw --loop " + path).exit_code == 3);
    std::remove(path.c_str());
}

TEST_CASE("cli: eaw positive and negative pairings") {
    auto r = run_cli("eaw --rep S00 --l 2 --tau 0+1.4i --samples 20 --seed 1");
    REQUIRE(r.exit_code == 0);
    REQUIRE(Json::parse(r.out)["unimodular_err"].get<double>() < 1e-8);
    auto rw = run_cli("eaw --rep S00 --l 2 --tau 0+1.4i --samples 20 --seed 1 --spin-pairing wrong");
    REQUIRE(rw.exit_code == 0);
    REQUIRE(Json::parse(rw.out)["unimodular_err"].get<double>() > 1e-2);
    // seed is mandatory
    REQUIRE(run_cli("eaw --rep S00 --l 2 --tau 0+1.4i --samples 5").exit_code == 3);
}

TEST_CASE("cli: zetadet odd spin at the origin and the Epstein oracle") {
    auto r = run_cli("zetadet --z 0 --tau 0+1i --spin 11");
    REQUIRE(r.exit_code == 0);
    REQUIRE(Json::parse(r.out)["closed_form"].get<double>() == 0.0);
    auto re = run_cli("zetadet --z 0.25 --tau 0+1i --spin 00 --epstein");
    REQUIRE(re.exit_code == 0);
    REQUIRE(Json::parse(re.out)["relative_diff"].get<double>() < 1e-6);
}

TEST_CASE("cli: degenerate emits a monotone relerr column") {
    auto r = run_cli("degenerate --z 0.3 --tmax 8");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["monotone"].get<bool>());
    REQUIRE(j["rows"].size() == 3);
}

TEST_CASE("cli: ehol on a generated field file") {
    Complex tau(0.1, 1.3);
    TorusField f;
    f.l = 1;
    f.N = 16;
    f.tau = tau;
    f.grid.assign(1, std::vector<Complex>(16 * 16));
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            f.grid[0][y * 16 + x] =
                Complex(0.2, 0.1) + 0.3 * std::exp(Complex(0.0, 2.0 * kPi) * (double(x) / 16.0)) *
                                        detail::dbar_symbol(1, 0, tau);
    std::string path = "ehol_field_test.json";
    {
        std::ofstream out(path);
        out << to_json(f).dump();
    }
    auto r = run_cli("ehol --field " + path + " --rep S00");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["reduction_residual"].get<double>() < 1e-10);
    std::remove(path.c_str());
}

TEST_CASE("cli: witten localization deviation") {
    auto r = run_cli("witten --l 1 --tau 0+1.5i --D 6");
    REQUIRE(r.exit_code == 0);
    REQUIRE(Json::parse(r.out)["localization_deviation"].get<double>() < 1e-8);
}

TEST_CASE("cli: reruns are byte-identical") {
    for (const std::string& cmd :
         {std::string("eaw --rep S01 --l 2 --tau 0+1.2i --samples 8 --seed 42"),
          std::string("theta --ij 10 --z 0.2+0.1i --tau 0.1+1.1i"),
          std::string("char --rep S11 --l 2 --z 0.1,0.2 --qexpand 6")}) {
        auto a = run_cli(cmd);
        auto b = run_cli(cmd);
        REQUIRE(a.exit_code == b.exit_code);
        REQUIRE(a.out == b.out);
    }
}

TEST_CASE("cli: csv output carries a header row") {
    auto r = run_cli("--format csv degenerate --z 0.3 --tmax 4");
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.rfind("im_tau,abs_q,relerr", 0) == 0);
}

TEST_CASE("complex literal grammar round trip") {
    // exercised through the CLI: values echo back in a+bi form
    auto r = run_cli("theta --ij 00 --z -1.5+0.25i --tau 0.125+1.5i");
    REQUIRE(r.exit_code == 0);
    Json j = Json::parse(r.out);
    REQUIRE(j["config"]["z"].get<std::string>() == "-1.5+0.25i");
    REQUIRE(j["config"]["tau"].get<std::string>() == "0.125+1.5i");
}

TEST_CASE("LoopConnection and BChInput JSON round trips") {
    LoopConnection c = testutil::random_so_loop(4, 32, 77);
    Json j = to_json(c);
    LoopConnection back = loop_connection_from_json(j);
    double dev = 0.0;
    for (int k = 0; k < c.K(); ++k) dev = std::max(dev, (c.samples[k] - back.samples[k]).cwiseAbs().maxCoeff());
    REQUIRE(dev == 0.0);

    ExtAlgebra alg(4);
    BChInput in;
    in.algebra = alg;
    in.conn = c;
    in.conn.algebra = MatrixAlgebra::GL;
    std::mt19937_64 rng(1);
    for (int k = 0; k < c.K(); ++k) {
        GrassMat g(alg, 4);
        g.coeffs[0b0011] = testutil::random_complex_mat(4, rng, 0.3);
        in.curvature.push_back(g);
    }
    BChInput back2 = bch_input_from_json(to_json(in));
    REQUIRE(back2.curvature.size() == in.curvature.size());
    REQUIRE((back2.curvature[3].coeffs[0b0011] - in.curvature[3].coeffs[0b0011]).cwiseAbs().maxCoeff() == 0.0);
}
