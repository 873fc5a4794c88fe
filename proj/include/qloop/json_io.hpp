#pragma once

// JSON (de)serialization for the file-facing types. Schemas are versioned
// under schemas/ in the repository.
//
//   QSeries:        {"terms":[{"num","den","re","im"},...] sorted by exponent,
//                    "trunc_num","trunc_den"}  (0/0 = exact, no truncation)
//   LoopConnection: {"n","algebra":"so"|"u"|"gl","samples":[[[re,im],...],...]}
//                   row-major matrices
//   TorusField:     {"l","N","tau":[re,im],"grid":[[[re,im],...] per coord]}
//   BChInput:       connection fields plus "generators", "curvature", "bfield"

#include <string>

#include <nlohmann/json.hpp>

#include "qloop/chern.hpp"
#include "qloop/elliptic.hpp"
#include "qloop/transport.hpp"

namespace qloop {

using Json = nlohmann::ordered_json;

inline Json to_json(const QSeries& s) {
    Json terms = Json::array();
    for (const auto& [e, c] : s.terms())
        terms.push_back({{"num", e.num()}, {"den", e.den()}, {"re", c.real()}, {"im", c.imag()}});
    Json j;
    j["terms"] = std::move(terms);
    if (s.trunc()) {
        j["trunc_num"] = s.trunc()->num();
        j["trunc_den"] = s.trunc()->den();
    } else {
        j["trunc_num"] = 0;
        j["trunc_den"] = 0;
    }
    return j;
}

inline QSeries qseries_from_json(const Json& j) {
    std::optional<Rational> trunc;
    std::int64_t tn = j.at("trunc_num").get<std::int64_t>();
    std::int64_t td = j.at("trunc_den").get<std::int64_t>();
    if (td != 0) trunc = Rational(tn, td);
    QSeries s{trunc};
    for (const auto& t : j.at("terms"))
        s.add_term(Rational(t.at("num").get<std::int64_t>(), t.at("den").get<std::int64_t>()),
                   Complex(t.at("re").get<double>(), t.at("im").get<double>()));
    return s;
}

inline Json to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i)
        for (int jx = 0; jx < m.cols(); ++jx)
            rows.push_back(Json::array({m(i, jx).real(), m(i, jx).imag()}));
    return rows;
}

inline Mat mat_from_json(const Json& j, int n) {
    if (static_cast<int>(j.size()) != n * n) throw ValidationError("matrix entry count mismatch");
    Mat m(n, n);
    int k = 0;
    for (const auto& e : j) {
        m(k / n, k % n) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        ++k;
    }
    return m;
}

inline Json to_json(const LoopConnection& c) {
    Json j;
    j["n"] = c.n;
    j["algebra"] = algebra_name(c.algebra);
    Json samples = Json::array();
    for (const Mat& A : c.samples) samples.push_back(to_json(A));
    j["samples"] = std::move(samples);
    return j;
}

inline LoopConnection loop_connection_from_json(const Json& j) {
    LoopConnection c;
    c.n = j.at("n").get<int>();
    std::string alg = j.at("algebra").get<std::string>();
    if (alg == "so")
        c.algebra = MatrixAlgebra::SO;
    else if (alg == "u")
        c.algebra = MatrixAlgebra::U;
    else if (alg == "gl")
        c.algebra = MatrixAlgebra::GL;
    else
        throw ValidationError("LoopConnection: unknown algebra '" + alg + "'");
    for (const auto& s : j.at("samples")) c.samples.push_back(mat_from_json(s, c.n));
    c.validate();
    return c;
}

inline Json to_json(const TorusField& f) {
    Json j;
    j["l"] = f.l;
    j["N"] = f.N;
    j["tau"] = Json::array({f.tau.real(), f.tau.imag()});
    Json grid = Json::array();
    for (const auto& comp : f.grid) {
        Json g = Json::array();
        for (const Complex& v : comp) g.push_back(Json::array({v.real(), v.imag()}));
        grid.push_back(std::move(g));
    }
    j["grid"] = std::move(grid);
    return j;
}

inline TorusField torus_field_from_json(const Json& j) {
    TorusField f;
    f.l = j.at("l").get<int>();
    f.N = j.at("N").get<int>();
    f.tau = Complex(j.at("tau").at(0).get<double>(), j.at("tau").at(1).get<double>());
    for (const auto& comp : j.at("grid")) {
        std::vector<Complex> g;
        g.reserve(comp.size());
        for (const auto& v : comp) g.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
        f.grid.push_back(std::move(g));
    }
    f.validate();
    return f;
}

inline Json to_json_sparse(const GrassMat& g) {
    Json arr = Json::array();
    for (const auto& [mask, m] : g.coeffs) arr.push_back({{"mask", mask}, {"matrix", to_json(m)}});
    return arr;
}

inline GrassMat grassmat_from_json(const Json& j, ExtAlgebra alg, int dim) {
    GrassMat g(alg, dim);
    for (const auto& e : j) {
        std::uint32_t mask = e.at("mask").get<std::uint32_t>();
        if (alg.g < 32 && mask >= (1u << alg.g))
            throw ValidationError("GrassMat: mask outside the generator range");
        g.coeffs[mask] = mat_from_json(e.at("matrix"), dim);
    }
    return g;
}

inline Json to_json(const BChInput& in) {
    Json j = to_json(in.conn);
    j["generators"] = in.algebra.g;
    Json curv = Json::array();
    for (const auto& g : in.curvature) curv.push_back(to_json_sparse(g));
    j["curvature"] = std::move(curv);
    if (!in.bfield.empty()) {
        Json bf = Json::array();
        for (const auto& g : in.bfield) bf.push_back(to_json_sparse(g));
        j["bfield"] = std::move(bf);
    }
    return j;
}

inline BChInput bch_input_from_json(const Json& j) {
    BChInput in;
    in.conn = loop_connection_from_json(j);
    in.algebra = ExtAlgebra(j.at("generators").get<int>());
    if (j.contains("curvature"))
        for (const auto& g : j.at("curvature"))
            in.curvature.push_back(grassmat_from_json(g, in.algebra, in.conn.n));
    if (j.contains("bfield"))
        for (const auto& g : j.at("bfield"))
            in.bfield.push_back(grassmat_from_json(g, in.algebra, in.conn.n));
    in.validate();
    return in;
}

inline Json to_json(const GrassScalar& s) {
    Json arr = Json::array();
    for (const auto& [mask, c] : s) arr.push_back({{"mask", mask}, {"re", c.real()}, {"im", c.imag()}});
    return arr;
}

}  // namespace qloop
