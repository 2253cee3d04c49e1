#pragma once

#include "cwlaser/index_sets.hpp"
#include "cwlaser/params.hpp"
#include "cwlaser/rational.hpp"
#include "cwlaser/trilinear.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwlaser {

inline constexpr const char* kToolVersion = "1.0.0";

/// Nontrivial dimension of the level-4 matmul blocks by type: (1, 2q, q²+2, 2q, 1).
inline std::vector<long long> level4_dims(int q) {
    const long long Q = q;
    return {1, 2 * Q, Q * Q + 2, 2 * Q, 1};
}

/// Closed forms of the level-8 boundary dimensions.
inline std::vector<long long> level8_dims(int q) {
    const long long Q = q;
    const long long q2 = Q * Q, q3 = q2 * Q, q4 = q3 * Q;
    return {1, 4 * Q, 6 * q2 + 4, 4 * q3 + 12 * Q, q4 + 12 * q2 + 6, 4 * q3 + 12 * Q, 6 * q2 + 4, 4 * Q, 1};
}

/// Σ_v c_v c_{j-v} over the level-4 splits of a boundary pair {j, k} with j + k = 8.
inline long long level8_value_convolution(int j, int k, int q) {
    if (j < 0 || k < 0 || j + k != 8) throw std::invalid_argument("level8_value_convolution: need j + k = 8");
    auto c = level4_dims(q);
    long long total = 0;
    for (int v = 0; v <= 4; ++v) {
        int w = j - v;
        if (w >= 0 && w <= 4) total += c[v] * c[w];
    }
    return total;
}

inline std::vector<long long> level_dims(int level, int q) {
    if (level == 4) return level4_dims(q);
    if (level == 8) return level8_dims(q);
    throw std::invalid_argument("level must be 4 or 8");
}

/// Shape of a boundary block. The zero coordinate picks the nontrivial dimension:
/// j = 0 -> m, k = 0 -> n, i = 0 -> p.
inline MatMulShape shape_of(int level, const Triple& t, int q) {
    if (t.i < 0 || t.j < 0 || t.k < 0 || t.sum() != level)
        throw std::invalid_argument("shape_of: " + to_string(t) + " outside S_" + std::to_string(level));
    if (!t.has_zero())
        throw std::invalid_argument("shape_of: " + to_string(t) + " is not isomorphic to a matrix product");
    auto c = level_dims(level, q);
    return {t.j == 0 ? c[t.i] : 1, t.k == 0 ? c[t.i] : 1, t.i == 0 ? c[t.j] : 1};
}

/// One row of the isomorphism table: every member is ⟨m,n,p⟩ with dims[slot] nontrivial.
struct ShapeFamily {
    std::vector<Triple> members;
    int slot = 0;   // 0 -> m, 1 -> n, 2 -> p; -1 for ⟨1,1,1⟩
    int index = 0;  // position in level_dims
};

inline const std::vector<ShapeFamily>& shape_families(int level) {
    static const std::vector<ShapeFamily> l4 = {
        {{{0, 0, 4}, {0, 4, 0}, {4, 0, 0}}, -1, 0},
        {{{0, 1, 3}, {0, 3, 1}}, 2, 1},
        {{{1, 0, 3}, {3, 0, 1}}, 0, 1},
        {{{1, 3, 0}, {3, 1, 0}}, 1, 1},
        {{{0, 2, 2}}, 2, 2},
        {{{2, 0, 2}}, 0, 2},
        {{{2, 2, 0}}, 1, 2},
    };
    static const std::vector<ShapeFamily> l8 = {
        {{{0, 0, 8}, {0, 8, 0}, {8, 0, 0}}, -1, 0},
        {{{0, 1, 7}, {0, 7, 1}}, 2, 1},
        {{{1, 0, 7}, {7, 0, 1}}, 0, 1},
        {{{1, 7, 0}, {7, 1, 0}}, 1, 1},
        {{{0, 2, 6}, {0, 6, 2}}, 2, 2},
        {{{2, 0, 6}, {6, 0, 2}}, 0, 2},
        {{{2, 6, 0}, {6, 2, 0}}, 1, 2},
        {{{0, 3, 5}, {0, 5, 3}}, 2, 3},
        {{{3, 0, 5}, {5, 0, 3}}, 0, 3},
        {{{3, 5, 0}, {5, 3, 0}}, 1, 3},
        {{{0, 4, 4}}, 2, 4},
        {{{4, 0, 4}}, 0, 4},
        {{{4, 4, 0}}, 1, 4},
    };
    if (level == 4) return l4;
    if (level == 8) return l8;
    throw std::invalid_argument("shape_families: level must be 4 or 8");
}

inline MatMulShape family_shape(const ShapeFamily& f, int level, int q) {
    MatMulShape s{1, 1, 1};
    if (f.slot < 0) return s;
    long long d = level_dims(level, q)[f.index];
    (f.slot == 0 ? s.m : (f.slot == 1 ? s.n : s.p)) = d;
    return s;
}

struct ShapeTableReport {
    bool ok = true;
    int level = 0;
    int q = 0;
    std::size_t families = 0;
    std::size_t matmul_blocks = 0;
    std::size_t non_matmul_blocks = 0;
    std::vector<std::string> mismatches;
};

/// Decomposes F_q^{(x) level/2} symbolically and runs recognize_matmul on every block:
/// table members must have the tabulated shape, every block with all indices positive
/// must be rejected.
inline ShapeTableReport shape_table_check(int level, int q, std::size_t budget = kDefaultMonomialBudget) {
    ShapeTableReport rep;
    rep.level = level;
    rep.q = q;
    auto blocks = block_decompose(tensor_power(cw_tensor(q), level / 2, budget));
    const auto& fams = shape_families(level);
    rep.families = fams.size();
    std::map<Triple, MatMulShape> expected;
    for (const auto& f : fams)
        for (const auto& t : f.members) expected.emplace(t, family_shape(f, level, q));
    for (const auto& t : simplex(level)) {
        auto it = blocks.find(t);
        if (it == blocks.end()) {
            rep.ok = false;
            rep.mismatches.push_back(to_string(t) + ": block missing");
            continue;
        }
        auto shape = recognize_matmul(it->second);
        auto ex = expected.find(t);
        if (ex != expected.end()) {
            if (!shape || !(*shape == ex->second)) {
                rep.ok = false;
                rep.mismatches.push_back(to_string(t) + ": expected " + to_string(ex->second) + " got " +
                                         (shape ? to_string(*shape) : std::string("not a matmul")));
            } else {
                ++rep.matmul_blocks;
            }
        } else if (t.all_positive()) {
            if (shape) {
                rep.ok = false;
                rep.mismatches.push_back(to_string(t) + ": expected not a matmul, got " + to_string(*shape));
            } else {
                ++rep.non_matmul_blocks;
            }
        } else {
            rep.ok = false;
            rep.mismatches.push_back(to_string(t) + ": boundary block missing from the table");
        }
    }
    return rep;
}

/// Per-N log-dimensions of the matrix product extracted from the T_211 family.
template <class Real>
struct HatShape {
    Real m_exp, n_exp, p_exp;
    bool trivial = false;  // q = 1
};

template <class Real>
HatShape<Real> hat_shape(const Real& alpha112, const Real& alpha211, const Real& b, const Real& b_tilde, int q) {
    using std::log;
    if (alpha112 < Real(0) || alpha211 < Real(0)) throw std::domain_error("hat_shape: negative weight");
    if (!(b > Real(0) && b < Real(1)) || !(b_tilde > Real(0) && b_tilde < Real(1)))
        throw std::domain_error("hat_shape: b and b_tilde must lie in (0,1)");
    const Real lq = log(Real(q));
    Real mn = (alpha112 + alpha211 * b_tilde) * lq;
    Real p = (Real(2) * alpha112 * b + alpha211 * (Real(1) - b_tilde)) * lq;
    return {mn, mn, p, q == 1};
}

template <class Real>
struct QR {
    Real lnQ;    // from the m dimensions
    Real lnQ_n;  // from the n dimensions
    Real lnR;
};

template <class Real>
QR<Real> compute_QR(const BasicParamSet<Real>& p) {
    using std::log;
    const auto c4 = level4_dims(p.q);
    const auto c8 = level8_dims(p.q);
    QR<Real> out{Real(0), Real(0), Real(0)};
    for (const auto& t : s8()) {
        const Real& w = p.a.at(t);
        if (t.j == 0) out.lnQ += w * log(Real(c8[t.i]));
        if (t.k == 0) out.lnQ_n += w * log(Real(c8[t.i]));
        if (t.i == 0) out.lnR += w * log(Real(c8[t.j]));
    }
    auto alpha = alpha_weights(p.a, p.locals);
    for (const auto& t : s4()) {
        if (in_s4_bar(t)) continue;
        const Real& w = alpha.at(t);
        if (t.j == 0) out.lnQ += w * log(Real(c4[t.i]));
        if (t.k == 0) out.lnQ_n += w * log(Real(c4[t.i]));
        if (t.i == 0) out.lnR += w * log(Real(c4[t.j]));
    }
    auto hat = hat_shape(alpha.at({1, 1, 2}), alpha.at({2, 1, 1}), p.b, p.b_tilde, p.q);
    out.lnQ += hat.m_exp;
    out.lnQ_n += hat.n_exp;
    out.lnR += hat.p_exp;
    return out;
}

template <class Real>
Real compute_M(const BasicParamSet<Real>& p) {
    using std::log;
    auto proj = projections(p.a, 8);
    Real lnM = entropy(proj.A);
    for (const auto& t : s8_bar()) lnM += p.a.at(t) * entropy(local_projections(p.locals.at(t), t).A);
    auto alpha = alpha_weights(p.a, p.locals);
    const Real& a112 = alpha.at({1, 1, 2});
    const Real& a211 = alpha.at({2, 1, 1});
    const Real ln2 = log(Real(2));
    const Real& bt = p.b_tilde;
    lnM += (Real(2) * a112 + a211) * ln2;
    lnM -= a211 * (bt * log(Real(2) * bt) + (Real(1) - bt) * log(Real(1) - bt));
    return lnM;
}

struct BoundResult {
    double lnQ = 0, lnQ_n = 0, lnR = 0, lnM = 0;
    double k = 0, nu = 0;
    double Q() const { return std::exp(lnQ); }
    double R() const { return std::exp(lnR); }
    double M() const { return std::exp(lnM); }
};

class BoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class Real>
struct BoundValue {
    Real lnQ, lnQ_n, lnR, lnM, k, nu;
};

/// Evaluates (k, ν) without consulting the constraints.
template <class Real>
BoundValue<Real> evaluate_bound(const BasicParamSet<Real>& p) {
    using std::log;
    auto qr = compute_QR(p);
    if (!(qr.lnQ > Real(0))) throw BoundError("Q <= 1: unusable parameter point");
    Real lnM = compute_M(p);
    Real nu = (Real(4) * log(Real(p.q + 2)) - lnM) / qr.lnQ;
    return {qr.lnQ, qr.lnQ_n, qr.lnR, lnM, qr.lnR / qr.lnQ, nu};
}

template <class Real>
BoundResult to_result(const BoundValue<Real>& v) {
    return {as_double(v.lnQ), as_double(v.lnQ_n), as_double(v.lnR), as_double(v.lnM), as_double(v.k),
            as_double(v.nu)};
}

/// Theorem-level bound ω(k) ≤ ν. Refuses when any constraint fails unless `report_only`.
inline BoundResult bound(const ParamSet& p, const Tolerances& tol = kCertificateTolerances,
                         bool report_only = false) {
    auto rep = check_all_exact<double>(p, tol);
    if (!rep.pass() && !report_only) {
        std::string what = "constraints fail:";
        for (const auto& e : rep.failures()) what += " " + e.label;
        throw BoundError(what);
    }
    return to_result(evaluate_bound(convert<double>(p)));
}

// ---------------------------------------------------------------------------
// Certificates

struct BoundCertificate {
    ParamSet params;
    BoundResult result;
    ConstraintReport report;
    Tolerances tolerances = kCertificateTolerances;
    std::string tool_version = kToolVersion;
    std::optional<double> k_target;
};

inline BoundCertificate make_certificate(const ParamSet& p, std::optional<double> k_target = std::nullopt,
                                         const Tolerances& tol = kCertificateTolerances) {
    BoundCertificate c;
    c.params = p;
    c.report = check_all_exact<double>(p, tol);
    if (!c.report.pass()) {
        std::string what = "cannot certify, constraints fail:";
        for (const auto& e : c.report.failures()) what += " " + e.label;
        throw BoundError(what);
    }
    c.result = to_result(evaluate_bound(convert<double>(p)));
    c.tolerances = tol;
    c.k_target = k_target;
    return c;
}

inline nlohmann::json to_json(const BoundResult& r) {
    return {{"lnQ", r.lnQ}, {"lnQ_n", r.lnQ_n}, {"lnR", r.lnR}, {"lnM", r.lnM}, {"k", r.k}, {"nu", r.nu}};
}

inline nlohmann::json to_json(const BoundCertificate& c) {
    nlohmann::json j;
    j["format"] = "cwlaser-certificate";
    j["tool"] = {{"name", "cwlaser"}, {"version", c.tool_version}};
    j["tolerances"] = {{"equality", c.tolerances.equality},
                       {"inequality", c.tolerances.inequality},
                       {"symmetry", c.tolerances.symmetry},
                       {"normalization", c.tolerances.normalization},
                       {"match_relative", 1e-10}};
    if (c.k_target) j["k_target"] = *c.k_target;
    j["params"] = to_json(c.params);
    j["result"] = to_json(c.result);
    j["report"] = to_json(c.report);
    return j;
}

inline std::string certificate_text(const BoundCertificate& c) { return to_json(c).dump(2) + "\n"; }

inline BoundCertificate certificate_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("params") || !j.contains("result"))
        throw std::invalid_argument("certificate must contain 'params' and 'result'");
    BoundCertificate c;
    c.params = params_from_json(j["params"]);
    const auto& r = j["result"];
    auto num = [&](const char* key) {
        if (!r.contains(key) || !r[key].is_number()) throw std::invalid_argument(std::string("result.") + key);
        return r[key].get<double>();
    };
    c.result = {num("lnQ"), num("lnQ_n"), num("lnR"), num("lnM"), num("k"), num("nu")};
    if (j.contains("report")) c.report = report_from_json(j["report"]);
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        c.tolerances.equality = t.value("equality", kCertificateTolerances.equality);
        c.tolerances.inequality = t.value("inequality", kCertificateTolerances.inequality);
        c.tolerances.symmetry = t.value("symmetry", kCertificateTolerances.symmetry);
        c.tolerances.normalization = t.value("normalization", kCertificateTolerances.normalization);
    }
    // A certificate may not loosen the verifier's tolerances.
    c.tolerances.equality = std::min(c.tolerances.equality, kCertificateTolerances.equality);
    c.tolerances.inequality = std::min(c.tolerances.inequality, kCertificateTolerances.inequality);
    c.tolerances.symmetry = std::min(c.tolerances.symmetry, kCertificateTolerances.symmetry);
    c.tolerances.normalization = std::min(c.tolerances.normalization, kCertificateTolerances.normalization);
    if (j.contains("k_target") && j["k_target"].is_number()) c.k_target = j["k_target"].get<double>();
    if (j.contains("tool") && j["tool"].contains("version")) c.tool_version = j["tool"]["version"].get<std::string>();
    return c;
}

enum class Precision { Double, Dec50 };

struct CertificateVerdict {
    bool pass = false;
    std::vector<std::string> reasons;
    ConstraintReport report;
    BoundResult recomputed;
};

inline std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Re-derives the report and (k, ν) from the stored parameters alone.
inline CertificateVerdict check_certificate(const BoundCertificate& c, Precision precision = Precision::Double,
                                            double match_rel = 1e-10) {
    CertificateVerdict v;
    try {
        v.report = precision == Precision::Double ? check_all_exact<double>(c.params, c.tolerances)
                                                  : check_all_exact<Dec50>(c.params, c.tolerances);
    } catch (const std::exception& e) {
        v.reasons.push_back(std::string("STRUCTURE ") + e.what());
        return v;
    }
    for (const auto& e : v.report.failures()) {
        v.reasons.push_back(e.label + " residual=" + format_double(e.residual) + " tolerance=" +
                            format_double(e.tolerance));
    }
    try {
        v.recomputed = precision == Precision::Double ? to_result(evaluate_bound(convert<double>(c.params)))
                                                      : to_result(evaluate_bound(convert<Dec50>(c.params)));
    } catch (const std::exception& e) {
        v.reasons.push_back(std::string("VALUE ") + e.what());
        return v;
    }
    auto compare = [&](const char* name, double stored, double fresh) {
        double scale = std::max(std::abs(fresh), 1e-300);
        double rel = std::abs(stored - fresh) / scale;
        if (!(rel <= match_rel)) {
            v.reasons.push_back(std::string(name) + " mismatch stored=" + format_double(stored) +
                                " recomputed=" + format_double(fresh) + " relative=" + format_double(rel));
        }
    };
    compare("nu", c.result.nu, v.recomputed.nu);
    compare("k", c.result.k, v.recomputed.k);
    compare("lnQ", c.result.lnQ, v.recomputed.lnQ);
    compare("lnR", c.result.lnR, v.recomputed.lnR);
    compare("lnM", c.result.lnM, v.recomputed.lnM);
    double qdiff = std::abs(v.recomputed.lnQ - v.recomputed.lnQ_n) / std::max(std::abs(v.recomputed.lnQ), 1e-300);
    if (!(qdiff <= 1e-10)) v.reasons.push_back("lnQ m/n routes disagree relative=" + format_double(qdiff));
    if (c.k_target && !(std::abs(v.recomputed.k - *c.k_target) <= 1e-6)) {
        v.reasons.push_back("k misses target " + format_double(*c.k_target) + " by " +
                            format_double(v.recomputed.k - *c.k_target));
    }
    v.pass = v.reasons.empty();
    return v;
}

/// "k,nu" rows with full double precision.
inline void write_curve_csv(std::ostream& os, const std::vector<std::pair<double, double>>& rows) {
    os << "k,nu\n";
    for (const auto& [k, nu] : rows) os << format_double(k) << "," << format_double(nu) << "\n";
}

}  // namespace cwlaser
