#pragma once

#include "cwlaser/index_sets.hpp"
#include "cwlaser/rational.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwlaser {

using Dec50 = boost::multiprecision::cpp_dec_float_50;

template <class Real>
Real real_cast(const Rational& r) {
    if constexpr (std::is_same_v<Real, Rational>) {
        return r;
    } else if constexpr (std::is_same_v<Real, double>) {
        return r.convert_to<double>();
    } else {
        return Real(numerator(r).str()) / Real(denominator(r).str());
    }
}

template <class Real>
double as_double(const Real& x) {
    if constexpr (std::is_arithmetic_v<Real>) {
        return static_cast<double>(x);
    } else {
        return x.template convert_to<double>();
    }
}

/// Full parameter vector: the distribution a on S_8, one local distribution per
/// triple of S̄_8 (keyed by that triple, supported on its local support) and b, b̃.
template <class Real>
struct BasicParamSet {
    int q = 0;
    std::map<Triple, Real> a;
    std::map<Triple, std::map<Triple, Real>> locals;
    Real b{};
    Real b_tilde{};

    bool operator==(const BasicParamSet&) const = default;
};

using ParamSet = BasicParamSet<Rational>;

template <class To, class From>
BasicParamSet<To> convert(const BasicParamSet<From>& p) {
    static_assert(std::is_same_v<From, Rational>, "conversion is defined from exact parameters");
    BasicParamSet<To> out;
    out.q = p.q;
    for (const auto& [t, w] : p.a) out.a.emplace(t, real_cast<To>(w));
    for (const auto& [t, loc] : p.locals) {
        auto& dst = out.locals[t];
        for (const auto& [s, w] : loc) dst.emplace(s, real_cast<To>(w));
    }
    out.b = real_cast<To>(p.b);
    out.b_tilde = real_cast<To>(p.b_tilde);
    return out;
}

/// Throws std::invalid_argument unless every key set matches the index sets and
/// every weight lies strictly inside (0,1).
template <class Real>
void validate_structure(const BasicParamSet<Real>& p) {
    auto interior = [](const Real& w) { return w > Real(0) && w < Real(1); };
    if (p.q < 1) throw std::invalid_argument("q must be positive");
    if (p.a.size() != s8().size()) throw std::invalid_argument("a must have exactly 45 entries");
    for (const auto& t : s8()) {
        auto it = p.a.find(t);
        if (it == p.a.end()) throw std::invalid_argument("a is missing " + to_string(t));
        if (!interior(it->second)) throw std::invalid_argument("a(" + to_string(t) + ") outside (0,1)");
    }
    if (p.locals.size() != s8_bar().size()) throw std::invalid_argument("expected 21 local distributions");
    for (const auto& t : s8_bar()) {
        auto it = p.locals.find(t);
        if (it == p.locals.end()) throw std::invalid_argument("missing local distribution " + to_string(t));
        auto support = local_support(t);
        if (it->second.size() != support.size())
            throw std::invalid_argument("local " + to_string(t) + " has wrong support size");
        for (const auto& s : support) {
            auto jt = it->second.find(s);
            if (jt == it->second.end())
                throw std::invalid_argument("local " + to_string(t) + " is missing " + to_string(s));
            if (!interior(jt->second))
                throw std::invalid_argument("local " + to_string(t) + "(" + to_string(s) + ") outside (0,1)");
        }
    }
    if (!interior(p.b)) throw std::invalid_argument("b outside (0,1)");
    if (!interior(p.b_tilde)) throw std::invalid_argument("b_tilde outside (0,1)");
}

// ---------------------------------------------------------------------------
// Constraint reports

enum class ConstraintKind { Equality, Inequality };

struct ConstraintEntry {
    std::string id;     // C1 C2 C3 D1 D2 D3 E3 NORM
    std::string label;  // e.g. "C2[3]"
    double residual = 0;
    double tolerance = 0;
    ConstraintKind kind = ConstraintKind::Equality;
    bool pass = false;
    bool duplicate = false;  // repeated equation, reported but not counted twice
};

inline ConstraintEntry make_entry(std::string id, std::string label, double residual, double tol,
                                  ConstraintKind kind) {
    ConstraintEntry e{std::move(id), std::move(label), residual, tol, kind, false, false};
    e.pass = std::isfinite(residual) &&
             (kind == ConstraintKind::Equality ? std::abs(residual) <= tol : residual >= -tol);
    return e;
}

struct ConstraintReport {
    std::vector<ConstraintEntry> entries;

    bool pass() const {
        return !entries.empty() &&
               std::all_of(entries.begin(), entries.end(), [](const ConstraintEntry& e) { return e.pass; });
    }
    std::vector<ConstraintEntry> failures() const {
        std::vector<ConstraintEntry> out;
        for (const auto& e : entries)
            if (!e.pass) out.push_back(e);
        return out;
    }
    void append(const ConstraintReport& o) { entries.insert(entries.end(), o.entries.begin(), o.entries.end()); }
};

struct Tolerances {
    double equality = 1e-7;
    double inequality = 1e-10;
    double symmetry = 0.0;
    double normalization = 1e-12;
};

inline constexpr Tolerances kSearchTolerances{1e-7, 1e-10, 0.0, 1e-12};
inline constexpr Tolerances kCertificateTolerances{1e-8, 1e-10, 0.0, 0.0};

// ---------------------------------------------------------------------------
// Projections and entropies

template <class Real>
struct Projections {
    std::vector<Real> A, B, C;
};

/// Marginals of a distribution on S_t along each coordinate.
template <class Real>
Projections<Real> projections(const std::map<Triple, Real>& d, int t) {
    Projections<Real> p{std::vector<Real>(t + 1, Real(0)), std::vector<Real>(t + 1, Real(0)),
                        std::vector<Real>(t + 1, Real(0))};
    for (const auto& [x, w] : d) {
        if (x.i > t || x.j > t || x.k > t) throw std::invalid_argument("projections: triple exceeds level");
        p.A[x.i] += w;
        p.B[x.j] += w;
        p.C[x.k] += w;
    }
    return p;
}

/// Marginals of a local distribution of the level-8 triple t (A over 0..i, B over 0..j, C over 0..k).
template <class Real>
Projections<Real> local_projections(const std::map<Triple, Real>& d, const Triple& t) {
    Projections<Real> p{std::vector<Real>(t.i + 1, Real(0)), std::vector<Real>(t.j + 1, Real(0)),
                        std::vector<Real>(t.k + 1, Real(0))};
    for (const auto& [x, w] : d) {
        p.A.at(x.i) += w;
        p.B.at(x.j) += w;
        p.C.at(x.k) += w;
    }
    return p;
}

/// Shannon entropy in nats; zero entries contribute nothing.
template <class Real>
Real entropy(const std::vector<Real>& p) {
    using std::log;
    Real h(0);
    for (const auto& v : p)
        if (v > Real(0)) h -= v * log(v);
    return h;
}

template <class Real>
Real binary_entropy(const Real& x) {
    using std::log;
    return -x * log(x) - (Real(1) - x) * log(Real(1) - x);
}

// ---------------------------------------------------------------------------
// Constraint data

struct LogTerm {
    int coeff;
    Triple t;
};

/// The ten log-linear stationarity equations for a, written out term by term.
/// Equations 8 and 9 coincide (up to term order).
inline const std::vector<std::vector<LogTerm>>& c2_equations() {
    static const std::vector<std::vector<LogTerm>> eqs = {
        {{-1, {0, 1, 7}}, {1, {0, 2, 6}}, {1, {1, 0, 7}}, {-1, {1, 2, 5}}, {-1, {2, 0, 6}}, {1, {2, 1, 5}}},
        {{-1, {0, 1, 7}}, {1, {0, 2, 6}}, {1, {1, 0, 7}}, {-1, {1, 1, 6}}, {-1, {6, 0, 2}}, {1, {6, 1, 1}}},
        {{-1, {0, 1, 7}}, {1, {0, 3, 5}}, {1, {1, 0, 7}}, {-1, {1, 3, 4}}, {-1, {3, 0, 5}}, {1, {3, 1, 4}}},
        {{-1, {0, 1, 7}}, {1, {0, 4, 4}}, {1, {1, 0, 7}}, {-1, {1, 3, 4}}, {-1, {4, 0, 4}}, {1, {4, 1, 3}}},
        {{-1, {0, 1, 7}}, {1, {0, 3, 5}}, {1, {1, 0, 7}}, {-1, {1, 2, 5}}, {-1, {5, 0, 3}}, {1, {5, 1, 2}}},
        {{-1, {0, 1, 7}},
         {1, {0, 3, 5}},
         {1, {1, 0, 7}},
         {1, {1, 1, 6}},
         {-1, {1, 2, 5}},
         {-1, {1, 3, 4}},
         {-1, {2, 0, 6}},
         {1, {2, 2, 4}}},
        {{-1, {0, 1, 7}},
         {1, {0, 4, 4}},
         {1, {1, 0, 7}},
         {1, {1, 1, 6}},
         {-1, {1, 3, 4}},
         {-1, {1, 3, 4}},
         {-1, {2, 0, 6}},
         {1, {2, 3, 3}}},
        {{-1, {0, 1, 7}},
         {-1, {0, 2, 6}},
         {1, {0, 3, 5}},
         {1, {0, 4, 4}},
         {1, {1, 0, 7}},
         {1, {1, 1, 6}},
         {-1, {1, 3, 4}},
         {-1, {1, 3, 4}},
         {-1, {3, 0, 5}},
         {1, {3, 2, 3}}},
        {{-1, {0, 1, 7}},
         {-1, {0, 2, 6}},
         {1, {0, 4, 4}},
         {1, {0, 3, 5}},
         {1, {1, 0, 7}},
         {1, {1, 1, 6}},
         {-1, {1, 3, 4}},
         {-1, {1, 3, 4}},
         {-1, {3, 0, 5}},
         {1, {3, 2, 3}}},
        {{-1, {0, 1, 7}},
         {-1, {0, 2, 6}},
         {1, {0, 4, 4}},
         {1, {0, 3, 5}},
         {1, {1, 0, 7}},
         {1, {1, 1, 6}},
         {-1, {1, 3, 4}},
         {-1, {1, 2, 5}},
         {-1, {4, 0, 4}},
         {1, {4, 2, 2}}},
    };
    return eqs;
}

/// Equation indices (0-based) that repeat an earlier equation as a multiset of terms.
inline std::vector<std::size_t> c2_duplicate_indices() {
    auto canon = [](std::vector<LogTerm> e) {
        std::map<Triple, int> m;
        for (const auto& term : e) m[term.t] += term.coeff;
        return m;
    };
    std::vector<std::size_t> dup;
    const auto& eqs = c2_equations();
    for (std::size_t n = 0; n < eqs.size(); ++n)
        for (std::size_t r = 0; r < n; ++r)
            if (canon(eqs[n]) == canon(eqs[r])) {
                dup.push_back(n);
                break;
            }
    return dup;
}

struct LocalLogEquation {
    Triple block;
    std::vector<LogTerm> terms;
};

/// Stationarity equations for the three locals that keep two degrees of freedom.
inline const std::vector<LocalLogEquation>& d2_equations() {
    static const std::vector<LocalLogEquation> eqs = {
        {{2, 3, 3}, {{2, {2, 1, 1}}, {1, {1, 3, 0}}, {-1, {2, 0, 2}}, {-1, {2, 2, 0}}, {-1, {1, 1, 2}}}},
        {{3, 2, 3}, {{2, {1, 2, 1}}, {1, {3, 1, 0}}, {-1, {0, 2, 2}}, {-1, {2, 2, 0}}, {-1, {1, 1, 2}}}},
        {{3, 3, 2}, {{2, {1, 1, 2}}, {1, {0, 3, 1}}, {-1, {2, 0, 2}}, {-1, {0, 2, 2}}, {-1, {2, 1, 1}}}},
    };
    return eqs;
}

// ---------------------------------------------------------------------------
// Individual checks

/// C1 residual computed exactly for rationals, in Real otherwise.
template <class Real>
ConstraintReport check_C1(const std::map<Triple, Real>& a, const Tolerances& tol = kCertificateTolerances) {
    Real worst(0);
    for (const auto& [t, w] : a) {
        auto it = a.find(t.swap_yz());
        if (it == a.end()) throw std::invalid_argument("check_C1: missing " + to_string(t.swap_yz()));
        Real d = w - it->second;
        if (d < Real(0)) d = -d;
        if (d > worst) worst = d;
    }
    double r = as_double(worst);
    // A nonzero exact difference must never round to a pass.
    if (worst != Real(0) && r == 0.0) r = std::numeric_limits<double>::min();
    return {{make_entry("C1", "C1", r, tol.symmetry, ConstraintKind::Equality)}};
}

template <class Real>
ConstraintReport check_C2(const std::map<Triple, Real>& a, const Tolerances& tol = kCertificateTolerances) {
    using std::log;
    ConstraintReport rep;
    auto dups = c2_duplicate_indices();
    const auto& eqs = c2_equations();
    for (std::size_t n = 0; n < eqs.size(); ++n) {
        Real r(0);
        for (const auto& term : eqs[n]) {
            const Real& w = a.at(term.t);
            if (!(w > Real(0))) throw std::domain_error("check_C2: non-positive weight at " + to_string(term.t));
            r += Real(term.coeff) * log(w);
        }
        auto e = make_entry("C2", "C2[" + std::to_string(n + 1) + "]", as_double(r), tol.equality,
                            ConstraintKind::Equality);
        e.duplicate = std::find(dups.begin(), dups.end(), n) != dups.end();
        rep.entries.push_back(e);
    }
    return rep;
}

/// Residual Σ B ln B − Σ A ln A, i.e. H(A) − H(B) with the sign of the product inequality.
template <class Real>
ConstraintReport check_C3(const std::map<Triple, Real>& a, const Tolerances& tol = kCertificateTolerances) {
    auto p = projections(a, 8);
    Real r = entropy(p.B) - entropy(p.A);
    return {{make_entry("C3", "C3", as_double(r), tol.inequality, ConstraintKind::Inequality)}};
}

template <class Real>
ConstraintReport check_D1(const std::map<Triple, std::map<Triple, Real>>& locals,
                          const Tolerances& tol = kCertificateTolerances) {
    Real worst(0);
    auto bump = [&](const Real& x, const Real& y) {
        Real d = x - y;
        if (d < Real(0)) d = -d;
        if (d > worst) worst = d;
    };
    for (const auto& t : s8_bar()) {
        auto it = locals.find(t);
        if (it == locals.end()) throw std::invalid_argument("check_D1: missing local " + to_string(t));
        auto sw = locals.find(t.swap_yz());
        if (sw == locals.end()) throw std::invalid_argument("check_D1: missing local " + to_string(t.swap_yz()));
        for (const auto& [s, w] : it->second) {
            bump(w, it->second.at(t - s));
            bump(w, sw->second.at(s.swap_yz()));
        }
    }
    double r = as_double(worst);
    if (worst != Real(0) && r == 0.0) r = std::numeric_limits<double>::min();
    return {{make_entry("D1", "D1", r, tol.symmetry, ConstraintKind::Equality)}};
}

template <class Real>
ConstraintReport check_D2(const std::map<Triple, std::map<Triple, Real>>& locals,
                          const Tolerances& tol = kCertificateTolerances) {
    using std::log;
    ConstraintReport rep;
    for (const auto& eq : d2_equations()) {
        const auto& loc = locals.at(eq.block);
        Real r(0);
        for (const auto& term : eq.terms) {
            auto it = loc.find(term.t);
            if (it == loc.end()) throw std::invalid_argument("check_D2: " + to_string(term.t) + " outside support");
            if (!(it->second > Real(0))) throw std::domain_error("check_D2: non-positive weight");
            r += Real(term.coeff) * log(it->second);
        }
        rep.entries.push_back(make_entry("D2", "D2[" + to_string(eq.block) + "]", as_double(r), tol.equality,
                                         ConstraintKind::Equality));
    }
    return rep;
}

template <class Real>
ConstraintReport check_D3(const std::map<Triple, Real>& a, const std::map<Triple, std::map<Triple, Real>>& locals,
                          const Tolerances& tol = kCertificateTolerances) {
    Real r(0);
    for (const auto& t : s8_bar()) {
        auto p = local_projections(locals.at(t), t);
        r += a.at(t) * (entropy(p.B) - entropy(p.A));
    }
    return {{make_entry("D3", "D3", as_double(r), tol.inequality, ConstraintKind::Inequality)}};
}

/// α over S_4: the mass each level-4 block receives as a left or right factor.
template <class Real>
std::map<Triple, Real> alpha_weights(const std::map<Triple, Real>& a,
                                     const std::map<Triple, std::map<Triple, Real>>& locals) {
    std::map<Triple, Real> alpha;
    for (const auto& s : s4()) alpha.emplace(s, Real(0));
    for (const auto& t : s8_bar()) {
        auto lit = locals.find(t);
        if (lit == locals.end()) continue;
        const Real& at = a.at(t);
        for (const auto& [s, w] : lit->second) {
            alpha.at(s) += at * w;
            alpha.at(t - s) += at * w;
        }
    }
    return alpha;
}

template <class Real>
Real e3_residual(const Real& alpha112, const Real& alpha211, const Real& b, const Real& b_tilde) {
    using std::log;
    const Real ln2 = log(Real(2));
    return alpha211 * (b_tilde * ln2 - binary_entropy(b_tilde)) + alpha112 * (binary_entropy(b) - b * ln2);
}

template <class Real>
ConstraintReport check_E3(const Real& alpha112, const Real& alpha211, const Real& b, const Real& b_tilde,
                          const Tolerances& tol = kCertificateTolerances) {
    if (!(b > Real(0) && b < Real(1)) || !(b_tilde > Real(0) && b_tilde < Real(1))) {
        throw std::domain_error("check_E3: b and b_tilde must lie in (0,1)");
    }
    Real r = e3_residual(alpha112, alpha211, b, b_tilde);
    return {{make_entry("E3", "E3", as_double(r), tol.inequality, ConstraintKind::Inequality)}};
}

/// Normalization of a and of every local, reported as Σ − 1.
template <class Real>
ConstraintReport check_normalization(const BasicParamSet<Real>& p, const Tolerances& tol) {
    ConstraintReport rep;
    auto entry = [&](const std::string& label, Real sum) {
        Real r = sum - Real(1);
        double d = as_double(r);
        if (r != Real(0) && d == 0.0) d = r > Real(0) ? std::numeric_limits<double>::min() : -std::numeric_limits<double>::min();
        rep.entries.push_back(make_entry("NORM", label, d, tol.normalization, ConstraintKind::Equality));
    };
    Real total(0);
    for (const auto& [t, w] : p.a) total += w;
    entry("NORM[a]", total);
    Real worst(0);
    std::string worst_label = "NORM[locals]";
    for (const auto& [t, loc] : p.locals) {
        Real s(0);
        for (const auto& [x, w] : loc) s += w;
        Real d = s - Real(1);
        if (d < Real(0)) d = -d;
        if (d > worst) {
            worst = d;
            worst_label = "NORM[" + to_string(t) + "]";
        }
    }
    entry(worst_label, Real(1) + worst);
    return rep;
}

/// All constraint families on a floating-point parameter set.
template <class Real>
ConstraintReport check_all(const BasicParamSet<Real>& p, const Tolerances& tol = kCertificateTolerances) {
    validate_structure(p);
    ConstraintReport rep = check_normalization(p, tol);
    rep.append(check_C1(p.a, tol));
    rep.append(check_C2(p.a, tol));
    rep.append(check_C3(p.a, tol));
    rep.append(check_D1(p.locals, tol));
    rep.append(check_D2(p.locals, tol));
    rep.append(check_D3(p.a, p.locals, tol));
    auto alpha = alpha_weights(p.a, p.locals);
    rep.append(check_E3(alpha.at({1, 1, 2}), alpha.at({2, 1, 1}), p.b, p.b_tilde, tol));
    return rep;
}

/// Exact parameters: symmetry and normalization are checked in rational arithmetic,
/// the logarithmic constraints in `Real`.
template <class Real = double>
ConstraintReport check_all_exact(const ParamSet& p, const Tolerances& tol = kCertificateTolerances) {
    validate_structure(p);
    auto f = convert<Real>(p);
    ConstraintReport rep = check_normalization(p, tol);
    rep.append(check_C1(p.a, tol));
    rep.append(check_C2(f.a, tol));
    rep.append(check_C3(f.a, tol));
    rep.append(check_D1(p.locals, tol));
    rep.append(check_D2(f.locals, tol));
    rep.append(check_D3(f.a, f.locals, tol));
    auto alpha = alpha_weights(f.a, f.locals);
    rep.append(check_E3(alpha.at({1, 1, 2}), alpha.at({2, 1, 1}), f.b, f.b_tilde, tol));
    return rep;
}

// ---------------------------------------------------------------------------
// Construction helpers

/// Uniform a, uniform locals, b = b̃ = 1/2.
inline ParamSet uniform_params(int q) {
    ParamSet p;
    p.q = q;
    for (const auto& t : s8()) p.a.emplace(t, Rational(1, static_cast<long>(s8().size())));
    for (const auto& t : s8_bar()) {
        auto sup = local_support(t);
        auto& loc = p.locals[t];
        for (const auto& s : sup) loc.emplace(s, Rational(1, static_cast<long>(sup.size())));
    }
    p.b = Rational(1, 2);
    p.b_tilde = Rational(1, 2);
    return p;
}

/// Averages a over the y/z swap.
template <class Real>
std::map<Triple, Real> symmetrize_a(const std::map<Triple, Real>& a) {
    std::map<Triple, Real> out;
    for (const auto& [t, w] : a) out.emplace(t, (w + a.at(t.swap_yz())) / Real(2));
    return out;
}

/// Averages every local over its D1 orbit (reflection and the swap to the partner block).
template <class Real>
std::map<Triple, std::map<Triple, Real>> symmetrize_locals(const std::map<Triple, std::map<Triple, Real>>& locals) {
    std::map<Triple, std::map<Triple, Real>> out;
    for (const auto& [t, loc] : locals) {
        const auto& partner = locals.at(t.swap_yz());
        auto& dst = out[t];
        for (const auto& [s, w] : loc) {
            Triple r = t - s;
            dst.emplace(s, (w + loc.at(r) + partner.at(s.swap_yz()) + partner.at(r.swap_yz())) / Real(4));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ParamSet& p) {
    nlohmann::json j;
    j["q"] = p.q;
    nlohmann::json a = nlohmann::json::object();
    for (const auto& [t, w] : p.a) a[to_string(t)] = to_string(w);
    j["a"] = a;
    nlohmann::json locals = nlohmann::json::object();
    for (const auto& [t, loc] : p.locals) {
        nlohmann::json l = nlohmann::json::object();
        for (const auto& [s, w] : loc) l[to_string(s)] = to_string(w);
        locals[to_string(t)] = l;
    }
    j["locals"] = locals;
    j["b"] = to_string(p.b);
    j["b_tilde"] = to_string(p.b_tilde);
    return j;
}

/// Parses and structurally validates a ParamSet document. Throws std::invalid_argument.
inline ParamSet params_from_json(const nlohmann::json& j) {
    auto str = [](const nlohmann::json& v, const std::string& what) {
        if (!v.is_string()) throw std::invalid_argument(what + " must be a rational string");
        return parse_rational(v.get<std::string>());
    };
    if (!j.is_object()) throw std::invalid_argument("parameter document must be an object");
    for (const char* key : {"q", "a", "locals", "b", "b_tilde"})
        if (!j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    ParamSet p;
    if (!j["q"].is_number_integer()) throw std::invalid_argument("q must be an integer");
    p.q = j["q"].get<int>();
    if (!j["a"].is_object() || !j["locals"].is_object()) throw std::invalid_argument("a and locals must be objects");
    for (const auto& [key, v] : j["a"].items()) p.a.emplace(parse_triple(key), str(v, "a[" + key + "]"));
    for (const auto& [key, loc] : j["locals"].items()) {
        if (!loc.is_object()) throw std::invalid_argument("locals[" + key + "] must be an object");
        auto& dst = p.locals[parse_triple(key)];
        for (const auto& [skey, v] : loc.items())
            dst.emplace(parse_triple(skey), str(v, "locals[" + key + "][" + skey + "]"));
    }
    p.b = str(j["b"], "b");
    p.b_tilde = str(j["b_tilde"], "b_tilde");
    validate_structure(p);
    return p;
}

inline nlohmann::json to_json(const ConstraintReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        entries.push_back({{"id", e.id},
                           {"label", e.label},
                           {"kind", e.kind == ConstraintKind::Equality ? "eq" : "ineq"},
                           {"residual", e.residual},
                           {"tolerance", e.tolerance},
                           {"pass", e.pass},
                           {"duplicate", e.duplicate}});
    }
    return {{"pass", r.pass()}, {"entries", entries}};
}

/// Stored reports are informational; verification always recomputes them.
inline ConstraintReport report_from_json(const nlohmann::json& j) {
    ConstraintReport r;
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        throw std::invalid_argument("report must contain an 'entries' array");
    try {
        for (const auto& e : j["entries"]) {
            ConstraintEntry c;
            c.id = e.at("id").get<std::string>();
            c.label = e.at("label").get<std::string>();
            c.kind = e.at("kind").get<std::string>() == "eq" ? ConstraintKind::Equality : ConstraintKind::Inequality;
            c.residual = e.at("residual").get<double>();
            c.tolerance = e.at("tolerance").get<double>();
            c.pass = e.at("pass").get<bool>();
            c.duplicate = e.value("duplicate", false);
            r.entries.push_back(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("report: ") + e.what());
    }
    return r;
}

}  // namespace cwlaser
