#pragma once

#include "cwlaser/index_sets.hpp"
#include "cwlaser/params.hpp"
#include "cwlaser/value.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace cwlaser {

/// Flat potential parametrization of the whole parameter space.
///
/// x = [λ_0..λ_8, μ_0..μ_8, per canonical local block (L_0..L_i, M_0..M_j, N_0..N_k), logit b, logit b̃]
/// with a(ijk) ∝ exp(λ_i + μ_j + μ_k) and each local weight ∝ exp of its potential averaged
/// over the symmetry orbit. C1, C2, D1, D2 hold identically on this family.
class DenseLayout {
public:
    struct Local {
        Triple t;
        std::size_t a_index = 0;            // position of t in S_8
        std::vector<Triple> support;
        std::vector<std::size_t> s_alpha;   // S_4 position of s
        std::vector<std::size_t> r_alpha;   // S_4 position of t - s
        std::vector<int> s_i, s_j;          // bins for the local projections
        std::vector<std::vector<std::pair<int, double>>> rows;  // potential of s as a sparse row of x
    };

    DenseLayout() {
        for (std::size_t n = 0; n < s8().size(); ++n) {
            const auto& t = s8()[n];
            a_params_.push_back({t.i, 9 + t.j, 9 + t.k});
        }
        int offset = 18;
        std::map<Triple, int> base;
        for (const auto& t : s8_bar()) {
            if (t.j > t.k) continue;
            base[t] = offset;
            offset += t.i + t.j + t.k + 3;
        }
        for (const auto& t : s8_bar()) {
            Local loc;
            loc.t = t;
            loc.a_index = *index_in(s8(), t);
            loc.support = local_support(t);
            const bool canonical = t.j <= t.k;
            const Triple c = canonical ? t : t.swap_yz();
            const int b0 = base.at(c);
            auto idx = [&](const Triple& s) {
                return std::array<int, 3>{b0 + s.i, b0 + c.i + 1 + s.j, b0 + c.i + 1 + c.j + 1 + s.k};
            };
            for (const auto& s : loc.support) {
                loc.s_alpha.push_back(*index_in(s4(), s));
                loc.r_alpha.push_back(*index_in(s4(), t - s));
                loc.s_i.push_back(s.i);
                loc.s_j.push_back(s.j);
                const Triple sc = canonical ? s : s.swap_yz();
                std::vector<Triple> terms{sc, c - sc};
                if (c.j == c.k) {
                    terms.push_back(sc.swap_yz());
                    terms.push_back((c - sc).swap_yz());
                }
                std::map<int, double> row;
                for (const auto& term : terms)
                    for (int p : idx(term)) row[p] += 1.0 / static_cast<double>(terms.size());
                loc.rows.emplace_back(row.begin(), row.end());
            }
            locals_.push_back(std::move(loc));
        }
        b_index_ = offset;
        bt_index_ = offset + 1;
        size_ = offset + 2;
        idx112_ = *index_in(s4(), {1, 1, 2});
        idx211_ = *index_in(s4(), {2, 1, 1});
    }

    int size() const { return size_; }
    int b_index() const { return b_index_; }
    int bt_index() const { return bt_index_; }
    std::size_t idx112() const { return idx112_; }
    std::size_t idx211() const { return idx211_; }
    const std::vector<std::array<int, 3>>& a_params() const { return a_params_; }
    const std::vector<Local>& locals() const { return locals_; }

    static const DenseLayout& instance() {
        static const DenseLayout layout;
        return layout;
    }

private:
    std::vector<std::array<int, 3>> a_params_;
    std::vector<Local> locals_;
    int b_index_ = 0, bt_index_ = 0, size_ = 0;
    std::size_t idx112_ = 0, idx211_ = 0;
};

/// q-dependent coefficients of ln Q (m and n routes) and ln R.
struct DenseConstants {
    int q = 0;
    double lnq = 0, K = 0;  // K = 4 ln(q+2)
    std::vector<double> q8, qn8, r8, q4, qn4, r4;

    explicit DenseConstants(int q_) : q(q_) {
        lnq = std::log(static_cast<double>(q));
        K = 4.0 * std::log(static_cast<double>(q + 2));
        auto c4 = level4_dims(q), c8 = level8_dims(q);
        for (const auto& t : s8()) {
            q8.push_back(t.j == 0 ? std::log(static_cast<double>(c8[t.i])) : 0.0);
            qn8.push_back(t.k == 0 ? std::log(static_cast<double>(c8[t.i])) : 0.0);
            r8.push_back(t.i == 0 ? std::log(static_cast<double>(c8[t.j])) : 0.0);
        }
        for (const auto& t : s4()) {
            bool skip = in_s4_bar(t);
            q4.push_back(!skip && t.j == 0 ? std::log(static_cast<double>(c4[t.i])) : 0.0);
            qn4.push_back(!skip && t.k == 0 ? std::log(static_cast<double>(c4[t.i])) : 0.0);
            r4.push_back(!skip && t.i == 0 ? std::log(static_cast<double>(c4[t.j])) : 0.0);
        }
    }
};

/// Forward intermediates, kept for the reverse pass.
template <class T>
struct DenseEval {
    std::vector<T> a, log_a;
    std::vector<std::vector<T>> w, log_w;
    std::vector<std::vector<T>> At, Bt;
    std::vector<T> hAt, hBt;
    std::vector<T> A8, B8, alpha;
    T b, bt;
    T HA8, HB8, SHA, SHB;
    T lnM, lnQ, lnQ_n, lnR, nu, c3, d3, e3;
    T floor_penalty;  // Σ max(0, log_floor − log w)² over every weight
};

namespace detail {

template <class T>
void softmax(const std::vector<T>& z, std::vector<T>& p, std::vector<T>& logp) {
    using std::exp;
    using std::log;
    T m = z[0];
    for (const auto& v : z)
        if (v > m) m = v;
    T s(0);
    p.resize(z.size());
    for (std::size_t n = 0; n < z.size(); ++n) {
        p[n] = exp(z[n] - m);
        s += p[n];
    }
    T lse = m + log(s);
    logp.resize(z.size());
    for (std::size_t n = 0; n < z.size(); ++n) {
        p[n] = p[n] / s;
        logp[n] = z[n] - lse;
    }
}

template <class T>
T entropy_nz(const std::vector<T>& p) {
    using std::log;
    T h(0);
    for (const auto& v : p)
        if (v > T(0)) h -= v * log(v);
    return h;
}

template <class T>
T sigmoid(const T& z) {
    using std::exp;
    return T(1) / (T(1) + exp(-z));
}

}  // namespace detail

template <class T>
void dense_forward(const DenseLayout& L, const DenseConstants& C, const T* x, DenseEval<T>& e,
                   double log_floor = std::log(1e-12)) {
    using std::log;
    const auto& ap = L.a_params();
    std::vector<T> la(ap.size());
    for (std::size_t n = 0; n < ap.size(); ++n) la[n] = x[ap[n][0]] + x[ap[n][1]] + x[ap[n][2]];
    detail::softmax(la, e.a, e.log_a);

    e.floor_penalty = T(0);
    auto floor_term = [&](const T& lw) {
        T gap = T(log_floor) - lw;
        if (gap > T(0)) e.floor_penalty += gap * gap;
    };
    for (const auto& lw : e.log_a) floor_term(lw);

    e.A8.assign(9, T(0));
    e.B8.assign(9, T(0));
    for (std::size_t n = 0; n < ap.size(); ++n) {
        const auto& t = s8()[n];
        e.A8[t.i] += e.a[n];
        e.B8[t.j] += e.a[n];
    }
    e.HA8 = detail::entropy_nz(e.A8);
    e.HB8 = detail::entropy_nz(e.B8);

    const auto& locals = L.locals();
    e.w.resize(locals.size());
    e.log_w.resize(locals.size());
    e.At.resize(locals.size());
    e.Bt.resize(locals.size());
    e.hAt.resize(locals.size());
    e.hBt.resize(locals.size());
    e.alpha.assign(s4().size(), T(0));
    e.SHA = T(0);
    e.SHB = T(0);
    for (std::size_t l = 0; l < locals.size(); ++l) {
        const auto& loc = locals[l];
        std::vector<T> z(loc.support.size());
        for (std::size_t s = 0; s < z.size(); ++s) {
            T v(0);
            for (const auto& [p, c] : loc.rows[s]) v += T(c) * x[p];
            z[s] = v;
        }
        detail::softmax(z, e.w[l], e.log_w[l]);
        for (const auto& lw : e.log_w[l]) floor_term(lw);
        const T& at = e.a[loc.a_index];
        e.At[l].assign(loc.t.i + 1, T(0));
        e.Bt[l].assign(loc.t.j + 1, T(0));
        for (std::size_t s = 0; s < z.size(); ++s) {
            T m = at * e.w[l][s];
            e.alpha[loc.s_alpha[s]] += m;
            e.alpha[loc.r_alpha[s]] += m;
            e.At[l][loc.s_i[s]] += e.w[l][s];
            e.Bt[l][loc.s_j[s]] += e.w[l][s];
        }
        e.hAt[l] = detail::entropy_nz(e.At[l]);
        e.hBt[l] = detail::entropy_nz(e.Bt[l]);
        e.SHA += at * e.hAt[l];
        e.SHB += at * e.hBt[l];
    }

    e.b = detail::sigmoid(x[L.b_index()]);
    e.bt = detail::sigmoid(x[L.bt_index()]);
    const T a112 = e.alpha[L.idx112()];
    const T a211 = e.alpha[L.idx211()];
    const T ln2 = T(std::log(2.0));
    const T hb = -e.b * log(e.b) - (T(1) - e.b) * log(T(1) - e.b);
    const T hbt = -e.bt * log(e.bt) - (T(1) - e.bt) * log(T(1) - e.bt);

    e.lnM = e.HA8 + e.SHA + T(2) * a112 * ln2 + a211 * (ln2 - e.bt * ln2 + hbt);
    e.lnQ = (a112 + a211 * e.bt) * T(C.lnq);
    e.lnQ_n = e.lnQ;
    e.lnR = (T(2) * a112 * e.b + a211 * (T(1) - e.bt)) * T(C.lnq);
    for (std::size_t n = 0; n < e.a.size(); ++n) {
        e.lnQ += e.a[n] * T(C.q8[n]);
        e.lnQ_n += e.a[n] * T(C.qn8[n]);
        e.lnR += e.a[n] * T(C.r8[n]);
    }
    for (std::size_t s = 0; s < e.alpha.size(); ++s) {
        e.lnQ += e.alpha[s] * T(C.q4[s]);
        e.lnQ_n += e.alpha[s] * T(C.qn4[s]);
        e.lnR += e.alpha[s] * T(C.r4[s]);
    }
    e.c3 = e.HB8 - e.HA8;
    e.d3 = e.SHB - e.SHA;
    e.e3 = a211 * (e.bt * ln2 - hbt) + a112 * (hb - e.b * ln2);
    e.nu = (T(C.K) - e.lnM) / e.lnQ;
}

/// Adjoint seeds for a linear combination of the model outputs.
struct DenseSeeds {
    double nu = 0, lnQ = 0, lnR = 0, c3 = 0, d3 = 0, e3 = 0, floor = 0;
};

/// Reverse pass: grad = ∂(Σ seed·output)/∂x.
inline void dense_backward(const DenseLayout& L, const DenseConstants& C, const DenseEval<double>& e,
                           const DenseSeeds& s, double* grad, double log_floor = std::log(1e-12)) {
    const int np = L.size();
    std::fill(grad, grad + np, 0.0);
    const double ln2 = std::log(2.0);

    const double bar_lnM = -s.nu / e.lnQ;
    const double bar_lnQ = s.lnQ - s.nu * e.nu / e.lnQ;
    const double bar_lnR = s.lnR;
    const double bar_HA8 = bar_lnM - s.c3;
    const double bar_HB8 = s.c3;
    const double bar_SHA = bar_lnM - s.d3;
    const double bar_SHB = s.d3;

    const double a112 = e.alpha[L.idx112()];
    const double a211 = e.alpha[L.idx211()];
    const double b = e.b, bt = e.bt;
    const double hb = -b * std::log(b) - (1 - b) * std::log(1 - b);
    const double hbt = -bt * std::log(bt) - (1 - bt) * std::log(1 - bt);
    const double dhb = std::log((1 - b) / b);
    const double dhbt = std::log((1 - bt) / bt);

    std::vector<double> bar_alpha(e.alpha.size());
    for (std::size_t k = 0; k < bar_alpha.size(); ++k) bar_alpha[k] = bar_lnQ * C.q4[k] + bar_lnR * C.r4[k];
    bar_alpha[L.idx112()] += bar_lnM * 2 * ln2 + bar_lnQ * C.lnq + bar_lnR * 2 * b * C.lnq + s.e3 * (hb - b * ln2);
    bar_alpha[L.idx211()] += bar_lnM * (ln2 - bt * ln2 + hbt) + bar_lnQ * bt * C.lnq +
                             bar_lnR * (1 - bt) * C.lnq + s.e3 * (bt * ln2 - hbt);
    const double bar_bt = bar_lnM * a211 * (-ln2 + dhbt) + bar_lnQ * a211 * C.lnq - bar_lnR * a211 * C.lnq +
                          s.e3 * a211 * (ln2 - dhbt);
    const double bar_b = bar_lnR * 2 * a112 * C.lnq + s.e3 * a112 * (dhb - ln2);
    grad[L.b_index()] += bar_b * b * (1 - b);
    grad[L.bt_index()] += bar_bt * bt * (1 - bt);

    // ∂/∂a of every term that reads a directly
    const std::size_t na = e.a.size();
    std::vector<double> bar_a(na);
    for (std::size_t n = 0; n < na; ++n) {
        const auto& t = s8()[n];
        double g = bar_lnQ * C.q8[n] + bar_lnR * C.r8[n];
        g += bar_HA8 * -(std::log(e.A8[t.i]) + 1.0);
        g += bar_HB8 * -(std::log(e.B8[t.j]) + 1.0);
        bar_a[n] = g;
    }

    // floor penalty acts on log weights: d(log p_n)/dz = e_n − p
    auto floor_adj = [&](double lw) {
        double gap = log_floor - lw;
        return gap > 0 ? -2.0 * s.floor * gap : 0.0;
    };

    const auto& locals = L.locals();
    for (std::size_t l = 0; l < locals.size(); ++l) {
        const auto& loc = locals[l];
        const double at = e.a[loc.a_index];
        const auto& w = e.w[l];
        bar_a[loc.a_index] += bar_SHA * e.hAt[l] + bar_SHB * e.hBt[l];
        std::vector<double> bar_w(w.size());
        double acc_alpha = 0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            double ba = bar_alpha[loc.s_alpha[k]] + bar_alpha[loc.r_alpha[k]];
            acc_alpha += w[k] * ba;
            bar_w[k] = at * ba;
            bar_w[k] += at * bar_SHA * -(std::log(e.At[l][loc.s_i[k]]) + 1.0);
            bar_w[k] += at * bar_SHB * -(std::log(e.Bt[l][loc.s_j[k]]) + 1.0);
        }
        bar_a[loc.a_index] += acc_alpha;
        // softmax reverse plus the floor term on log w
        double dot = 0, fsum = 0;
        std::vector<double> fl(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            dot += w[k] * bar_w[k];
            fl[k] = floor_adj(e.log_w[l][k]);
            fsum += fl[k];
        }
        for (std::size_t k = 0; k < w.size(); ++k) {
            double bz = w[k] * (bar_w[k] - dot) + fl[k] - w[k] * fsum;
            if (bz == 0) continue;
            for (const auto& [p, c] : loc.rows[k]) grad[p] += c * bz;
        }
    }

    double dot = 0, fsum = 0;
    std::vector<double> fl(na);
    for (std::size_t n = 0; n < na; ++n) {
        dot += e.a[n] * bar_a[n];
        fl[n] = floor_adj(e.log_a[n]);
        fsum += fl[n];
    }
    const auto& ap = L.a_params();
    for (std::size_t n = 0; n < na; ++n) {
        double bz = e.a[n] * (bar_a[n] - dot) + fl[n] - e.a[n] * fsum;
        grad[ap[n][0]] += bz;
        grad[ap[n][1]] += bz;
        grad[ap[n][2]] += bz;
    }
}

/// Materializes the distributions encoded by x.
inline BasicParamSet<double> dense_to_params(const DenseLayout& L, int q, const double* x) {
    DenseConstants C(q);
    DenseEval<double> e;
    dense_forward(L, C, x, e);
    BasicParamSet<double> p;
    p.q = q;
    for (std::size_t n = 0; n < e.a.size(); ++n) p.a.emplace(s8()[n], e.a[n]);
    for (std::size_t l = 0; l < L.locals().size(); ++l) {
        const auto& loc = L.locals()[l];
        auto& dst = p.locals[loc.t];
        for (std::size_t k = 0; k < loc.support.size(); ++k) dst.emplace(loc.support[k], e.w[l][k]);
    }
    p.b = e.b;
    p.b_tilde = e.bt;
    return p;
}

/// Exact parameters from floating-point ones. Symmetric partners receive the identical
/// rational, and each distribution is renormalized exactly by spreading the remainder
/// evenly over the symmetry orbit of its largest entry.
inline ParamSet rationalize(const BasicParamSet<double>& p) {
    ParamSet out;
    out.q = p.q;
    {
        Triple best{};
        double best_w = -1;
        for (const auto& [t, w] : p.a) {
            if (t.j > t.k) continue;
            Rational r = rational_from_double(w);
            out.a[t] = r;
            out.a[t.swap_yz()] = r;
            if (w > best_w) {
                best_w = w;
                best = t;
            }
        }
        Rational sum = 0;
        for (const auto& [t, r] : out.a) sum += r;
        std::vector<Triple> orbit{best};
        if (best.swap_yz() != best) orbit.push_back(best.swap_yz());
        Rational share = (Rational(1) - sum) / static_cast<long>(orbit.size());
        for (const auto& t : orbit) out.a[t] += share;
    }
    for (const auto& [t, loc] : p.locals) {
        if (t.j > t.k) continue;
        const Triple partner = t.swap_yz();
        auto orbit_of = [&](const Triple& s) {
            std::vector<Triple> o{s, t - s};
            if (t.j == t.k) {
                o.push_back(s.swap_yz());
                o.push_back((t - s).swap_yz());
            }
            std::sort(o.begin(), o.end());
            o.erase(std::unique(o.begin(), o.end()), o.end());
            return o;
        };
        auto& dst = out.locals[t];
        Triple best{};
        double best_w = -1;
        for (const auto& [s, w] : loc) {
            auto o = orbit_of(s);
            if (o.front() != s) continue;  // representative = smallest orbit member
            Rational r = rational_from_double(w);
            for (const auto& m : o) dst[m] = r;
            if (w > best_w) {
                best_w = w;
                best = s;
            }
        }
        Rational sum = 0;
        for (const auto& [s, r] : dst) sum += r;
        auto o = orbit_of(best);
        Rational share = (Rational(1) - sum) / static_cast<long>(o.size());
        for (const auto& m : o) dst[m] += share;
        if (partner != t) {
            auto& pd = out.locals[partner];
            for (const auto& [s, r] : dst) pd[s.swap_yz()] = r;
        }
    }
    out.b = rational_from_double(p.b);
    out.b_tilde = rational_from_double(p.b_tilde);
    return out;
}

}  // namespace cwlaser
