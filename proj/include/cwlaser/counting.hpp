#pragma once

#include "cwlaser/index_sets.hpp"
#include "cwlaser/params.hpp"
#include "cwlaser/rational.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace cwlaser {

struct ExactCount {
    BigInt value;
    long N = 0;
    std::string description;
};

inline BigInt factorial(long n) {
    BigInt f = 1;
    for (long r = 2; r <= n; ++r) f *= r;
    return f;
}

/// N! / Π (part·N)!. Every part·N must be a nonnegative integer and the parts must sum to 1.
inline ExactCount exact_multinomial(long N, const std::vector<Rational>& parts, std::string description = {}) {
    if (N < 0) throw std::invalid_argument("exact_multinomial: negative N");
    Rational total = 0;
    std::vector<long> counts;
    for (const auto& p : parts) {
        Rational c = p * N;
        if (c < 0 || denominator(c) != 1)
            throw std::invalid_argument("exact_multinomial: part " + to_string(p) + " times N is not a nonnegative integer");
        counts.push_back(numerator(c).convert_to<long>());
        total += p;
    }
    if (N > 0 && total != 1) throw std::invalid_argument("exact_multinomial: parts do not sum to 1");
    // Built as a product of binomials to keep intermediates small.
    BigInt value = 1;
    long used = 0;
    for (long c : counts) {
        for (long r = 1; r <= c; ++r) {
            value *= (used + r);
            value /= r;
        }
        used += c;
    }
    return {value, N, std::move(description)};
}

/// |ln(count(N))/N − ln_base| along the N ladder.
inline std::vector<double> asymptotic_rate_check(const std::function<BigInt(long)>& family, double ln_base,
                                                 const std::vector<long>& ladder) {
    std::vector<double> dev;
    for (long N : ladder) dev.push_back(std::abs(log_bigint(family(N)) / static_cast<double>(N) - ln_base));
    return dev;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t n = 1; n < v.size(); ++n)
        if (!(v[n] < v[n - 1])) return false;
    return true;
}

/// Number of sequences of type `A` (marginal over coordinate i) for the distribution a on S_8.
inline BigInt t_x_count(const std::map<Triple, Rational>& a, long N) {
    auto p = projections(a, 8);
    return exact_multinomial(N, p.A).value;
}

/// N*_X = Π_i multinomial(A(i)N; (a(ijk)N)_{j,k}).
inline BigInt n_star_x_count(const std::map<Triple, Rational>& a, long N) {
    auto p = projections(a, 8);
    BigInt total = 1;
    for (int i = 0; i <= 8; ++i) {
        if (p.A[i] == 0) continue;
        std::vector<Rational> parts;
        for (const auto& [t, w] : a)
            if (t.i == i) parts.push_back(w / p.A[i]);
        Rational Ni = p.A[i] * N;
        if (denominator(Ni) != 1) throw std::invalid_argument("n_star_x_count: A(i)N not integral");
        total *= exact_multinomial(numerator(Ni).convert_to<long>(), parts).value;
    }
    return total;
}

inline std::map<Triple, Rational> uniform_s8() {
    std::map<Triple, Rational> a;
    for (const auto& t : s8()) a.emplace(t, Rational(1, 45));
    return a;
}

// ---------------------------------------------------------------------------
// Degrees of freedom of the fixed-projection systems

enum class DofSystem { S8, S233 };

struct LinearSystem {
    std::vector<Triple> unknowns;
    std::vector<std::vector<Rational>> rows;
};

/// Homogeneous system "all three projections vanish" over the unknowns of `sys`.
inline LinearSystem projection_system(DofSystem sys) {
    LinearSystem ls;
    Triple dims;
    if (sys == DofSystem::S8) {
        ls.unknowns = s8();
        dims = {8, 8, 8};
    } else {
        ls.unknowns = local_support({2, 3, 3});
        dims = {2, 3, 3};
    }
    for (int c = 0; c < 3; ++c)
        for (int v = 0; v <= dims[c]; ++v) {
            std::vector<Rational> row(ls.unknowns.size(), Rational(0));
            for (std::size_t n = 0; n < ls.unknowns.size(); ++n)
                if (ls.unknowns[n][c] == v) row[n] = 1;
            ls.rows.push_back(row);
        }
    return ls;
}

struct RrefResult {
    std::size_t rank = 0;
    std::vector<std::vector<Rational>> rref;
    std::vector<std::size_t> pivots;
};

inline RrefResult exact_rref(std::vector<std::vector<Rational>> m) {
    RrefResult r;
    if (m.empty()) return r;
    const std::size_t cols = m.front().size();
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
        std::size_t piv = row;
        while (piv < m.size() && m[piv][col] == 0) ++piv;
        if (piv == m.size()) continue;
        std::swap(m[row], m[piv]);
        Rational inv = 1 / m[row][col];
        for (auto& x : m[row]) x *= inv;
        for (std::size_t o = 0; o < m.size(); ++o) {
            if (o == row || m[o][col] == 0) continue;
            Rational f = m[o][col];
            for (std::size_t c = 0; c < cols; ++c) m[o][c] -= f * m[row][c];
        }
        r.pivots.push_back(col);
        ++row;
    }
    r.rank = row;
    m.resize(row);
    r.rref = std::move(m);
    return r;
}

struct DofResult {
    std::size_t unknowns = 0;
    std::size_t rank = 0;
    std::size_t dof = 0;
};

/// Nullspace dimension of the projection system; `row_order` optionally permutes the equations.
inline DofResult projection_system_dof(DofSystem sys, const std::vector<std::size_t>& row_order = {}) {
    auto ls = projection_system(sys);
    auto rows = ls.rows;
    if (!row_order.empty()) {
        if (row_order.size() != rows.size()) throw std::invalid_argument("row_order has wrong length");
        std::vector<std::vector<Rational>> permuted;
        for (auto n : row_order) permuted.push_back(rows.at(n));
        rows = std::move(permuted);
    }
    auto r = exact_rref(rows);
    return {ls.unknowns.size(), r.rank, ls.unknowns.size() - r.rank};
}

/// Exact nullspace basis (one vector per free column).
inline std::vector<std::vector<Rational>> nullspace_basis(DofSystem sys) {
    auto ls = projection_system(sys);
    auto r = exact_rref(ls.rows);
    const std::size_t n = ls.unknowns.size();
    std::vector<char> is_pivot(n, 0);
    for (auto p : r.pivots) is_pivot[p] = 1;
    std::vector<std::vector<Rational>> basis;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        std::vector<Rational> v(n, Rational(0));
        v[f] = 1;
        for (std::size_t row = 0; row < r.pivots.size(); ++row) v[r.pivots[row]] = -r.rref[row][f];
        basis.push_back(v);
    }
    return basis;
}

struct StationarityResult {
    double gradient_norm = 0;  // ||projection of ∇ ln g onto the fixed-projection subspace||
    double residual_norm = 0;  // ||C2|| or ||D2|| residual vector
    bool stationary_by_gradient = false;
    bool stationary_by_residuals = false;
    bool consistent() const { return stationary_by_gradient == stationary_by_residuals; }
};

namespace detail {

inline double projected_gradient_norm(DofSystem sys, const std::vector<Triple>& unknowns,
                                      const std::map<Triple, double>& d) {
    auto basis = nullspace_basis(sys);
    Eigen::MatrixXd N(unknowns.size(), basis.size());
    for (std::size_t c = 0; c < basis.size(); ++c)
        for (std::size_t r = 0; r < unknowns.size(); ++r) N(r, c) = basis[c][r].convert_to<double>();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(N);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(N.rows(), N.cols());
    Eigen::VectorXd g(unknowns.size());
    for (std::size_t r = 0; r < unknowns.size(); ++r) {
        double w = d.at(unknowns[r]);
        if (!(w > 0)) throw std::domain_error("entropy_stationarity_check: boundary distribution");
        g(r) = -(std::log(w) + 1.0);
    }
    return (Q.transpose() * g).norm();
}

}  // namespace detail

/// Compares "∇ ln g vanishes on the fixed-projection subspace" with "the C2 residuals vanish".
inline StationarityResult entropy_stationarity_check(const std::map<Triple, double>& a, double tol = 1e-6) {
    StationarityResult r;
    r.gradient_norm = detail::projected_gradient_norm(DofSystem::S8, s8(), a);
    Tolerances t;
    t.equality = tol;
    double sq = 0;
    for (const auto& e : check_C2(a, t).entries) sq += e.residual * e.residual;
    r.residual_norm = std::sqrt(sq);
    r.stationary_by_gradient = r.gradient_norm <= tol;
    r.stationary_by_residuals = r.residual_norm <= tol;
    return r;
}

/// Same comparison for a local distribution of the block (2,3,3) against its D2 equation.
inline StationarityResult local_stationarity_check(const std::map<Triple, double>& a233, double tol = 1e-6) {
    StationarityResult r;
    r.gradient_norm = detail::projected_gradient_norm(DofSystem::S233, local_support({2, 3, 3}), a233);
    const auto& eq = d2_equations().front();
    double res = 0;
    for (const auto& term : eq.terms) res += term.coeff * std::log(a233.at(term.t));
    r.residual_norm = std::abs(res);
    r.stationary_by_gradient = r.gradient_norm <= tol;
    r.stationary_by_residuals = r.residual_norm <= tol;
    return r;
}

/// Every C2 equation balances for a(ijk) ∝ exp(λ_i + μ_j + μ_k): each λ index and each
/// μ index (counted over both j and k) has zero total coefficient.
inline bool c2_equations_balance() {
    for (const auto& eq : c2_equations()) {
        std::array<int, 9> lam{}, mu{};
        for (const auto& term : eq) {
            lam[term.t.i] += term.coeff;
            mu[term.t.j] += term.coeff;
            mu[term.t.k] += term.coeff;
        }
        for (int v = 0; v <= 8; ++v)
            if (lam[v] != 0 || mu[v] != 0) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Counts for the split of T_211

struct T211Counts {
    BigInt t_x, n_x, t_y, n_y;
};

struct T211Verdict {
    bool precondition_ok = false;
    bool exact_match = false;
    T211Counts closed_form;
    T211Counts enumerated;
    std::string detail;
};

inline BigInt binomial(long n, long k) {
    if (k < 0 || k > n) return 0;
    return exact_multinomial(n, {Rational(k, n == 0 ? 1 : n), Rational(n - k, n == 0 ? 1 : n)}).value;
}

namespace detail {

/// Number of words of length Σcounts over an alphabet with prescribed letter counts,
/// computed by a position-by-position dynamic program (independent of factorials).
inline BigInt count_words(const std::vector<long>& counts) {
    std::map<std::vector<long>, BigInt> layer{{std::vector<long>(counts.size(), 0), 1}};
    long len = std::accumulate(counts.begin(), counts.end(), 0L);
    for (long pos = 0; pos < len; ++pos) {
        std::map<std::vector<long>, BigInt> next;
        for (const auto& [state, ways] : layer)
            for (std::size_t l = 0; l < counts.size(); ++l) {
                if (state[l] >= counts[l]) continue;
                auto s = state;
                ++s[l];
                next[s] += ways;
            }
        layer = std::move(next);
    }
    return layer.count(counts) ? layer.at(counts) : BigInt(0);
}

/// Number of words over the four pieces t_011, t_101, t_110, t_200 with the given counts
/// whose projection on coordinate `coord` equals the fixed word `fixed`.
inline BigInt count_lifts(const std::vector<Triple>& pieces, const std::vector<long>& counts, int coord,
                          const std::vector<int>& fixed) {
    std::map<std::vector<long>, BigInt> layer{{std::vector<long>(pieces.size(), 0), 1}};
    for (int letter : fixed) {
        std::map<std::vector<long>, BigInt> next;
        for (const auto& [state, ways] : layer)
            for (std::size_t l = 0; l < pieces.size(); ++l) {
                if (pieces[l][coord] != letter || state[l] >= counts[l]) continue;
                auto s = state;
                ++s[l];
                next[s] += ways;
            }
        layer = std::move(next);
    }
    return layer.count(counts) ? layer.at(counts) : BigInt(0);
}

}  // namespace detail

/// Checks the four exact counts of the T_211 extraction for 2m factors and parameter b.
inline T211Verdict t211_counts_check(long m, const Rational& b) {
    T211Verdict v;
    Rational bm = b * m;
    if (m < 1 || b <= 0 || b >= 1 || denominator(bm) != 1) {
        v.detail = "precondition: b*m and (1-b)*m must be positive integers";
        return v;
    }
    v.precondition_ok = true;
    const long k = numerator(bm).convert_to<long>();  // bm
    const long r = m - k;                              // (1-b)m
    v.closed_form.t_x = exact_multinomial(2 * m, {Rational(r, 2 * m), Rational(r, 2 * m), Rational(2 * k, 2 * m)}).value;
    v.closed_form.n_x = binomial(2 * k, k);
    v.closed_form.t_y = binomial(2 * m, m);
    v.closed_form.n_y = binomial(m, r) * binomial(m, r);

    // pieces in order 011, 101, 110, 200 with multiplicities (1-b)m, bm, bm, (1-b)m
    const std::vector<Triple> pieces{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}, {2, 0, 0}};
    const std::vector<long> counts{r, k, k, r};
    // x letters: 0 -> r, 1 -> 2k, 2 -> r ; y letters: 0 -> k + r = m, 1 -> m
    v.enumerated.t_x = detail::count_words({r, 2 * k, r});
    v.enumerated.t_y = detail::count_words({m, m});
    std::vector<int> fixed_x;
    fixed_x.insert(fixed_x.end(), r, 0);
    fixed_x.insert(fixed_x.end(), 2 * k, 1);
    fixed_x.insert(fixed_x.end(), r, 2);
    v.enumerated.n_x = detail::count_lifts(pieces, counts, 0, fixed_x);
    std::vector<int> fixed_y;
    fixed_y.insert(fixed_y.end(), m, 0);
    fixed_y.insert(fixed_y.end(), m, 1);
    v.enumerated.n_y = detail::count_lifts(pieces, counts, 1, fixed_y);

    const auto& c = v.closed_form;
    const auto& e = v.enumerated;
    v.exact_match = c.t_x == e.t_x && c.n_x == e.n_x && c.t_y == e.t_y && c.n_y == e.n_y;
    v.detail = "T_X=" + c.t_x.str() + " N_X=" + c.n_x.str() + " T_Y=" + c.t_y.str() + " N_Y=" + c.n_y.str();
    return v;
}

/// ln of the exponential bases of the four counts, per 2m factors.
struct T211Bases {
    double t_x, n_x, t_y, n_y;
};

inline T211Bases t211_log_bases(double b) {
    const double l2 = std::log(2.0);
    const double hb = -b * std::log(b) - (1 - b) * std::log(1 - b);
    return {l2 - b * std::log(2 * b) - (1 - b) * std::log(1 - b), b * l2, l2, hb};
}

}  // namespace cwlaser
