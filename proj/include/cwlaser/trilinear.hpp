#pragma once

#include "cwlaser/index_sets.hpp"
#include "cwlaser/rational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwlaser {

using IndexTuple = std::vector<int>;

/// Key of a monomial x_I y_J z_K.
struct MonomialKey {
    IndexTuple x, y, z;
    auto operator<=>(const MonomialKey&) const = default;
};

struct Monomial {
    MonomialKey key;
    Rational coeff;
};

/// Raised when a symbolic construction would exceed the configured monomial cap.
class SizeBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMonomialBudget = 10'000'000;

/// Exact sparse trilinear form over the variables of F_q^{(x) power}.
/// Monomials are kept in lexicographic (x,y,z) order; zero coefficients are never stored.
class TrilinearForm {
public:
    TrilinearForm(int q, int power) : q_(q), power_(power) {
        if (q < 1) throw std::invalid_argument("q must be positive");
        if (power < 1) throw std::invalid_argument("power must be positive");
    }

    int q() const { return q_; }
    int power() const { return power_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const std::map<MonomialKey, Rational>& terms() const { return terms_; }

    Rational coefficient(const MonomialKey& key) const {
        auto it = terms_.find(key);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    /// Adds `coeff` to the monomial at `key`, validating index ranges.
    void add(MonomialKey key, const Rational& coeff) {
        validate(key.x);
        validate(key.y);
        validate(key.z);
        if (coeff == 0) return;
        auto [it, inserted] = terms_.try_emplace(std::move(key), coeff);
        if (!inserted) {
            it->second += coeff;
            if (it->second == 0) terms_.erase(it);
        }
    }

    TrilinearForm& operator+=(const TrilinearForm& o) {
        if (o.q_ != q_ || o.power_ != power_) throw std::invalid_argument("adding forms of different shape");
        for (const auto& [k, c] : o.terms_) add(k, c);
        return *this;
    }

    bool operator==(const TrilinearForm& o) const {
        return q_ == o.q_ && power_ == o.power_ && terms_ == o.terms_;
    }

private:
    void validate(const IndexTuple& t) const {
        if (static_cast<int>(t.size()) != power_) throw std::invalid_argument("index tuple length differs from power");
        for (int e : t)
            if (e < 0 || e > q_ + 1) throw std::invalid_argument("index entry out of range [0, q+1]");
    }

    int q_;
    int power_;
    std::map<MonomialKey, Rational> terms_;
};

inline TrilinearForm operator+(TrilinearForm a, const TrilinearForm& b) {
    a += b;
    return a;
}

/// F_q = sum_i (x0 yi zi + xi y0 zi + xi yi z0) + x0 y0 z_{q+1} + x0 y_{q+1} z0 + x_{q+1} y0 z0.
inline TrilinearForm cw_tensor(int q) {
    if (q < 1) throw std::invalid_argument("cw_tensor: q must be positive");
    TrilinearForm f(q, 1);
    for (int i = 1; i <= q; ++i) {
        f.add({{0}, {i}, {i}}, 1);
        f.add({{i}, {0}, {i}}, 1);
        f.add({{i}, {i}, {0}}, 1);
    }
    f.add({{0}, {0}, {q + 1}}, 1);
    f.add({{0}, {q + 1}, {0}}, 1);
    f.add({{q + 1}, {0}, {0}}, 1);
    return f;
}

inline IndexTuple concat(const IndexTuple& a, const IndexTuple& b) {
    IndexTuple out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

inline TrilinearForm tensor_product(const TrilinearForm& s, const TrilinearForm& t,
                                    std::size_t budget = kDefaultMonomialBudget) {
    if (s.q() != t.q()) throw std::invalid_argument("tensor_product: mismatched q");
    if (s.size() != 0 && t.size() > budget / s.size()) {
        throw SizeBudgetError("tensor_product: " + std::to_string(s.size()) + " x " + std::to_string(t.size()) +
                              " monomials exceeds budget " + std::to_string(budget));
    }
    TrilinearForm out(s.q(), s.power() + t.power());
    for (const auto& [ks, cs] : s.terms())
        for (const auto& [kt, ct] : t.terms())
            out.add({concat(ks.x, kt.x), concat(ks.y, kt.y), concat(ks.z, kt.z)}, cs * ct);
    return out;
}

inline TrilinearForm tensor_power(const TrilinearForm& t, int n, std::size_t budget = kDefaultMonomialBudget) {
    if (n < 1) throw std::invalid_argument("tensor_power: exponent must be positive");
    // Fail before doing any work if the final size is out of reach.
    double predicted = std::pow(static_cast<double>(t.size()), n);
    if (predicted > static_cast<double>(budget)) {
        throw SizeBudgetError("tensor_power: " + std::to_string(t.size()) + "^" + std::to_string(n) +
                              " monomials exceeds budget " + std::to_string(budget));
    }
    TrilinearForm out = t;
    for (int r = 1; r < n; ++r) out = tensor_product(out, t, budget);
    return out;
}

/// 0 -> 0, 1..q -> 1, q+1 -> 2.
inline int index_type(int entry, int q) {
    if (entry < 0 || entry > q + 1) throw std::out_of_range("index_type: entry outside [0, q+1]");
    if (entry == 0) return 0;
    return entry == q + 1 ? 2 : 1;
}

inline int tuple_type(const IndexTuple& t, int q) {
    int s = 0;
    for (int e : t) s += index_type(e, q);
    return s;
}

/// Groups the monomials of a form by (sum of x types, sum of y types, sum of z types).
inline std::map<Triple, TrilinearForm> block_decompose(const TrilinearForm& t) {
    std::map<Triple, TrilinearForm> blocks;
    for (const auto& [k, c] : t.terms()) {
        Triple key{tuple_type(k.x, t.q()), tuple_type(k.y, t.q()), tuple_type(k.z, t.q())};
        auto it = blocks.try_emplace(key, t.q(), t.power()).first;
        it->second.add(k, c);
    }
    return blocks;
}

/// All fifteen blocks T_ijk of F_q^{(x)2}, keyed by (i,j,k) in S_4.
inline std::map<Triple, TrilinearForm> level4_components(int q) {
    return block_decompose(tensor_power(cw_tensor(q), 2));
}

/// Builds level-8 blocks T_ijk = sum over S_ijk of T_uvw (x) T_u'v'w' from the level-4 blocks.
inline TrilinearForm level8_component(const std::map<Triple, TrilinearForm>& level4, const Triple& t, int q,
                                      std::size_t budget = kDefaultMonomialBudget) {
    TrilinearForm out(q, 4);
    for (const auto& left : s4()) {
        Triple right = t - left;
        if (right.i < 0 || right.j < 0 || right.k < 0 || right.sum() != 4) continue;
        out += tensor_product(level4.at(left), level4.at(right), budget);
        if (out.size() > budget) throw SizeBudgetError("level8_component: budget exceeded");
    }
    return out;
}

inline TrilinearForm component(int level, const Triple& t, int q, std::size_t budget = kDefaultMonomialBudget) {
    if (level != 4 && level != 8) throw std::invalid_argument("component: level must be 4 or 8");
    if (t.i < 0 || t.j < 0 || t.k < 0 || t.sum() != level) {
        throw std::invalid_argument("component: triple " + to_string(t) + " outside S_" + std::to_string(level));
    }
    auto l4 = level4_components(q);
    if (level == 4) return l4.at(t);
    return level8_component(l4, t, q, budget);
}

/// Level-4 blocks written out from their closed forms (T_004, T_013, T_022, T_112 and
/// role permutations). Independent of block_decompose; used as a cross-check.
inline TrilinearForm explicit_level4_component(const Triple& t, int q) {
    if (t.i < 0 || t.j < 0 || t.k < 0 || t.sum() != 4) throw std::invalid_argument("not in S_4");
    using Terms = std::vector<std::array<IndexTuple, 3>>;
    const int Q = q + 1;
    auto base = [&](const Triple& b) {
        Terms out;
        if (b == Triple{0, 0, 4}) {
            out.push_back({IndexTuple{0, 0}, IndexTuple{0, 0}, IndexTuple{Q, Q}});
        } else if (b == Triple{0, 1, 3}) {
            for (int i = 1; i <= q; ++i) out.push_back({IndexTuple{0, 0}, IndexTuple{i, 0}, IndexTuple{i, Q}});
            for (int k = 1; k <= q; ++k) out.push_back({IndexTuple{0, 0}, IndexTuple{0, k}, IndexTuple{Q, k}});
        } else if (b == Triple{0, 2, 2}) {
            out.push_back({IndexTuple{0, 0}, IndexTuple{Q, 0}, IndexTuple{0, Q}});
            out.push_back({IndexTuple{0, 0}, IndexTuple{0, Q}, IndexTuple{Q, 0}});
            for (int i = 1; i <= q; ++i)
                for (int k = 1; k <= q; ++k) out.push_back({IndexTuple{0, 0}, IndexTuple{i, k}, IndexTuple{i, k}});
        } else {  // (1,1,2)
            for (int i = 1; i <= q; ++i) out.push_back({IndexTuple{i, 0}, IndexTuple{i, 0}, IndexTuple{0, Q}});
            for (int k = 1; k <= q; ++k) out.push_back({IndexTuple{0, k}, IndexTuple{0, k}, IndexTuple{Q, 0}});
            for (int i = 1; i <= q; ++i)
                for (int k = 1; k <= q; ++k) {
                    out.push_back({IndexTuple{i, 0}, IndexTuple{0, k}, IndexTuple{i, k}});
                    out.push_back({IndexTuple{0, k}, IndexTuple{i, 0}, IndexTuple{i, k}});
                }
        }
        return out;
    };
    static const Triple bases[] = {{0, 0, 4}, {0, 1, 3}, {0, 2, 2}, {1, 1, 2}};
    for (const auto& b : bases) {
        std::array<int, 3> p{0, 1, 2};
        do {
            // role c of the result takes role p[c] of the base
            Triple image{b[p[0]], b[p[1]], b[p[2]]};
            if (image != t) continue;
            TrilinearForm out(q, 2);
            for (const auto& term : base(b)) out.add({term[p[0]], term[p[1]], term[p[2]]}, 1);
            return out;
        } while (std::next_permutation(p.begin(), p.end()));
    }
    throw std::logic_error("unreachable: every S_4 triple is a permutation of a base block");
}

struct MatMulShape {
    long long m = 1, n = 1, p = 1;
    auto operator<=>(const MatMulShape&) const = default;
};

inline std::string to_string(const MatMulShape& s) {
    return "<" + std::to_string(s.m) + "," + std::to_string(s.n) + "," + std::to_string(s.p) + ">";
}

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

inline std::vector<std::size_t> dense_labels(UnionFind& uf, std::size_t begin, std::size_t end, std::size_t& count) {
    std::map<std::size_t, std::size_t> ids;
    std::vector<std::size_t> labels;
    for (std::size_t v = begin; v < end; ++v) {
        auto [it, _] = ids.try_emplace(uf.find(v), ids.size());
        labels.push_back(it->second);
    }
    count = ids.size();
    return labels;
}

}  // namespace detail

/// Returns <m,n,p> when `t` equals a matrix-multiplication tensor up to independent
/// relabelling of the x, y and z variables, std::nullopt otherwise.
///
/// Rows r are the connected components of the x-z incidence graph, inner indices s those
/// of the x-y graph and columns t those of the y-z graph. The form is a matmul iff every
/// coefficient is 1 and the induced maps x->(r,s), y->(s,t), z->(r,t), monomial->(r,s,t)
/// are all bijections.
inline std::optional<MatMulShape> recognize_matmul(const TrilinearForm& t) {
    if (t.empty()) return std::nullopt;
    std::map<IndexTuple, std::size_t> xs, ys, zs;
    for (const auto& [k, c] : t.terms()) {
        if (c != 1) return std::nullopt;
        xs.try_emplace(k.x, xs.size());
        ys.try_emplace(k.y, ys.size());
        zs.try_emplace(k.z, zs.size());
    }
    struct Idx {
        std::size_t x, y, z;
    };
    std::vector<Idx> mons;
    mons.reserve(t.size());
    for (const auto& [k, c] : t.terms()) mons.push_back({xs.at(k.x), ys.at(k.y), zs.at(k.z)});

    // Each variable pair may occur in at most one monomial.
    auto unique_pairs = [&](auto first, auto second) {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (const auto& m : mons) pairs.emplace_back(first(m), second(m));
        std::sort(pairs.begin(), pairs.end());
        return std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end();
    };
    if (!unique_pairs([](const Idx& m) { return m.x; }, [](const Idx& m) { return m.y; }) ||
        !unique_pairs([](const Idx& m) { return m.y; }, [](const Idx& m) { return m.z; }) ||
        !unique_pairs([](const Idx& m) { return m.x; }, [](const Idx& m) { return m.z; })) {
        return std::nullopt;
    }

    const std::size_t nx = xs.size(), ny = ys.size(), nz = zs.size();
    detail::UnionFind xz(nx + nz), xy(nx + ny), yz(ny + nz);
    for (const auto& m : mons) {
        xz.unite(m.x, nx + m.z);
        xy.unite(m.x, nx + m.y);
        yz.unite(m.y, ny + m.z);
    }
    std::size_t m_count = 0, n_count = 0, p_count = 0;
    auto row_of_x = detail::dense_labels(xz, 0, nx, m_count);
    auto inner_of_x = detail::dense_labels(xy, 0, nx, n_count);
    auto col_of_y = detail::dense_labels(yz, 0, ny, p_count);
    // Labels for the other side of each graph, expressed in the same numbering.
    std::map<std::size_t, std::size_t> xz_root, xy_root, yz_root;
    for (std::size_t v = 0; v < nx; ++v) {
        xz_root.try_emplace(xz.find(v), row_of_x[v]);
        xy_root.try_emplace(xy.find(v), inner_of_x[v]);
    }
    for (std::size_t v = 0; v < ny; ++v) yz_root.try_emplace(yz.find(v), col_of_y[v]);

    const auto m = static_cast<long long>(m_count), n = static_cast<long long>(n_count),
               p = static_cast<long long>(p_count);
    if (static_cast<long long>(nx) != m * n || static_cast<long long>(ny) != n * p ||
        static_cast<long long>(nz) != m * p || static_cast<long long>(mons.size()) != m * n * p) {
        return std::nullopt;
    }

    std::vector<char> seen_x(nx, 0), seen_y(ny, 0), seen_z(nz, 0), seen_m(mons.size(), 0);
    std::vector<long long> x_code(nx, -1), y_code(ny, -1), z_code(nz, -1);
    for (const auto& mo : mons) {
        long long r = static_cast<long long>(row_of_x[mo.x]);
        long long s = static_cast<long long>(inner_of_x[mo.x]);
        auto yroot = xy.find(nx + mo.y);
        auto zroot_xz = xz.find(nx + mo.z);
        auto zroot_yz = yz.find(ny + mo.z);
        if (!xy_root.count(yroot) || !xz_root.count(zroot_xz) || !yz_root.count(zroot_yz)) return std::nullopt;
        long long s_y = static_cast<long long>(xy_root.at(yroot));
        long long r_z = static_cast<long long>(xz_root.at(zroot_xz));
        long long tcol = static_cast<long long>(col_of_y[mo.y]);
        long long t_z = static_cast<long long>(yz_root.at(zroot_yz));
        if (s_y != s || r_z != r || t_z != tcol) return std::nullopt;
        auto assign = [](std::vector<long long>& codes, std::size_t v, long long code) {
            if (codes[v] == -1) codes[v] = code;
            return codes[v] == code;
        };
        if (!assign(x_code, mo.x, r * n + s) || !assign(y_code, mo.y, s * p + tcol) ||
            !assign(z_code, mo.z, r * p + tcol)) {
            return std::nullopt;
        }
        auto mcode = static_cast<std::size_t>((r * n + s) * p + tcol);
        if (seen_m[mcode]) return std::nullopt;
        seen_m[mcode] = 1;
    }
    auto injective = [](const std::vector<long long>& codes, std::vector<char>& seen) {
        for (long long c : codes) {
            if (c < 0 || seen[static_cast<std::size_t>(c)]) return false;
            seen[static_cast<std::size_t>(c)] = 1;
        }
        return true;
    };
    if (!injective(x_code, seen_x) || !injective(y_code, seen_y) || !injective(z_code, seen_z)) return std::nullopt;
    return MatMulShape{m, n, p};
}

struct PowerIdentityReport {
    bool ok = false;
    std::size_t components = 0;
    std::size_t monomials = 0;
    std::optional<MonomialKey> first_diff;
    Rational expected_coeff;
    Rational actual_coeff;
};

/// First key (canonical order) where the two forms disagree.
inline std::optional<MonomialKey> first_difference(const TrilinearForm& a, const TrilinearForm& b) {
    auto ia = a.terms().begin(), ib = b.terms().begin();
    while (ia != a.terms().end() || ib != b.terms().end()) {
        if (ib == b.terms().end() || (ia != a.terms().end() && ia->first < ib->first)) return ia->first;
        if (ia == a.terms().end() || ib->first < ia->first) return ib->first;
        if (ia->second != ib->second) return ia->first;
        ++ia;
        ++ib;
    }
    return std::nullopt;
}

/// Compares a sum of components with the reference power, recording the first mismatch.
inline PowerIdentityReport compare_sum(const std::map<Triple, TrilinearForm>& components,
                                       const TrilinearForm& reference) {
    PowerIdentityReport rep;
    rep.components = components.size();
    rep.monomials = reference.size();
    TrilinearForm sum(reference.q(), reference.power());
    for (const auto& [_, c] : components) sum += c;
    rep.first_diff = first_difference(sum, reference);
    rep.ok = !rep.first_diff.has_value();
    if (rep.first_diff) {
        rep.expected_coeff = reference.coefficient(*rep.first_diff);
        rep.actual_coeff = sum.coefficient(*rep.first_diff);
    }
    return rep;
}

/// Builds every component of the given level independently of the direct power and
/// checks that they sum to F_q^{(x) level/2} coefficient-wise.
inline std::map<Triple, TrilinearForm> independent_components(int level, int q,
                                                              std::size_t budget = kDefaultMonomialBudget) {
    std::map<Triple, TrilinearForm> out;
    std::map<Triple, TrilinearForm> l4;
    for (const auto& t : s4()) l4.emplace(t, explicit_level4_component(t, q));
    if (level == 4) return l4;
    std::size_t total = 0;
    for (const auto& t : s8()) {
        auto c = level8_component(l4, t, q, budget);
        total += c.size();
        if (total > budget) throw SizeBudgetError("level-8 components exceed budget");
        out.emplace(t, std::move(c));
    }
    return out;
}

inline PowerIdentityReport verify_power_identity(int level, int q, std::size_t budget = kDefaultMonomialBudget) {
    if (level != 4 && level != 8) throw std::invalid_argument("verify_power_identity: level must be 4 or 8");
    auto reference = tensor_power(cw_tensor(q), level / 2, budget);
    return compare_sum(independent_components(level, q, budget), reference);
}

/// T_211 = t_011 + t_101 + t_110 + t_200, keyed by the type triple of the first factor.
inline std::map<Triple, TrilinearForm> t_split_211(int q) {
    if (q < 1) throw std::invalid_argument("t_split_211: q must be positive");
    const int Q = q + 1;
    std::map<Triple, TrilinearForm> out;
    TrilinearForm t011(q, 2), t101(q, 2), t110(q, 2), t200(q, 2);
    for (int i = 1; i <= q; ++i) t011.add({{0, Q}, {i, 0}, {i, 0}}, 1);
    for (int i = 1; i <= q; ++i)
        for (int k = 1; k <= q; ++k) {
            t101.add({{i, k}, {0, k}, {i, 0}}, 1);
            t110.add({{i, k}, {i, 0}, {0, k}}, 1);
        }
    for (int k = 1; k <= q; ++k) t200.add({{Q, 0}, {0, k}, {0, k}}, 1);
    out.emplace(Triple{0, 1, 1}, std::move(t011));
    out.emplace(Triple{1, 0, 1}, std::move(t101));
    out.emplace(Triple{1, 1, 0}, std::move(t110));
    out.emplace(Triple{2, 0, 0}, std::move(t200));
    return out;
}

inline std::string format_tuple(const IndexTuple& t) {
    std::string s = "[";
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (n) s += ",";
        s += std::to_string(t[n]);
    }
    return s + "]";
}

inline std::string format_coeff(const Rational& c) {
    return denominator(c) == 1 ? numerator(c).str() : to_string(c);
}

/// Canonical text dump, one "coeff x=[..] y=[..] z=[..]" line per monomial.
inline void dump(std::ostream& os, const TrilinearForm& t) {
    for (const auto& [k, c] : t.terms()) {
        os << format_coeff(c) << " x=" << format_tuple(k.x) << " y=" << format_tuple(k.y) << " z=" << format_tuple(k.z)
           << "\n";
    }
}

inline std::string dump(const TrilinearForm& t) {
    std::ostringstream os;
    dump(os, t);
    return os.str();
}

}  // namespace cwlaser
