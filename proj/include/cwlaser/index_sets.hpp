#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cwlaser {

/// Index-type triple (i,j,k) labelling a block of a power of the CW tensor.
struct Triple {
    int i = 0;
    int j = 0;
    int k = 0;

    constexpr int sum() const { return i + j + k; }
    constexpr int operator[](std::size_t c) const { return c == 0 ? i : (c == 1 ? j : k); }
    constexpr bool has_zero() const { return i == 0 || j == 0 || k == 0; }
    constexpr bool all_positive() const { return i > 0 && j > 0 && k > 0; }

    /// (i,k,j): the y/z swap used by the symmetry constraints.
    constexpr Triple swap_yz() const { return {i, k, j}; }
    constexpr Triple operator-(const Triple& o) const { return {i - o.i, j - o.j, k - o.k}; }
    constexpr Triple operator+(const Triple& o) const { return {i + o.i, j + o.j, k + o.k}; }

    auto operator<=>(const Triple&) const = default;
};

inline std::string to_string(const Triple& t) {
    return std::to_string(t.i) + "," + std::to_string(t.j) + "," + std::to_string(t.k);
}

/// Parses "i,j,k" (no spaces). Throws std::invalid_argument on malformed input.
inline Triple parse_triple(std::string_view s) {
    Triple t;
    int* dst[3] = {&t.i, &t.j, &t.k};
    std::size_t pos = 0;
    for (int c = 0; c < 3; ++c) {
        std::size_t end = s.find(',', pos);
        if ((c < 2) != (end != std::string_view::npos)) {
            throw std::invalid_argument("malformed triple '" + std::string(s) + "'");
        }
        std::string_view part = s.substr(pos, c < 2 ? end - pos : std::string_view::npos);
        if (part.empty() || part.size() > 3) throw std::invalid_argument("malformed triple '" + std::string(s) + "'");
        int v = 0;
        for (char ch : part) {
            if (ch < '0' || ch > '9') throw std::invalid_argument("malformed triple '" + std::string(s) + "'");
            v = v * 10 + (ch - '0');
        }
        *dst[c] = v;
        pos = end + 1;
    }
    return t;
}

/// S_t = {(i,j,k) in N^3 : i+j+k = t}, lexicographic order.
inline std::vector<Triple> simplex(int t) {
    std::vector<Triple> out;
    for (int i = 0; i <= t; ++i)
        for (int j = 0; j <= t - i; ++j) out.push_back({i, j, t - i - j});
    return out;
}

inline const std::vector<Triple>& s4() {
    static const std::vector<Triple> s = simplex(4);
    return s;
}

inline const std::vector<Triple>& s8() {
    static const std::vector<Triple> s = simplex(8);
    return s;
}

/// Level-8 triples with every coordinate positive (the non-matmul blocks).
inline const std::vector<Triple>& s8_bar() {
    static const std::vector<Triple> s = [] {
        std::vector<Triple> out;
        for (const auto& t : s8())
            if (t.all_positive()) out.push_back(t);
        return out;
    }();
    return s;
}

inline const std::vector<Triple>& s8_prime() {
    static const std::vector<Triple> s = [] {
        std::vector<Triple> out;
        for (const auto& t : s8_bar())
            if (t != Triple{2, 3, 3} && t != Triple{3, 2, 3} && t != Triple{3, 3, 2}) out.push_back(t);
        return out;
    }();
    return s;
}

/// The three level-4 blocks that are not matrix products.
inline const std::vector<Triple>& s4_bar() {
    static const std::vector<Triple> s = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
    return s;
}

inline bool in_s4_bar(const Triple& t) {
    return t.all_positive() && t.sum() == 4;
}

/// Support of the local distribution of a level-8 block:
/// {x in S_4 : t - x in S_4}.
inline std::vector<Triple> local_support(const Triple& t) {
    std::vector<Triple> out;
    for (const auto& x : s4()) {
        Triple r = t - x;
        if (r.i >= 0 && r.j >= 0 && r.k >= 0 && r.sum() == 4) out.push_back(x);
    }
    return out;
}

/// Position of `t` inside a lexicographically ordered simplex list.
inline std::optional<std::size_t> index_in(const std::vector<Triple>& set, const Triple& t) {
    for (std::size_t n = 0; n < set.size(); ++n)
        if (set[n] == t) return n;
    return std::nullopt;
}

struct IndexSets {
    std::vector<Triple> s4;
    std::vector<Triple> s8;
    std::vector<Triple> s8_bar;
    std::vector<Triple> s8_prime;
    std::vector<std::pair<Triple, std::vector<Triple>>> local_supports;
    std::vector<Triple> s4_bar;
};

inline IndexSets index_sets() {
    IndexSets out{s4(), s8(), s8_bar(), s8_prime(), {}, s4_bar()};
    for (const auto& t : s8_bar()) out.local_supports.emplace_back(t, local_support(t));
    return out;
}

}  // namespace cwlaser
