#include "cwlaser/counting.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace cwlaser;

namespace {

const std::vector<long> kLadder{45, 90, 180};

double entropy_of(const std::vector<Rational>& p) {
    double h = 0;
    for (const auto& x : p) {
        double v = x.convert_to<double>();
        if (v > 0) h -= v * std::log(v);
    }
    return h;
}

// Averages a function of the support over the reflection s -> t - s and the y/z swap.
template <class F>
std::map<Triple, double> symmetric_local(const Triple& t, F f) {
    std::map<Triple, double> w;
    double z = 0;
    for (const auto& s : local_support(t)) {
        Triple r = t - s;
        double v = 0.25 * (f(s) + f(r) + f(s.swap_yz()) + f(r.swap_yz()));
        z += w[s] = std::exp(v);
    }
    for (auto& [s, x] : w) x /= z;
    return w;
}

std::map<Triple, double> max_entropy_a(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 0.8);
    std::array<double, 9> lam{}, mu{};
    for (auto& v : lam) v = n(rng);
    for (auto& v : mu) v = n(rng);
    std::map<Triple, double> a;
    double z = 0;
    for (const auto& t : s8()) z += a[t] = std::exp(lam[t.i] + mu[t.j] + mu[t.k]);
    for (auto& [t, w] : a) w /= z;
    return a;
}

std::map<Triple, double> generic_symmetric_a(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.2, 1.8);
    std::map<Triple, double> raw, a;
    for (const auto& t : s8()) raw[t] = u(rng);
    double z = 0;
    for (const auto& t : s8()) z += a[t] = raw[t] + raw[t.swap_yz()];
    for (auto& [t, w] : a) w /= z;
    return a;
}

}  // namespace

TEST(Multinomial, SmallCases) {
    EXPECT_EQ(exact_multinomial(4, {Rational(1, 2), Rational(1, 2)}).value, 6);
    EXPECT_EQ(exact_multinomial(0, {Rational(1, 2), Rational(1, 2)}).value, 1);
    EXPECT_EQ(exact_multinomial(6, {Rational(1, 6), Rational(1, 3), Rational(1, 2)}).value, 60);
    EXPECT_THROW(exact_multinomial(3, {Rational(1, 2), Rational(1, 2)}), std::invalid_argument);
    EXPECT_THROW(exact_multinomial(4, {Rational(1, 2), Rational(1, 4)}), std::invalid_argument);
}

TEST(Multinomial, MatchesFactorials) {
    for (long n = 1; n <= 12; ++n)
        for (long k = 0; k <= n; ++k) EXPECT_EQ(binomial(n, k), factorial(n) / (factorial(k) * factorial(n - k)));
}

TEST(Rates, TypeCountUniformMarginal) {
    auto a = uniform_s8();
    auto A = projections(a, 8).A;
    const double base = entropy_of(A);
    auto dev = asymptotic_rate_check([&](long N) { return t_x_count(a, N); }, base, kLadder);
    // Stirling correction: the gap is about (8/2) ln N / N, so 0.15 is only reached at N = 180.
    EXPECT_NEAR(dev[0], 0.2684487546080654, 1e-9);
    EXPECT_NEAR(dev[1], 0.163758154515373, 1e-9);
    EXPECT_LT(dev[2], 0.15);
    EXPECT_TRUE(strictly_decreasing(dev));
}

TEST(Rates, NStarUniform) {
    auto a = uniform_s8();
    auto A = projections(a, 8).A;
    std::vector<Rational> flat;
    for (const auto& [t, w] : a) flat.push_back(w);
    const double base = entropy_of(flat) - entropy_of(A);
    auto dev = asymptotic_rate_check([&](long N) { return n_star_x_count(a, N); }, base, kLadder);
    EXPECT_TRUE(strictly_decreasing(dev));
}

TEST(Rates, DegenerateDistribution) {
    auto c = exact_multinomial(45, {Rational(1)});
    EXPECT_EQ(c.value, 1);
    auto dev = asymptotic_rate_check([](long N) { return exact_multinomial(N, {Rational(1)}).value; }, 0.0, kLadder);
    for (double d : dev) EXPECT_EQ(d, 0.0);
}

TEST(Dof, ProjectionSystems) {
    auto s8r = projection_system_dof(DofSystem::S8);
    EXPECT_EQ(s8r.unknowns, 45u);
    EXPECT_EQ(s8r.dof, 21u);
    EXPECT_EQ(s8r.rank + s8r.dof, s8r.unknowns);
    auto l = projection_system_dof(DofSystem::S233);
    EXPECT_EQ(l.dof, 2u);
    EXPECT_EQ(l.rank + l.dof, l.unknowns);
}

TEST(Dof, RowPermutationInvariance) {
    for (auto sys : {DofSystem::S8, DofSystem::S233}) {
        auto rows = projection_system(sys).rows.size();
        std::vector<std::size_t> order(rows);
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(3);
        for (int n = 0; n < 5; ++n) {
            std::shuffle(order.begin(), order.end(), rng);
            EXPECT_EQ(projection_system_dof(sys, order).dof, projection_system_dof(sys).dof);
        }
    }
}

TEST(Dof, NullspaceKeepsProjections) {
    for (auto sys : {DofSystem::S8, DofSystem::S233}) {
        auto ls = projection_system(sys);
        for (const auto& v : nullspace_basis(sys))
            for (const auto& row : ls.rows) {
                Rational s = 0;
                for (std::size_t n = 0; n < v.size(); ++n) s += row[n] * v[n];
                EXPECT_EQ(s, 0);
            }
    }
}

TEST(Stationarity, EquationsBalanceOnExponentialFamily) { EXPECT_TRUE(c2_equations_balance()); }

TEST(Stationarity, UniformPointIsStationary) {
    std::map<Triple, double> a;
    for (const auto& t : s8()) a[t] = 1.0 / 45;
    auto r = entropy_stationarity_check(a);
    EXPECT_LE(r.gradient_norm, 1e-12);
    EXPECT_LE(r.residual_norm, 1e-12);
    EXPECT_TRUE(r.consistent());
}

TEST(Stationarity, MaxEntropyPoints) {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> n(0.0, 0.8);
    for (int trial = 0; trial < 100; ++trial) {
        auto r = entropy_stationarity_check(max_entropy_a(rng));
        EXPECT_LE(r.gradient_norm, 1e-8);
        EXPECT_LE(r.residual_norm, 1e-8);
        EXPECT_TRUE(r.consistent());
        std::array<double, 3> L{n(rng), n(rng), n(rng)};
        std::array<double, 4> M{n(rng), n(rng), n(rng), n(rng)};
        auto loc = symmetric_local({2, 3, 3}, [&](const Triple& s) { return L[s.i] + M[s.j] + M[s.k]; });
        auto l = local_stationarity_check(loc);
        EXPECT_LE(l.gradient_norm, 1e-8);
        EXPECT_LE(l.residual_norm, 1e-8);
    }
}

TEST(Stationarity, NonStationaryPointsAreDetected) {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto r = entropy_stationarity_check(generic_symmetric_a(rng));
        EXPECT_GT(r.gradient_norm, 1e-4);
        EXPECT_GT(r.residual_norm, 1e-4);
        EXPECT_TRUE(r.consistent());
        std::map<Triple, double> noise;
        for (const auto& s : local_support({2, 3, 3})) noise[s] = u(rng);
        auto loc = symmetric_local({2, 3, 3}, [&](const Triple& s) { return noise.at(s); });
        auto l = local_stationarity_check(loc);
        EXPECT_GT(l.gradient_norm, 1e-4);
        EXPECT_GT(l.residual_norm, 1e-4);
    }
}

TEST(Stationarity, RejectsBoundary) {
    std::map<Triple, double> a;
    for (const auto& t : s8()) a[t] = 1.0 / 44;
    a.at({0, 0, 8}) = 0;
    EXPECT_THROW(entropy_stationarity_check(a), std::domain_error);
}

TEST(T211, ExactCounts) {
    for (long m : {2L, 4L, 8L})
        for (const Rational& b : {Rational(1, 2), Rational(1, 4)}) {
            auto v = t211_counts_check(m, b);
            if (denominator(Rational(b * m)) != 1) {
                EXPECT_FALSE(v.precondition_ok) << "m=" << m;
                continue;
            }
            EXPECT_TRUE(v.precondition_ok);
            EXPECT_TRUE(v.exact_match) << "m=" << m << " b=" << to_string(b) << " " << v.detail;
        }
}

TEST(T211, KnownValues) {
    auto v = t211_counts_check(2, Rational(1, 2));
    ASSERT_TRUE(v.exact_match);
    EXPECT_EQ(v.closed_form.t_x, 12);
    EXPECT_EQ(v.closed_form.n_x, 2);
    EXPECT_EQ(v.closed_form.t_y, 6);
    EXPECT_EQ(v.closed_form.n_y, 4);
}

TEST(T211, Preconditions) {
    EXPECT_FALSE(t211_counts_check(2, Rational(0)).precondition_ok);
    EXPECT_FALSE(t211_counts_check(2, Rational(1)).precondition_ok);
    EXPECT_FALSE(t211_counts_check(3, Rational(1, 2)).precondition_ok);
}

TEST(T211, RatesConverge) {
    for (const Rational& b : {Rational(1, 2), Rational(1, 4)}) {
        auto base = t211_log_bases(b.convert_to<double>());
        std::vector<long> ms{4, 8, 16, 32};
        std::array<std::vector<double>, 4> dev;
        for (long m : ms) {
            auto v = t211_counts_check(m, b);
            ASSERT_TRUE(v.exact_match);
            const double n = 2.0 * m;
            const auto& c = v.closed_form;
            dev[0].push_back(std::abs(log_bigint(c.t_x) / n - base.t_x));
            dev[1].push_back(std::abs(log_bigint(c.n_x) / n - base.n_x));
            dev[2].push_back(std::abs(log_bigint(c.t_y) / n - base.t_y));
            dev[3].push_back(std::abs(log_bigint(c.n_y) / n - base.n_y));
        }
        for (const auto& d : dev) EXPECT_TRUE(strictly_decreasing(d)) << to_string(b);
    }
}
