#include "cwlaser/params.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace cwlaser;

namespace {

ParamSet load(const std::string& name) {
    std::ifstream in(std::string(CWLASER_DATA_DIR) + "/" + name);
    return params_from_json(nlohmann::json::parse(in));
}

// a(ijk) ∝ exp(λ_i + μ_j + μ_k)
std::map<Triple, double> exp_family(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    std::array<double, 9> lam{}, mu{};
    for (auto& v : lam) v = n(rng);
    for (auto& v : mu) v = n(rng);
    std::map<Triple, double> a;
    double z = 0;
    for (const auto& t : s8()) z += a[t] = std::exp(lam[t.i] + mu[t.j] + mu[t.k]);
    for (auto& [t, w] : a) w /= z;
    return a;
}

}  // namespace

TEST(IndexSets, Sizes) {
    EXPECT_EQ(s4().size(), 15u);
    EXPECT_EQ(s8().size(), 45u);
    EXPECT_EQ(s8_bar().size(), 21u);
    EXPECT_EQ(s8_prime().size(), 18u);
    EXPECT_EQ(s4_bar().size(), 3u);
    EXPECT_TRUE(in_s4_bar({2, 1, 1}));
    EXPECT_TRUE(in_s4_bar({1, 2, 1}));
    EXPECT_TRUE(in_s4_bar({1, 1, 2}));
    EXPECT_FALSE(in_s4_bar({2, 0, 2}));
}

TEST(IndexSets, LocalSupports) {
    EXPECT_EQ(local_support({2, 3, 3}).size(), 10u);
    for (const auto& t : s8_bar())
        for (const auto& s : local_support(t)) {
            Triple r = t - s;
            EXPECT_EQ(s.sum(), 4);
            EXPECT_GE(std::min({r.i, r.j, r.k}), 0);
        }
}

TEST(Rational, RoundTrip) {
    Rational r(-22, 7);
    EXPECT_EQ(to_string(r), "-22/7");
    EXPECT_EQ(parse_rational("-22/7"), r);
    EXPECT_EQ(parse_rational("3"), Rational(3));
    EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
    EXPECT_THROW(parse_rational("x"), std::invalid_argument);
    EXPECT_EQ(to_double(rational_from_double(0.1)), 0.1);
}

TEST(Structure, UniformPointIsValid) {
    auto p = uniform_params(5);
    EXPECT_NO_THROW(validate_structure(p));
    EXPECT_TRUE(check_all_exact(p).pass());
}

TEST(Structure, RejectsMalformedSets) {
    auto p = uniform_params(5);
    auto q = p;
    q.a.erase(q.a.begin());
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
    q = p;
    q.a.begin()->second = 0;
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
    q = p;
    q.locals.erase(q.locals.begin());
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
    q = p;
    q.locals.begin()->second.erase(q.locals.begin()->second.begin());
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
    q = p;
    q.b = 1;
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
    q = p;
    q.q = 0;
    EXPECT_THROW(validate_structure(q), std::invalid_argument);
}

TEST(Constraints, UniformResidualsVanish) {
    auto rep = check_all_exact(uniform_params(3));
    for (const auto& e : rep.entries) {
        if (e.id == "E3") continue;
        EXPECT_NEAR(e.residual, 0.0, 1e-14) << e.label;
    }
}

TEST(Constraints, DuplicateEquationFlagged) {
    auto d = c2_duplicate_indices();
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0], 8u);
    auto rep = check_C2(convert<double>(uniform_params(2)).a);
    ASSERT_EQ(rep.entries.size(), 10u);
    EXPECT_TRUE(rep.entries[8].duplicate);
    EXPECT_FALSE(rep.entries[7].duplicate);
}

TEST(Constraints, ExponentialFamilySatisfiesC1C2) {
    std::mt19937_64 rng(11);
    for (int n = 0; n < 50; ++n) {
        auto a = exp_family(rng, 1.0);
        for (const auto& e : check_C2(a).entries) EXPECT_LE(std::abs(e.residual), 1e-12) << e.label;
        EXPECT_LE(check_C1(a).entries[0].residual, 1e-15);
    }
}

TEST(Constraints, GenericPointViolatesC2) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    std::map<Triple, double> a;
    double z = 0;
    for (const auto& t : s8()) z += a[t] = u(rng);
    for (auto& [t, w] : a) w /= z;
    auto rep = check_C2(a);
    EXPECT_FALSE(rep.pass());
}

TEST(Constraints, C1ExactnessNeverRoundsToPass) {
    auto p = uniform_params(2);
    p.a.at({0, 1, 7}) += Rational(1, BigInt("1000000000000000000000000000000000000000"));
    auto r = check_C1(p.a);
    EXPECT_FALSE(r.pass());
    EXPECT_GT(r.entries[0].residual, 0.0);
}

TEST(Constraints, C3SignConvention) {
    auto p = load("violates_c3.json");
    auto rep = check_all_exact(p);
    ASSERT_EQ(rep.failures().size(), 1u);
    EXPECT_EQ(rep.failures()[0].id, "C3");
    EXPECT_NEAR(rep.failures()[0].residual, -0.128457, 1e-6);
}

TEST(Constraints, E3Residual) {
    // b = b̃ = 1/2: α211(ln2/2 − ln2) + α112(ln2 − ln2/2)
    const double l2 = std::log(2.0);
    EXPECT_NEAR(e3_residual(0.3, 0.1, 0.5, 0.5), 0.1 * (-0.5 * l2) + 0.3 * (0.5 * l2), 1e-15);
    EXPECT_THROW(check_E3(0.1, 0.1, 0.0, 0.5), std::domain_error);
}

TEST(Constraints, AlphaWeightsConserveMass) {
    auto p = convert<double>(uniform_params(2));
    auto alpha = alpha_weights(p.a, p.locals);
    double total = 0, bar = 0;
    for (const auto& [s, w] : alpha) total += w;
    for (const auto& t : s8_bar()) bar += p.a.at(t);
    EXPECT_NEAR(total, 2 * bar, 1e-14);
}

TEST(Constraints, SampleFeasiblePasses) {
    auto p = load("sample_feasible.json");
    auto rep = check_all_exact(p);
    EXPECT_TRUE(rep.pass());
    auto hi = check_all_exact<Dec50>(p);
    EXPECT_TRUE(hi.pass());
    ASSERT_EQ(rep.entries.size(), hi.entries.size());
    for (std::size_t n = 0; n < rep.entries.size(); ++n)
        EXPECT_NEAR(rep.entries[n].residual, hi.entries[n].residual, 1e-12) << rep.entries[n].label;
}

TEST(Constraints, SinglePerturbationIsItemized) {
    auto p = load("sample_feasible.json");
    p.a.at({0, 2, 6}) += Rational(1, 1000);
    auto rep = check_all_exact(p);
    bool c2 = false, norm = false;
    for (const auto& e : rep.failures()) {
        c2 |= e.id == "C2";
        norm |= e.id == "NORM";
    }
    EXPECT_TRUE(c2);
    EXPECT_TRUE(norm);
}

TEST(Symmetrize, ProducesExactSymmetry) {
    auto p = uniform_params(2);
    Rational w(1, 90);
    p.a.at({0, 1, 7}) += w;
    p.a.at({0, 7, 1}) -= w;
    auto a = symmetrize_a(p.a);
    EXPECT_TRUE(check_C1(a).pass());
    auto& loc = p.locals.at({2, 3, 3});
    loc.at({1, 3, 0}) += w;
    loc.at({0, 2, 2}) -= w;
    auto locals = symmetrize_locals(p.locals);
    EXPECT_TRUE(check_D1(locals).pass());
}

TEST(Json, RoundTrip) {
    auto p = load("sample_feasible.json");
    auto again = params_from_json(nlohmann::json::parse(to_json(p).dump()));
    EXPECT_EQ(p, again);
}

TEST(Json, Errors) {
    auto j = to_json(uniform_params(2));
    auto bad = j;
    bad.erase("b");
    EXPECT_THROW(params_from_json(bad), std::invalid_argument);
    bad = j;
    bad["a"]["0,0,8"] = 0.5;
    EXPECT_THROW(params_from_json(bad), std::invalid_argument);
    bad = j;
    bad["a"]["0,0,9"] = "1/45";
    EXPECT_THROW(params_from_json(bad), std::invalid_argument);
    bad = j;
    bad["q"] = "2";
    EXPECT_THROW(params_from_json(bad), std::invalid_argument);
    EXPECT_THROW(params_from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST(Report, JsonShape) {
    auto j = to_json(check_all_exact(uniform_params(2)));
    EXPECT_TRUE(j["pass"].get<bool>());
    std::set<std::string> ids;
    for (const auto& e : j["entries"]) ids.insert(e["id"].get<std::string>());
    EXPECT_EQ(ids, (std::set<std::string>{"C1", "C2", "C3", "D1", "D2", "D3", "E3", "NORM"}));
}
