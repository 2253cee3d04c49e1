#pragma once

#include "cwlaser/dense_model.hpp"
#include "cwlaser/params.hpp"
#include "cwlaser/reference.hpp"
#include "cwlaser/value.hpp"

#include <ceres/ceres.h>
#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cwlaser {

struct SearchConfig {
    std::optional<double> k_target;
    std::optional<double> nu_target;
    int q_min = 2;
    int q_max = 10;
    int restarts = 32;
    std::uint64_t seed = 1;
    double init_scale = 0.5;
    // augmented Lagrangian
    double rho_initial = 10.0;
    double rho_growth = 4.0;
    double rho_max = 1e9;
    double floor_weight = 1e3;
    double weight_floor = 1e-12;
    int max_outer = 40;
    int max_inner = 400;
    std::vector<double> tolerance_ladder{1e-4, 1e-6, 1e-8, 1e-10};
    double feasibility = 1e-10;
    // bisections
    double nu_threshold = 1e-4;
    double alpha_lo = 0.30;
    double alpha_hi = 0.33;
    double mu_lo = 0.50;
    double mu_hi = 0.55;
    double bisection_tol = 1e-4;
    int bisection_restarts = 6;
    int bisection_q_radius = 1;
    // execution
    int threads = 0;
};

inline nlohmann::json to_json(const SearchConfig& c) {
    nlohmann::json j;
    if (c.k_target) j["k_target"] = *c.k_target;
    if (c.nu_target) j["nu_target"] = *c.nu_target;
    j["q_min"] = c.q_min;
    j["q_max"] = c.q_max;
    j["restarts"] = c.restarts;
    j["seed"] = c.seed;
    j["init_scale"] = c.init_scale;
    j["rho_initial"] = c.rho_initial;
    j["rho_growth"] = c.rho_growth;
    j["rho_max"] = c.rho_max;
    j["floor_weight"] = c.floor_weight;
    j["weight_floor"] = c.weight_floor;
    j["max_outer"] = c.max_outer;
    j["max_inner"] = c.max_inner;
    j["tolerance_ladder"] = c.tolerance_ladder;
    j["feasibility"] = c.feasibility;
    j["nu_threshold"] = c.nu_threshold;
    j["alpha_lo"] = c.alpha_lo;
    j["alpha_hi"] = c.alpha_hi;
    j["mu_lo"] = c.mu_lo;
    j["mu_hi"] = c.mu_hi;
    j["bisection_tol"] = c.bisection_tol;
    j["bisection_restarts"] = c.bisection_restarts;
    j["bisection_q_radius"] = c.bisection_q_radius;
    return j;
}

/// Reads a SearchConfig; absent fields keep their defaults. Throws std::invalid_argument.
inline SearchConfig search_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("search config must be an object");
    SearchConfig c;
    try {
        if (j.contains("k_target")) c.k_target = j["k_target"].get<double>();
        if (j.contains("nu_target")) c.nu_target = j["nu_target"].get<double>();
        c.q_min = j.value("q_min", c.q_min);
        c.q_max = j.value("q_max", c.q_max);
        c.restarts = j.value("restarts", c.restarts);
        c.seed = j.value("seed", c.seed);
        c.init_scale = j.value("init_scale", c.init_scale);
        c.rho_initial = j.value("rho_initial", c.rho_initial);
        c.rho_growth = j.value("rho_growth", c.rho_growth);
        c.rho_max = j.value("rho_max", c.rho_max);
        c.floor_weight = j.value("floor_weight", c.floor_weight);
        c.weight_floor = j.value("weight_floor", c.weight_floor);
        c.max_outer = j.value("max_outer", c.max_outer);
        c.max_inner = j.value("max_inner", c.max_inner);
        c.tolerance_ladder = j.value("tolerance_ladder", c.tolerance_ladder);
        c.feasibility = j.value("feasibility", c.feasibility);
        c.nu_threshold = j.value("nu_threshold", c.nu_threshold);
        c.alpha_lo = j.value("alpha_lo", c.alpha_lo);
        c.alpha_hi = j.value("alpha_hi", c.alpha_hi);
        c.mu_lo = j.value("mu_lo", c.mu_lo);
        c.mu_hi = j.value("mu_hi", c.mu_hi);
        c.bisection_tol = j.value("bisection_tol", c.bisection_tol);
        c.bisection_restarts = j.value("bisection_restarts", c.bisection_restarts);
        c.bisection_q_radius = j.value("bisection_q_radius", c.bisection_q_radius);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("search config: ") + e.what());
    }
    if (c.restarts < 1) throw std::invalid_argument("restarts must be at least 1");
    if (c.q_min < 2 || c.q_max < c.q_min) throw std::invalid_argument("q range must satisfy 2 <= q_min <= q_max");
    return c;
}

class SearchFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// --threads, then CWLASER_THREADS, then the number of logical cores.
inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CWLASER_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs body(0..n-1) over a fixed number of worker threads. Results must be written
/// to per-index slots so the outcome is independent of scheduling.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t sub_seed(std::uint64_t seed, int q, int restart) {
    return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(q) << 32) ^ static_cast<std::uint64_t>(restart));
}

// ---------------------------------------------------------------------------
// Single local search

struct LocalRun {
    int q = 0;
    int tag = 0;  // restart index, or -1 - w for warm start w
    bool feasible = false;
    double nu = std::numeric_limits<double>::infinity();
    double violation = std::numeric_limits<double>::infinity();
    double start_nu = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> x;
};

namespace detail {

struct AlState {
    double lam_eq = 0;
    std::array<double, 3> lam_in{0, 0, 0};
    double rho = 10;
};

class AlObjective final : public ceres::FirstOrderFunction {
public:
    AlObjective(const DenseLayout& L, const DenseConstants& C, double k, const AlState& st, double floor_weight,
                double log_floor)
        : L_(L), C_(C), k_(k), st_(st), floor_weight_(floor_weight), log_floor_(log_floor) {}

    bool Evaluate(const double* x, double* cost, double* gradient) const override {
        DenseEval<double> e;
        dense_forward(L_, C_, x, e, log_floor_);
        if (!std::isfinite(e.nu) || !(e.lnQ > 1e-3)) return false;
        const double h = e.lnR - k_ * e.lnQ;
        const std::array<double, 3> g{e.c3, e.d3, e.e3};
        double f = e.nu + st_.lam_eq * h + 0.5 * st_.rho * h * h + floor_weight_ * e.floor_penalty;
        std::array<double, 3> dg{};
        for (int i = 0; i < 3; ++i) {
            double m = std::max(0.0, st_.lam_in[i] - st_.rho * g[i]);
            f += (m * m - st_.lam_in[i] * st_.lam_in[i]) / (2 * st_.rho);
            dg[i] = -m;
        }
        if (!std::isfinite(f)) return false;
        *cost = f;
        if (gradient) {
            DenseSeeds s;
            s.nu = 1;
            const double dh = st_.lam_eq + st_.rho * h;
            s.lnR = dh;
            s.lnQ = -k_ * dh;
            s.c3 = dg[0];
            s.d3 = dg[1];
            s.e3 = dg[2];
            s.floor = floor_weight_;
            dense_backward(L_, C_, e, s, gradient, log_floor_);
            for (int i = 0; i < L_.size(); ++i)
                if (!std::isfinite(gradient[i])) return false;
        }
        return true;
    }
    int NumParameters() const override { return L_.size(); }

private:
    const DenseLayout& L_;
    const DenseConstants& C_;
    double k_;
    AlState st_;
    double floor_weight_;
    double log_floor_;
};

inline double violation(const DenseEval<double>& e, double k) {
    double v = std::abs(e.lnR - k * e.lnQ);
    v = std::max(v, -e.c3);
    v = std::max(v, -e.d3);
    v = std::max(v, -e.e3);
    return v;
}

/// Minimum-norm Gauss-Newton correction onto {lnR = k lnQ} and the violated inequalities.
inline bool polish(const DenseLayout& L, const DenseConstants& C, double k, std::vector<double>& x,
                   double log_floor) {
    const double margin = 1e-9;
    const int np = L.size();
    std::vector<double> grad(np);
    for (int it = 0; it < 30; ++it) {
        DenseEval<double> e;
        dense_forward(L, C, x.data(), e, log_floor);
        if (!std::isfinite(e.nu) || !(e.lnQ > 0)) return false;
        const double h = e.lnR - k * e.lnQ;
        std::vector<DenseSeeds> rows;
        std::vector<double> rhs;
        DenseSeeds sh;
        sh.lnR = 1;
        sh.lnQ = -k;
        rows.push_back(sh);
        rhs.push_back(-h);
        const std::array<double, 3> g{e.c3, e.d3, e.e3};
        bool ok = std::abs(h) <= 1e-13;
        for (int i = 0; i < 3; ++i) {
            if (g[i] < margin) {
                ok = false;
                DenseSeeds s;
                (i == 0 ? s.c3 : (i == 1 ? s.d3 : s.e3)) = 1;
                rows.push_back(s);
                rhs.push_back(2 * margin - g[i]);
            }
        }
        if (ok) return true;
        Eigen::MatrixXd J(rows.size(), np);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            dense_backward(L, C, e, rows[r], grad.data(), log_floor);
            for (int c = 0; c < np; ++c) J(r, c) = grad[c];
        }
        Eigen::VectorXd b = Eigen::Map<Eigen::VectorXd>(rhs.data(), rhs.size());
        Eigen::MatrixXd JJt = J * J.transpose();
        JJt.diagonal().array() += 1e-14 * (1.0 + JJt.diagonal().array());
        Eigen::VectorXd dx = J.transpose() * JJt.ldlt().solve(b);
        if (!dx.allFinite()) return false;
        for (int c = 0; c < np; ++c) x[c] += dx(c);
    }
    DenseEval<double> e;
    dense_forward(L, C, x.data(), e, log_floor);
    return std::abs(e.lnR - k * e.lnQ) <= 1e-12 && e.c3 >= 0 && e.d3 >= 0 && e.e3 >= 0;
}

}  // namespace detail

/// One augmented-Lagrangian descent from x0 followed by the feasibility polish.
inline LocalRun local_search(int q, double k, std::vector<double> x, const SearchConfig& cfg, int tag) {
    const auto& L = DenseLayout::instance();
    const DenseConstants C(q);
    const double log_floor = std::log(cfg.weight_floor);
    LocalRun run;
    run.q = q;
    run.tag = tag;
    {
        DenseEval<double> e;
        dense_forward(L, C, x.data(), e, log_floor);
        run.start_nu = e.nu;
        if (!std::isfinite(e.nu) || !(e.lnQ > 1e-3)) return run;
    }
    detail::AlState st;
    st.rho = cfg.rho_initial;
    double prev_violation = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        ceres::GradientProblemSolver::Options opt;
        opt.logging_type = ceres::SILENT;
        opt.minimizer_progress_to_stdout = false;
        opt.max_num_iterations = cfg.max_inner;
        const auto& ladder = cfg.tolerance_ladder;
        double gtol = ladder.empty() ? 1e-10 : ladder[std::min<std::size_t>(outer, ladder.size() - 1)];
        opt.gradient_tolerance = gtol;
        opt.function_tolerance = 1e-15;
        opt.parameter_tolerance = 1e-15;
        ceres::GradientProblem problem(
            new detail::AlObjective(L, C, k, st, cfg.floor_weight, log_floor));
        ceres::GradientProblemSolver::Summary summary;
        std::vector<double> trial = x;
        ceres::Solve(opt, problem, trial.data(), &summary);
        DenseEval<double> e;
        dense_forward(L, C, trial.data(), e, log_floor);
        if (!std::isfinite(e.nu) || !(e.lnQ > 1e-3)) break;
        x = std::move(trial);
        const double h = e.lnR - k * e.lnQ;
        const std::array<double, 3> g{e.c3, e.d3, e.e3};
        st.lam_eq += st.rho * h;
        for (int i = 0; i < 3; ++i) st.lam_in[i] = std::max(0.0, st.lam_in[i] - st.rho * g[i]);
        const double v = detail::violation(e, k);
        if (v <= cfg.feasibility && outer + 1 >= static_cast<int>(ladder.size())) break;
        if (v > 0.25 * prev_violation) st.rho = std::min(st.rho * cfg.rho_growth, cfg.rho_max);
        prev_violation = v;
    }
    if (!detail::polish(L, C, k, x, log_floor)) {
        DenseEval<double> e;
        dense_forward(L, C, x.data(), e, log_floor);
        run.violation = std::isfinite(e.nu) ? detail::violation(e, k) : std::numeric_limits<double>::infinity();
        run.nu = e.nu;
        run.x = std::move(x);
        return run;
    }
    DenseEval<double> e;
    dense_forward(L, C, x.data(), e, log_floor);
    run.violation = detail::violation(e, k);
    run.nu = e.nu;
    double min_log = 0;
    for (double v : e.log_a) min_log = std::min(min_log, v);
    for (const auto& lw : e.log_w)
        for (double v : lw) min_log = std::min(min_log, v);
    // the certificate needs every weight strictly inside (0,1)
    run.feasible = std::isfinite(e.nu) && min_log > log_floor - std::log(10.0);
    run.x = std::move(x);
    return run;
}

inline std::vector<double> random_start(std::uint64_t seed, double scale) {
    const int np = DenseLayout::instance().size();
    std::vector<double> x(np, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    for (auto& v : x) v = normal(rng);
    return x;
}

// ---------------------------------------------------------------------------
// Searches

struct WarmStart {
    int q = 0;
    std::vector<double> x;
};

struct QSummary {
    int q = 0;
    int feasible = 0;
    double best_nu = std::numeric_limits<double>::infinity();
};

struct SearchOutcome {
    BoundCertificate certificate;
    int q = 0;
    int tag = 0;
    double nu = 0;
    double best_start_nu = std::numeric_limits<double>::infinity();
    std::vector<double> x;
    std::vector<QSummary> per_q;
};

/// Lexicographic (ν, q, tag) with ν ties below 1e-9 broken by q.
inline bool better_run(const LocalRun& a, const LocalRun& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (std::abs(a.nu - b.nu) > 1e-9) return a.nu < b.nu;
    if (a.q != b.q) return a.q < b.q;
    return a.tag < b.tag;
}

/// Minimizes ν at ln R / ln Q = k_target over q in [q_min, q_max] and the restarts.
inline SearchOutcome optimize_omega(double k_target, const SearchConfig& cfg,
                                    const std::vector<WarmStart>& warm = {}) {
    if (!(k_target > 0)) throw std::invalid_argument("k_target must be positive");
    if (cfg.restarts < 1) throw std::invalid_argument("restarts must be at least 1");
    struct Task {
        int q, tag;
        std::vector<double> x0;
    };
    std::vector<Task> tasks;
    for (int q = cfg.q_min; q <= cfg.q_max; ++q) {
        for (int r = 0; r < cfg.restarts; ++r) {
            std::vector<double> x0 = r == 0 ? std::vector<double>(DenseLayout::instance().size(), 0.0)
                                            : random_start(sub_seed(cfg.seed, q, r), cfg.init_scale);
            tasks.push_back({q, r, std::move(x0)});
        }
        for (std::size_t w = 0; w < warm.size(); ++w) tasks.push_back({q, -1 - static_cast<int>(w), warm[w].x});
    }
    std::vector<LocalRun> runs(tasks.size());
    parallel_for(tasks.size(), resolve_threads(cfg.threads),
                 [&](std::size_t i) { runs[i] = local_search(tasks[i].q, k_target, tasks[i].x0, cfg, tasks[i].tag); });

    SearchOutcome out;
    for (int q = cfg.q_min; q <= cfg.q_max; ++q) out.per_q.push_back({q, 0, std::numeric_limits<double>::infinity()});
    const LocalRun* best = nullptr;
    for (const auto& r : runs) {
        auto& s = out.per_q[r.q - cfg.q_min];
        if (r.feasible) {
            ++s.feasible;
            s.best_nu = std::min(s.best_nu, r.nu);
        }
        if (std::isfinite(r.start_nu)) out.best_start_nu = std::min(out.best_start_nu, r.start_nu);
        if (!best || better_run(r, *best)) best = &r;
    }
    // Candidates are certified in rank order; the first that survives exact rechecking wins.
    std::vector<const LocalRun*> ranked;
    for (const auto& r : runs)
        if (r.feasible) ranked.push_back(&r);
    std::sort(ranked.begin(), ranked.end(), [](const LocalRun* a, const LocalRun* b) { return better_run(*a, *b); });
    for (const LocalRun* r : ranked) {
        try {
            auto p = rationalize(dense_to_params(DenseLayout::instance(), r->q, r->x.data()));
            auto cert = make_certificate(p, k_target);
            if (!check_certificate(cert).pass) continue;
            out.certificate = std::move(cert);
            out.q = r->q;
            out.tag = r->tag;
            out.nu = out.certificate.result.nu;
            out.x = r->x;
            return out;
        } catch (const BoundError&) {
            continue;
        }
    }
    std::ostringstream msg;
    msg << "no feasible point for k=" << format_double(k_target);
    if (best) {
        msg << "; best infeasible q=" << best->q << " nu=" << format_double(best->nu)
            << " violation=" << format_double(best->violation);
    }
    throw SearchFailure(msg.str());
}

inline SearchConfig narrowed(const SearchConfig& cfg, int q_center, int restarts) {
    SearchConfig c = cfg;
    c.q_min = std::max(cfg.q_min, q_center - cfg.bisection_q_radius);
    c.q_max = std::min(cfg.q_max, q_center + cfg.bisection_q_radius);
    c.restarts = std::max(1, restarts);
    return c;
}

struct BisectionStep {
    double k = 0;
    double nu = 0;
    int q = 0;
    bool accepted = false;
};

struct AlphaOutcome {
    double alpha = 0;
    SearchOutcome witness;
    std::vector<BisectionStep> trace;
};

/// Largest k (by bisection) whose optimized ν stays within nu_threshold of 2.
inline AlphaOutcome optimize_alpha(const SearchConfig& cfg) {
    const double limit = 2.0 + cfg.nu_threshold;
    AlphaOutcome out;
    auto lo_run = optimize_omega(cfg.alpha_lo, cfg);
    out.trace.push_back({cfg.alpha_lo, lo_run.nu, lo_run.q, lo_run.nu <= limit});
    if (lo_run.nu > limit) {
        throw SearchFailure("lower end of the alpha bracket k=" + format_double(cfg.alpha_lo) +
                            " gives nu=" + format_double(lo_run.nu));
    }
    double lo = cfg.alpha_lo, hi = cfg.alpha_hi;
    SearchOutcome best = lo_run;
    std::vector<WarmStart> warm{{lo_run.q, lo_run.x}};
    auto probe = [&](double k) {
        auto c = narrowed(cfg, best.q, cfg.bisection_restarts);
        return optimize_omega(k, c, warm);
    };
    {
        auto hi_run = probe(hi);
        bool ok = hi_run.nu <= limit;
        out.trace.push_back({hi, hi_run.nu, hi_run.q, ok});
        if (ok) {
            out.alpha = hi;
            out.witness = std::move(hi_run);
            return out;
        }
        warm.push_back({hi_run.q, hi_run.x});
    }
    while (hi - lo > cfg.bisection_tol) {
        double mid = 0.5 * (lo + hi);
        SearchOutcome r;
        bool ok = false;
        try {
            r = probe(mid);
            ok = r.nu <= limit;
            out.trace.push_back({mid, r.nu, r.q, ok});
        } catch (const SearchFailure&) {
            out.trace.push_back({mid, std::numeric_limits<double>::infinity(), 0, false});
        }
        if (ok) {
            lo = mid;
            best = r;
            warm = {{r.q, r.x}};
        } else {
            hi = mid;
            if (!r.x.empty()) warm.push_back({r.q, r.x});
        }
    }
    out.alpha = lo;
    out.witness = std::move(best);
    return out;
}

struct MuOutcome {
    double mu = 0;  // k with ν(k) < 1 + 2k, within bisection_tol of the crossing
    SearchOutcome witness;
    std::vector<BisectionStep> trace;  // nu column holds ν(k) − (1 + 2k)
    bool monotone = true;
};

/// Bisection on f(k) = ν(k) − (1 + 2k); returns the right end of the final bracket.
inline MuOutcome solve_mu(const SearchConfig& cfg) {
    MuOutcome out;
    auto f = [](const SearchOutcome& r, double k) { return r.nu - (1 + 2 * k); };
    auto lo_run = optimize_omega(cfg.mu_lo, cfg);
    double flo = f(lo_run, cfg.mu_lo);
    out.trace.push_back({cfg.mu_lo, flo, lo_run.q, false});
    if (!(flo > 0)) throw SearchFailure("f(mu_lo) is not positive: " + format_double(flo));
    std::vector<WarmStart> warm{{lo_run.q, lo_run.x}};
    auto hi_run = optimize_omega(cfg.mu_hi, narrowed(cfg, lo_run.q, cfg.bisection_restarts), warm);
    double fhi = f(hi_run, cfg.mu_hi);
    out.trace.push_back({cfg.mu_hi, fhi, hi_run.q, true});
    if (!(fhi < 0)) throw SearchFailure("f(mu_hi) is not negative: " + format_double(fhi));
    warm.push_back({hi_run.q, hi_run.x});
    double lo = cfg.mu_lo, hi = cfg.mu_hi;
    SearchOutcome best = hi_run;
    while (hi - lo > cfg.bisection_tol) {
        double mid = 0.5 * (lo + hi);
        auto r = optimize_omega(mid, narrowed(cfg, best.q, cfg.bisection_restarts), warm);
        double fm = f(r, mid);
        out.trace.push_back({mid, fm, r.q, fm < 0});
        if (fm < 0) {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
        warm = {{lo_run.q, lo_run.x}, {best.q, best.x}, {r.q, r.x}};
    }
    auto sorted = out.trace;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.k < b.k; });
    for (std::size_t n = 1; n < sorted.size(); ++n)
        if (sorted[n].nu > sorted[n - 1].nu) out.monotone = false;
    out.mu = hi;
    out.witness = std::move(best);
    return out;
}

struct SweepRow {
    double k = 0;
    double nu = std::numeric_limits<double>::quiet_NaN();
    int q = 0;
    std::string certificate;
    std::string error;
};

inline std::string k_label(double k) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed << k;
    std::string s = os.str();
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s += '0';
    return s;
}

/// Optimizes every k in turn, writing one certificate per row into cert_dir when given.
/// Failures are recorded per row and the sweep continues.
inline std::vector<SweepRow> sweep_table(const std::vector<double>& ks, const SearchConfig& cfg,
                                         const std::string& cert_dir = {}) {
    std::vector<SweepRow> rows;
    if (!cert_dir.empty()) std::filesystem::create_directories(cert_dir);
    for (double k : ks) {
        SweepRow row;
        row.k = k;
        try {
            auto r = optimize_omega(k, cfg);
            row.nu = r.nu;
            row.q = r.q;
            if (!cert_dir.empty()) {
                auto path = std::filesystem::path(cert_dir) / ("cert_k" + k_label(k) + ".json");
                std::ofstream f(path, std::ios::binary);
                f << certificate_text(r.certificate);
                if (!f) throw std::runtime_error("cannot write " + path.string());
                row.certificate = path.string();
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "k,nu,q,certificate\n";
    for (const auto& r : rows) {
        os << format_double(r.k) << ",";
        if (r.error.empty()) {
            os << format_double(r.nu) << "," << r.q << "," << r.certificate << "\n";
        } else {
            os << "nan,0,\n";
        }
    }
}

}  // namespace cwlaser
