#include "cwlaser/optimizer.hpp"
#include "cwlaser/reference.hpp"
#include "cwlaser/trilinear.hpp"
#include "cwlaser/value.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cwlaser;

enum Exit : int { kOk = 0, kShortfall = 1, kInfeasible = 2, kBudget = 3, kIo = 4 };

struct Failure {
    int code;
    std::string reason;
    std::string detail;
};

int fail(const Failure& f) {
    std::cout << std::flush;
    std::cerr << "REASON: " << f.reason << " " << f.detail << "\n";
    return f.code;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure{kIo, "io", "cannot open " + path};
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Failure{kIo, "parse", path + ": " + e.what()};
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Failure{kIo, "io", "cannot write " + path};
}

std::vector<double> parse_ks(const std::string& list) {
    std::vector<double> ks;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            double k = std::stod(item, &used);
            if (used != item.size() || !(k > 0)) throw std::invalid_argument(item);
            ks.push_back(k);
        } catch (const std::exception&) {
            throw Failure{kIo, "parse", "bad k value '" + item + "'"};
        }
    }
    if (ks.empty()) throw Failure{kIo, "parse", "empty k list"};
    return ks;
}

std::string default_ks() {
    std::string s;
    for (const auto& [k, nu] : reference::fourth_power_table()) {
        if (k < 0.32) continue;
        if (!s.empty()) s += ",";
        s += k_label(k);
    }
    return s;
}

struct SearchFlags {
    std::string config;
    int restarts = -1;
    std::uint64_t seed = 1;
    bool seed_set = false;
    int q_min = -1, q_max = -1;
    int threads = 0;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "SearchConfig JSON");
        app->add_option("--restarts", restarts, "restarts per q")->check(CLI::PositiveNumber);
        app->add_option_function<std::uint64_t>(
            "--seed", [this](std::uint64_t s) { seed = s, seed_set = true; }, "64-bit seed");
        app->add_option("--q-min", q_min, "smallest q searched")->check(CLI::Range(2, 64));
        app->add_option("--q-max", q_max, "largest q searched")->check(CLI::Range(2, 64));
        app->add_option("--threads", threads, "worker threads (default: CWLASER_THREADS or logical cores)")
            ->check(CLI::NonNegativeNumber);
    }

    SearchConfig resolve() const {
        SearchConfig c;
        if (!config.empty()) {
            try {
                c = search_config_from_json(read_json(config));
            } catch (const std::invalid_argument& e) {
                throw Failure{kIo, "parse", config + ": " + e.what()};
            }
        }
        if (restarts > 0) c.restarts = restarts;
        if (seed_set) c.seed = seed;
        if (q_min > 0) c.q_min = q_min;
        if (q_max > 0) c.q_max = q_max;
        if (c.q_max < c.q_min) throw Failure{kIo, "usage", "q range is empty"};
        c.threads = threads;
        return c;
    }
};

void print_report(std::ostream& os, const ConstraintReport& rep) {
    for (const auto& e : rep.entries) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-14s %-4s residual=% .6e tol=%.1e %s%s\n", e.label.c_str(),
                      e.kind == ConstraintKind::Equality ? "eq" : "ineq", e.residual, e.tolerance,
                      e.pass ? "ok" : "FAIL", e.duplicate ? " (duplicate)" : "");
        os << line;
    }
}

void print_result(std::ostream& os, const BoundResult& r, int q) {
    os << "q = " << q << "\n"
       << "ln Q = " << format_double(r.lnQ) << "  (n-route " << format_double(r.lnQ_n) << ")\n"
       << "ln R = " << format_double(r.lnR) << "\n"
       << "ln M = " << format_double(r.lnM) << "\n"
       << "Q = " << format_double(r.Q()) << "  R = " << format_double(r.R()) << "  M = " << format_double(r.M())
       << "\n"
       << "k = " << format_double(r.k) << "\n"
       << "nu = " << format_double(r.nu) << "\n";
}

// ---------------------------------------------------------------------------

int run_verify(int q, int power, const std::string& format, std::size_t budget) {
    if (q < 1) throw Failure{kIo, "usage", "q must be positive"};
    const int level = 2 * power;
    PowerIdentityReport id;
    ShapeTableReport shapes;
    try {
        id = verify_power_identity(level, q, budget);
        shapes = shape_table_check(level, q, budget);
    } catch (const SizeBudgetError& e) {
        throw Failure{kBudget, "budget", std::string(e.what()) + " (budget " + std::to_string(budget) + ")"};
    }
    const bool ok = id.ok && shapes.ok;
    if (format == "json") {
        nlohmann::json j;
        j["q"] = q;
        j["power"] = power;
        j["identity"] = {{"ok", id.ok}, {"components", id.components}, {"monomials", id.monomials}};
        if (id.first_diff) {
            j["identity"]["first_difference"] = {{"x", format_tuple(id.first_diff->x)},
                                                 {"y", format_tuple(id.first_diff->y)},
                                                 {"z", format_tuple(id.first_diff->z)},
                                                 {"expected", to_string(id.expected_coeff)},
                                                 {"actual", to_string(id.actual_coeff)}};
        }
        j["shapes"] = {{"ok", shapes.ok},
                       {"families", shapes.families},
                       {"matmul_blocks", shapes.matmul_blocks},
                       {"non_matmul_blocks", shapes.non_matmul_blocks},
                       {"mismatches", shapes.mismatches}};
        j["ok"] = ok;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "F_" << q << "^(x)" << power << ": " << id.monomials << " monomials, " << id.components
                  << " components, identity " << (id.ok ? "holds" : "FAILS") << "\n";
        if (id.first_diff) {
            std::cout << "  first difference x=" << format_tuple(id.first_diff->x)
                      << " y=" << format_tuple(id.first_diff->y) << " z=" << format_tuple(id.first_diff->z)
                      << " expected " << to_string(id.expected_coeff) << " got " << to_string(id.actual_coeff)
                      << "\n";
        }
        std::cout << "shape table: " << shapes.families << " families, " << shapes.matmul_blocks
                  << " matmul blocks, " << shapes.non_matmul_blocks << " rejected blocks, "
                  << (shapes.ok ? "all match" : "MISMATCH") << "\n";
        for (const auto& m : shapes.mismatches) std::cout << "  " << m << "\n";
    }
    if (!id.ok) return fail({kInfeasible, "identity", "power identity fails"});
    if (!shapes.ok) return fail({kInfeasible, "shapes", std::to_string(shapes.mismatches.size()) + " mismatches"});
    return kOk;
}

int run_eval(const std::string& path, const std::string& format) {
    ParamSet p;
    try {
        p = params_from_json(read_json(path));
    } catch (const std::invalid_argument& e) {
        throw Failure{kIo, "parse", path + ": " + e.what()};
    }
    auto rep = check_all_exact<double>(p, kCertificateTolerances);
    std::optional<BoundResult> res;
    std::string value_error;
    try {
        res = to_result(evaluate_bound(convert<double>(p)));
    } catch (const std::exception& e) {
        value_error = e.what();
    }
    if (format == "json") {
        nlohmann::json j;
        j["report"] = to_json(rep);
        if (res) j["result"] = to_json(*res);
        else j["result"] = nullptr;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "constraints:\n";
        print_report(std::cout, rep);
        if (res) print_result(std::cout, *res, p.q);
        else std::cout << "value: " << value_error << "\n";
    }
    if (!rep.pass()) {
        std::string labels;
        for (const auto& e : rep.failures()) labels += (labels.empty() ? "" : ",") + e.label;
        return fail({kInfeasible, "constraints", labels});
    }
    if (!res) return fail({kInfeasible, "value", value_error});
    return kOk;
}

int run_check(const std::string& path, const std::string& precision, const std::string& format) {
    BoundCertificate c;
    try {
        c = certificate_from_json(read_json(path));
    } catch (const std::invalid_argument& e) {
        throw Failure{kIo, "parse", path + ": " + e.what()};
    }
    auto v = check_certificate(c, precision == "dec50" ? Precision::Dec50 : Precision::Double);
    if (format == "json") {
        nlohmann::json j;
        j["pass"] = v.pass;
        j["reasons"] = v.reasons;
        j["report"] = to_json(v.report);
        j["recomputed"] = to_json(v.recomputed);
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "certificate " << path << ": " << (v.pass ? "PASS" : "FAIL") << "\n";
        print_report(std::cout, v.report);
        print_result(std::cout, v.recomputed, c.params.q);
        for (const auto& r : v.reasons) std::cout << "  " << r << "\n";
    }
    if (!v.pass) {
        std::string first = v.reasons.empty() ? "unknown" : v.reasons.front();
        return fail({kInfeasible, "certificate", first});
    }
    return kOk;
}

SearchOutcome search_or_fail(double k, const SearchConfig& cfg) {
    try {
        return optimize_omega(k, cfg);
    } catch (const SearchFailure& e) {
        throw Failure{kInfeasible, "infeasible", e.what()};
    }
}

int run_bound(double k, const SearchConfig& cfg, const std::string& out, std::optional<double> max_nu) {
    if (!(k > 0)) throw Failure{kIo, "usage", "k must be positive"};
    auto r = search_or_fail(k, cfg);
    if (!out.empty()) write_text(out, certificate_text(r.certificate));
    std::cout << "k = " << format_double(r.certificate.result.k) << "\n"
              << "nu = " << format_double(r.nu) << "\n"
              << "q = " << r.q << "\n";
    if (max_nu && r.nu > *max_nu)
        return fail({kShortfall, "shortfall", "nu=" + format_double(r.nu) + " exceeds " + format_double(*max_nu)});
    return kOk;
}

int run_alpha(const SearchConfig& cfg, const std::string& out, std::optional<double> min_alpha) {
    AlphaOutcome a;
    try {
        a = optimize_alpha(cfg);
    } catch (const SearchFailure& e) {
        throw Failure{kShortfall, "shortfall", e.what()};
    }
    for (const auto& s : a.trace)
        std::cout << "  k=" << format_double(s.k) << " nu=" << format_double(s.nu) << " q=" << s.q
                  << (s.accepted ? " accept" : " reject") << "\n";
    if (!out.empty()) write_text(out, certificate_text(a.witness.certificate));
    std::cout << "alpha >= " << format_double(a.alpha) << "\n"
              << "nu = " << format_double(a.witness.nu) << "\n"
              << "q = " << a.witness.q << "\n";
    if (min_alpha && a.alpha < *min_alpha)
        return fail({kShortfall, "shortfall", "alpha=" + format_double(a.alpha) + " below " + format_double(*min_alpha)});
    return kOk;
}

int run_mu(const SearchConfig& cfg, const std::string& out, std::optional<double> max_mu) {
    MuOutcome m;
    try {
        m = solve_mu(cfg);
    } catch (const SearchFailure& e) {
        throw Failure{kShortfall, "shortfall", e.what()};
    }
    for (const auto& s : m.trace)
        std::cout << "  k=" << format_double(s.k) << " nu-(1+2k)=" << format_double(s.nu) << " q=" << s.q << "\n";
    if (!out.empty()) write_text(out, certificate_text(m.witness.certificate));
    std::cout << "mu <= " << format_double(m.mu) << "\n"
              << "monotone bracket: " << (m.monotone ? "yes" : "no") << "\n";
    if (max_mu && m.mu > *max_mu)
        return fail({kShortfall, "shortfall", "mu=" + format_double(m.mu) + " above " + format_double(*max_mu)});
    return kOk;
}

int run_sweep(const std::string& ks_list, const SearchConfig& cfg, const std::string& out, std::string cert_dir) {
    auto ks = parse_ks(ks_list);
    if (cert_dir.empty() && !out.empty() && out != "-") cert_dir = out + ".certs";
    auto rows = sweep_table(ks, cfg, cert_dir);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    write_text(out, csv.str());
    int failed = 0;
    for (const auto& r : rows) {
        if (!r.error.empty()) {
            ++failed;
            std::cerr << "row k=" << format_double(r.k) << ": " << r.error << "\n";
        }
    }
    if (failed) return fail({kShortfall, "shortfall", std::to_string(failed) + " rows without a certificate"});
    return kOk;
}

std::vector<std::pair<double, double>> read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure{kIo, "io", "cannot open " + path};
    std::string line;
    std::getline(in, line);
    if (line.rfind("k,nu", 0) != 0) throw Failure{kIo, "parse", path + ": expected header starting with k,nu"};
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string k, nu;
        std::getline(ss, k, ',');
        std::getline(ss, nu, ',');
        try {
            double kv = std::stod(k), nv = std::stod(nu);
            if (std::isfinite(nv)) rows.emplace_back(kv, nv);
        } catch (const std::exception&) {
            throw Failure{kIo, "parse", path + ": bad row '" + line + "'"};
        }
    }
    return rows;
}

std::string curve_svg(const std::vector<std::pair<double, double>>& rows) {
    const double W = 640, H = 480, pad = 50;
    double kmin = rows.front().first, kmax = kmin, nmin = rows.front().second, nmax = nmin;
    for (const auto& [k, nu] : rows) {
        kmin = std::min(kmin, k), kmax = std::max(kmax, k);
        nmin = std::min(nmin, nu), nmax = std::max(nmax, nu);
    }
    kmin = std::min(kmin, reference::kAlpha), kmax = std::max(kmax, 1.0);
    nmin = std::min(nmin, 2.0), nmax = std::max(nmax, reference::kOmega);
    if (kmax - kmin < 1e-9) kmax = kmin + 1;
    if (nmax - nmin < 1e-9) nmax = nmin + 1;
    auto X = [&](double k) { return pad + (k - kmin) / (kmax - kmin) * (W - 2 * pad); };
    auto Y = [&](double nu) { return H - pad - (nu - nmin) / (nmax - nmin) * (H - 2 * pad); };
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
       << "\" stroke=\"black\"/>\n";
    const double xa = X(reference::kAlpha), yo = Y(reference::kOmega);
    os << "<line x1=\"" << xa << "\" y1=\"" << H - pad << "\" x2=\"" << xa << "\" y2=\"" << H - pad + 6
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << xa << "\" y=\"" << H - pad + 20 << "\" font-size=\"11\">0.31389</text>\n";
    os << "<line x1=\"" << pad - 6 << "\" y1=\"" << yo << "\" x2=\"" << pad << "\" y2=\"" << yo
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"2\" y=\"" << yo + 4 << "\" font-size=\"11\">2.372927</text>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\">k</text>\n";
    os << "<text x=\"10\" y=\"" << pad - 15 << "\" font-size=\"12\">omega(k)</text>\n";
    os << "<polyline fill=\"none\" stroke=\"black\" points=\"";
    for (std::size_t n = 0; n < rows.size(); ++n) os << (n ? " " : "") << X(rows[n].first) << "," << Y(rows[n].second);
    os << "\"/>\n</svg>\n";
    return os.str();
}

int run_curve(const std::string& out, const std::string& input, bool use_reference, const std::string& ks_list,
              const SearchConfig& cfg) {
    std::vector<std::pair<double, double>> rows;
    int missing = 0;
    if (!input.empty()) {
        rows = read_curve_csv(input);
    } else if (use_reference) {
        rows = reference::fourth_power_table();
    } else {
        for (const auto& r : sweep_table(parse_ks(ks_list), cfg)) {
            if (r.error.empty()) rows.emplace_back(r.k, r.nu);
            else ++missing;
        }
    }
    if (rows.empty()) return fail({kShortfall, "shortfall", "no curve points"});
    std::sort(rows.begin(), rows.end());
    const bool svg = out.size() >= 4 && out.substr(out.size() - 4) == ".svg";
    if (svg) {
        write_text(out, curve_svg(rows));
    } else {
        std::ostringstream csv;
        write_curve_csv(csv, rows);
        write_text(out, csv.str());
    }
    if (missing) return fail({kShortfall, "shortfall", std::to_string(missing) + " points without a certificate"});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Laser-method bounds from the fourth power of the Coppersmith-Winograd tensor"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", std::string(kToolVersion));

    int q = 2, power = 4;
    std::string format = "text";
    std::size_t budget = 250'000;
    auto* verify = app.add_subcommand("verify", "check the block decomposition and shape tables symbolically");
    verify->add_option("--q", q, "CW parameter")->required();
    verify->add_option("--power", power, "tensor power")->check(CLI::IsMember({2, 4}));
    verify->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
    verify->add_option("--budget", budget, "monomial budget");

    std::string params_path;
    auto* eval = app.add_subcommand("eval", "evaluate constraints and the bound at a parameter point");
    eval->add_option("--params,params", params_path, "ParamSet JSON")->required();
    eval->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

    SearchFlags sf;
    double k = 1.0;
    std::string out, cert_dir, input, ks_list;
    std::optional<double> limit;

    auto* bound = app.add_subcommand("bound", "minimize nu at a fixed k and emit a certificate");
    bound->add_option("--k", k, "target k")->required();
    bound->add_option("--out", out, "certificate path");
    bound->add_option("--max-nu", limit, "exit 1 when the best nu exceeds this value");
    sf.attach(bound);

    auto* alpha = app.add_subcommand("alpha", "largest k with nu = 2 (bisection)");
    alpha->add_option("--out", out, "witness certificate path");
    alpha->add_option("--min-alpha", limit, "exit 1 when alpha falls below this value");
    sf.attach(alpha);

    auto* mu = app.add_subcommand("mu", "solve omega(k) = 1 + 2k (bisection)");
    mu->add_option("--out", out, "witness certificate path");
    mu->add_option("--max-mu", limit, "exit 1 when mu exceeds this value");
    sf.attach(mu);

    auto* sweep = app.add_subcommand("sweep", "optimize a list of k values");
    sweep->add_option("--ks", ks_list, "comma-separated k values")->required();
    sweep->add_option("--out", out, "CSV path (default stdout)");
    sweep->add_option("--cert-dir", cert_dir, "certificate directory (default <out>.certs)");
    sf.attach(sweep);

    std::string cert_path, precision = "double";
    auto* check = app.add_subcommand("check", "re-verify a certificate");
    check->add_option("certificate", cert_path, "certificate JSON")->required();
    check->add_option("--precision", precision, "double or dec50")->check(CLI::IsMember({"double", "dec50"}));
    check->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

    bool use_reference = false;
    auto* curve = app.add_subcommand("curve", "omega(k) curve as CSV or SVG");
    curve->add_option("--out", out, "output path; .svg selects SVG")->required();
    curve->add_option("--input", input, "k,nu CSV to render instead of searching");
    curve->add_flag("--reference", use_reference, "render the reference fourth-power values");
    curve->add_option("--ks", ks_list, "k values to optimize")->default_str(default_ks());
    sf.attach(curve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fail({kIo, "usage", e.what()});
    }

    try {
        if (*verify) return run_verify(q, power, format, budget);
        if (*eval) return run_eval(params_path, format);
        if (*check) return run_check(cert_path, precision, format);
        if (*bound) return run_bound(k, sf.resolve(), out, limit);
        if (*alpha) return run_alpha(sf.resolve(), out, limit);
        if (*mu) return run_mu(sf.resolve(), out, limit);
        if (*sweep) return run_sweep(ks_list, sf.resolve(), out, cert_dir);
        if (*curve) return run_curve(out, input, use_reference, ks_list.empty() ? default_ks() : ks_list, sf.resolve());
    } catch (const Failure& f) {
        return fail(f);
    } catch (const std::filesystem::filesystem_error& e) {
        return fail({kIo, "io", e.what()});
    } catch (const std::exception& e) {
        return fail({kIo, "error", e.what()});
    }
    return kOk;
}
