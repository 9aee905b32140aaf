#pragma once

//
// Command-line front end. Exit codes: 0 success, 1 usage or input error,
// 2 numerical failure (including a failed `check`).
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "error.hpp"
#include "factor.hpp"
#include "lpsvd.hpp"

namespace lplr {

namespace cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_numerical = 2;

inline bool is_numerical(Errc c)
{
    switch (c) {
    case Errc::SvdFailure:
    case Errc::NotPositiveDefinite:
    case Errc::SingularMatrix:
    case Errc::RankDeficient:
    case Errc::ZeroGradient:
    case Errc::NoConvergence:
        return true;
    default:
        return false;
    }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << text << '\n';
        return;
    }
    std::ofstream f(path, std::ios::trunc);
    if (!f)
        throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
    f << text << '\n';
}

struct Common {
    std::string input;
    double p = 1.0;
    std::string method = "lowner";
    std::string contraction = "inv-d";
    std::uint64_t seed = 0;
    std::size_t samples = 1000;
};

inline RunConfig run_config(const Common& c)
{
    RunConfig rc;
    rc.factor.deterministic.lowner.contraction = c.contraction == "inv-sqrt-d" ? Contraction::InvSqrtD
                                                                               : Contraction::InvD;
    rc.factor.deterministic.lowner.seed = c.seed;
    rc.factor.randomized.seed = c.seed;
    rc.eval.seed = c.seed;
    rc.eval.sandwich_samples = c.samples;
    return rc;
}

inline void add_common(CLI::App* app, Common& c, bool with_method)
{
    app->add_option("--input", c.input, "matrix file (.lplr binary or .csv)")->required()->check(CLI::ExistingFile);
    app->add_option("--p", c.p, "norm exponent p >= 1")->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
    if (with_method)
        app->add_option("--method", c.method, "lowner | randomized | svd")
            ->check(CLI::IsMember({"lowner", "randomized", "svd"}));
    app->add_option("--contraction", c.contraction, "vertex-test contraction: inv-d | inv-sqrt-d")
        ->check(CLI::IsMember({"inv-d", "inv-sqrt-d"}));
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--samples", c.samples, "directions sampled for the sandwich range");
}

inline RankKApprox factor_one(const DenseMatrix& a, std::size_t k, double p, Method m, const RunConfig& rc)
{
    return m == Method::L2Svd ? l2_low_rank(a, k) : lp_low_rank(a, k, p, m, rc.factor);
}

} // namespace cli

/// Runs the CLI on `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using namespace cli;
    CLI::App app{"lplr: entrywise lp low-rank approximation"};
    app.require_subcommand(1);

    // factorize / baseline
    Common fc;
    std::size_t rank = 0;
    std::string report, out_left, out_right;
    auto* factorize = app.add_subcommand("factorize", "rank-k factorization with a JSON report");
    add_common(factorize, fc, true);
    factorize->add_option("--rank", rank, "target rank k in [1, d-1]")->required()->check(CLI::PositiveNumber);
    factorize->add_option("--report", report, "report path (stdout when omitted)");
    factorize->add_option("--out-left", out_left, "n×k factor U·sqrt(D_k)");
    factorize->add_option("--out-right", out_right, "k×d factor sqrt(D_k)·Vᵀ");

    Common bc;
    bc.p = 2.0;
    std::size_t b_rank = 0;
    std::string b_report, b_left, b_right;
    auto* baseline = app.add_subcommand("baseline", "truncated SVD; errors measured in the lp norm given by --p");
    add_common(baseline, bc, false);
    baseline->add_option("--rank", b_rank, "target rank k in [1, d-1]")->required()->check(CLI::PositiveNumber);
    baseline->add_option("--report", b_report, "report path (stdout when omitted)");
    baseline->add_option("--out-left", b_left, "n×k factor");
    baseline->add_option("--out-right", b_right, "k×d factor");

    // sweep
    Common sc;
    std::vector<std::size_t> s_ranks;
    std::vector<double> s_ps{1.0, 2.0};
    std::vector<std::string> s_methods{"lowner", "svd"};
    unsigned s_threads = 0;
    std::string s_report, s_csv;
    auto* sweep_cmd = app.add_subcommand("sweep", "all (k, p, method) combinations");
    sweep_cmd->add_option("--input", sc.input, "matrix file")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--ranks", s_ranks, "ranks, comma separated")->required()->delimiter(',')->check(
        CLI::PositiveNumber);
    sweep_cmd->add_option("--ps", s_ps, "values of p, comma separated")
        ->delimiter(',')
        ->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
    sweep_cmd->add_option("--methods", s_methods, "methods, comma separated")
        ->delimiter(',')
        ->check(CLI::IsMember({"lowner", "randomized", "svd"}));
    sweep_cmd->add_option("--contraction", sc.contraction)->check(CLI::IsMember({"inv-d", "inv-sqrt-d"}));
    sweep_cmd->add_option("--seed", sc.seed);
    sweep_cmd->add_option("--samples", sc.samples);
    sweep_cmd->add_option("--threads", s_threads, "worker threads (0: hardware concurrency)");
    sweep_cmd->add_option("--report", s_report, "JSON array of reports (stdout when omitted)");
    sweep_cmd->add_option("--csv", s_csv, "also write a CSV table");

    // synth
    SyntheticSpec spec;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "synthetic low-rank matrix with outliers");
    synth->add_option("--n", spec.n, "rows")->check(CLI::PositiveNumber);
    synth->add_option("--d", spec.d, "columns")->check(CLI::PositiveNumber);
    synth->add_option("--k-true", spec.k_true, "rank of the clean part")->check(CLI::PositiveNumber);
    synth->add_option("--outliers", spec.outlier_fraction, "fraction of rows scaled as outliers")
        ->check(CLI::Range(0.0, 0.999999));
    synth->add_option("--noise", spec.noise_sigma, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
    synth->add_option("--outlier-scale", spec.outlier_scale, "outlier row multiplier (>= 1)")
        ->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
    synth->add_option("--seed", spec.seed);
    synth->add_option("--out", synth_out, "output matrix file")->required();

    // check
    Common cc;
    std::size_t c_rank = 0;
    double c_slack = 0.1;
    std::string c_report;
    auto* check = app.add_subcommand("check", "verify the sandwich range and (with --rank) the error bound");
    add_common(check, cc, true);
    check->add_option("--rank", c_rank, "also check the rank-k error bound")->check(CLI::PositiveNumber);
    check->add_option("--slack", c_slack, "relative slack")->check(CLI::NonNegativeNumber);
    check->add_option("--report", c_report, "summary path (stdout when omitted)");

    std::vector<std::string> argv_store{"lplr"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_store)
        argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        if (*synth) {
            store_matrix(synth_out, generate_synthetic(spec));
            return exit_ok;
        }

        if (*factorize || *baseline) {
            const bool is_base = baseline->parsed();
            const Common& c = is_base ? bc : fc;
            const std::size_t k = is_base ? b_rank : rank;
            const Method m = is_base ? Method::L2Svd : method_from_string(c.method);
            const RunConfig rc = run_config(c);
            const DenseMatrix a = load_matrix(c.input);
            const auto t0 = std::chrono::steady_clock::now();
            const RankKApprox ak = factor_one(a, k, c.p, m, rc);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            EvalReport r = evaluate(a, ak, c.p, rc.eval);
            r.wall_time_ms = ms;
            const std::string& left = is_base ? b_left : out_left;
            const std::string& right = is_base ? b_right : out_right;
            // factors in the frame of the input: A ≈ left·right
            if (!left.empty())
                store_matrix(left, ak.transposed ? ak.right.transpose() : ak.left);
            if (!right.empty())
                store_matrix(right, ak.transposed ? ak.left.transpose() : ak.right);
            write_text(is_base ? b_report : report, report_to_json(r), out);
            return exit_ok;
        }

        if (*sweep_cmd) {
            std::vector<Method> methods;
            for (const auto& s : s_methods)
                methods.push_back(method_from_string(s));
            const RunConfig rc = run_config(sc);
            const DenseMatrix a = load_matrix(sc.input);
            const auto reports = sweep(a, s_ranks, s_ps, methods, rc, s_threads);
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const auto& r : reports)
                arr.push_back(r);
            write_text(s_report, arr.dump(2), out);
            if (!s_csv.empty()) {
                std::string csv = "k,p,method,compression_rate,error_pp,error_l2_baseline,bound_upper\n";
                for (const auto& r : reports) {
                    std::ostringstream line;
                    line.precision(17);
                    line << r.k << ',' << r.p << ',' << to_string(r.method) << ',' << r.compression_rate << ','
                         << r.error_pp << ',' << r.error_l2_baseline << ',' << r.bound_upper << '\n';
                    csv += line.str();
                }
                std::ofstream f(s_csv, std::ios::trunc);
                if (!f)
                    throw Error(Errc::IoError, "cannot open '" + s_csv + "' for writing");
                f << csv;
            }
            return exit_ok;
        }

        if (*check) {
            const RunConfig rc = run_config(cc);
            const DenseMatrix a = load_matrix(cc.input);
            const Oriented o = orient(a);
            const Method m = method_from_string(cc.method);
            const LpSvd basis = factorize_basis(o.a, cc.p, m, rc.factor);
            const SandwichRange s = sandwich_check(o.a, cc.p, basis.D, basis.V, cc.samples, cc.seed);
            const double dd = static_cast<double>(o.a.cols());
            // the randomized path certifies only its measured distortion
            const double hi_limit =
                m == Method::LpRandomized ? basis.distortion * (1.0 + c_slack) : std::sqrt(dd) * (1.0 + c_slack);
            const double lo_limit = m == Method::LpRandomized ? 1.0 - 1e-6 : 1.0 - c_slack;
            bool ok = s.lo >= lo_limit && s.hi <= hi_limit;
            nlohmann::ordered_json j{{"n", o.a.rows()},   {"d", o.a.cols()},  {"p", cc.p},
                                     {"method", cc.method}, {"sandwich_lo", s.lo}, {"sandwich_hi", s.hi},
                                     {"sandwich_lo_min", lo_limit}, {"sandwich_hi_max", hi_limit},
                                     {"sandwich_ok", s.lo >= lo_limit && s.hi <= hi_limit}};
            if (c_rank) {
                const RankKApprox ak = detail::truncate(basis, c_rank, m, o.transposed);
                const EvalReport r = evaluate(a, ak, cc.p, rc.eval);
                const double limit = std::pow(1.0 + c_slack, cc.p) * r.bound_upper;
                const bool bound_ok = r.error_pp <= limit;
                ok = ok && bound_ok;
                j["k"] = c_rank;
                j["error_pp"] = r.error_pp;
                j["bound_upper_with_slack"] = limit;
                j["bound_ok"] = bound_ok;
            }
            j["ok"] = ok;
            write_text(c_report, j.dump(2), out);
            return ok ? exit_ok : exit_numerical;
        }
    } catch (const Error& e) {
        err << "lplr: " << e.what() << '\n';
        return is_numerical(e.code()) ? exit_numerical : exit_usage;
    } catch (const std::exception& e) {
        err << "lplr: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

} // namespace lplr
