#include "snowcircle/fold.hpp"
#include "snowcircle/metric.hpp"
#include "snowcircle/report.hpp"
#include "snowcircle/rule.hpp"
#include "snowcircle/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using namespace snowcircle;

constexpr int kExitPass = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitConfigError = 2;

struct RuleSource {
    std::string file;
    std::string gen;
    unsigned depth = 12;
    std::string topology = "circle";

    DiameterRule load() const {
        if (!file.empty() && !gen.empty())
            throw std::invalid_argument("choose one of --rule and --gen");
        if (!file.empty()) return load_rule_file(file);
        if (!gen.empty())
            return DiameterRule::generate(GeneratorSpec::parse(gen), depth,
                                          topology_from_string(topology));
        throw std::invalid_argument("a rule is required (--rule FILE or --gen SPEC)");
    }
};

void add_rule_options(CLI::App* cmd, RuleSource& src) {
    cmd->add_option("--rule", src.file, "rule file (JSON)");
    cmd->add_option("--gen", src.gen,
                    "generator spec: uniform-halve | periodic-keep:P | random:p=..,seed=..,cap=..");
    cmd->add_option("--topology", src.topology, "circle|arc (with --gen)");
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write to " + path);
    return file;
}

double approx(const DyadicRational& v) {
    return std::ldexp(static_cast<double>(v.mantissa().convert_to<double>()), // lossy
                      -static_cast<int>(v.exponent()));
}

int cmd_generate(const std::string& spec_text, unsigned depth, const std::string& topology,
                 const std::string& out_path) {
    GeneratorSpec spec = GeneratorSpec::parse(spec_text);
    DiameterRule rule = DiameterRule::generate(spec, depth, topology_from_string(topology));
    save_rule_file(rule, out_path);
    std::cout << "wrote " << out_path << " (hash " << rule.hash() << ")\n";
    return kExitPass;
}

int cmd_dist(const RuleSource& src, const std::string& metric, unsigned depth,
             const std::vector<std::string>& queries, const std::string& out_path,
             bool with_approx) {
    DiameterRule rule = src.load();
    MetricKind kind = MetricKind::parse(metric);
    MetricIndex idx(rule, depth, kind);
    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    for (const auto& q : queries) {
        if (q.rfind("all@", 0) == 0) {
            unsigned d = static_cast<unsigned>(std::stoul(q.substr(4)));
            os << distance_matrix_csv(idx, d);
            continue;
        }
        auto comma = q.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("dist wants 'x,y' pairs or all@depth");
        DyadicPoint x = DyadicPoint::parse(q.substr(0, comma));
        DyadicPoint y = DyadicPoint::parse(q.substr(comma + 1));
        DyadicRational d = idx.dist(x, y);
        os << x.str() << "," << y.str() << "," << d.str();
        if (with_approx) os << "," << approx(d) << " (approx, lossy)";
        os << "\n";
    }
    return kExitPass;
}

int cmd_fold(const RuleSource& src, unsigned m, unsigned n,
             const std::vector<std::string>& points, const std::string& out_path) {
    DiameterRule rule = src.load();
    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "x,F_mn,F_m,g_F0\n";
    for (const auto& text : points) {
        DyadicPoint x = DyadicPoint::parse(text);
        DyadicPoint fmn = cascade_eval(rule, m, n, x);
        DyadicPoint fm = limit_eval(rule, m, x);
        DyadicRational line = real_coordinate(limit_eval(rule, 0, x), rule.topology());
        os << x.str() << "," << fmn.str() << "," << fm.str() << "," << line.str() << "\n";
    }
    return kExitPass;
}

int cmd_verify(const RuleSource& src, VerifyOptions opt, const std::string& out_path) {
    DiameterRule rule = src.load();
    VerificationOutcome outcome = verify_lipschitz_light(rule, opt);
    nlohmann::json report = verification_report_json(rule, outcome);
    if (!out_path.empty()) {
        std::ofstream file(out_path);
        if (!file) throw std::runtime_error("cannot write to " + out_path);
        file << report.dump(2) << "\n";
    } else {
        std::cout << report.dump(2) << "\n";
    }
    std::cerr << "global_max_ratio " << outcome.global_ratio.str() << " bound "
              << kComponentBound << " pass " << (outcome.pass() ? "yes" : "no") << "\n";
    return outcome.pass() ? kExitPass : kExitVerificationFailure;
}

int cmd_lemmas(const RuleSource& src, unsigned depth, const std::string& out_path) {
    DiameterRule rule = src.load();
    auto rows = lemma_suite(rule, depth);
    bool all = true;
    for (const auto& r : rows) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  instances=" << r.instances
                  << "  worst_margin=" << r.worst_margin << "\n";
        all = all && r.pass;
    }
    if (!out_path.empty()) {
        std::ofstream file(out_path);
        if (!file) throw std::runtime_error("cannot write to " + out_path);
        file << lemma_suite_json(rule, depth, rows).dump(2) << "\n";
    }
    return all ? kExitPass : kExitVerificationFailure;
}

int cmd_bench(const RuleSource& src, unsigned depth) {
    using clock = std::chrono::steady_clock;
    DiameterRule rule = src.load();
    auto t0 = clock::now();
    MetricIndex idx(rule, depth, MetricKind::full());
    auto t1 = clock::now();
    DistProfile prof;
    std::size_t profiles = 0;
    for (std::uint64_t i = 0; i < idx.grid(); i += std::max<std::uint64_t>(1, idx.grid() / 256)) {
        idx.fill_profile(i, prof);
        ++profiles;
    }
    auto t2 = clock::now();
    auto ms = [](auto a, auto b) {
        return std::chrono::duration_cast<std::chrono::microseconds>(b - a).count() / 1000.0;
    };
    std::cout << "index build depth " << depth << ": " << ms(t0, t1) << " ms\n";
    std::cout << profiles << " source profiles: " << ms(t1, t2) << " ms ("
              << ms(t1, t2) / profiles << " ms each)\n";
    if (depth >= 9) {
        VerifyOptions opt;
        opt.depth = std::min(depth, 11u);
        opt.mstar_lo = 3;
        opt.mstar_hi = std::min(6u, opt.depth - 4);
        opt.composite = false;
        auto t3 = clock::now();
        auto outcome = verify_lipschitz_light(rule, opt);
        auto t4 = clock::now();
        std::cout << "verify slice depth " << opt.depth << " M*<=" << opt.mstar_hi << ": "
                  << ms(t3, t4) << " ms, global ratio " << outcome.global_ratio.str() << "\n";
    }
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"snowcircle: exact chain metrics, folding cascades, and Lipschitz-light "
                 "verification for dyadic diameter functions"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "generate a rule file");
    std::string gen_spec, gen_topology = "circle", gen_out;
    unsigned gen_depth = 12;
    gen->add_option("spec", gen_spec, "uniform-halve | periodic-keep:P | random:p=..,seed=..,cap=..")
        ->required();
    gen->add_option("--depth", gen_depth, "explicit decision depth");
    gen->add_option("--topology", gen_topology, "circle|arc");
    gen->add_option("--out", gen_out, "output rule file")->required();

    // dist
    auto* dist = app.add_subcommand("dist", "exact distances (pairs or all@depth)");
    RuleSource dist_src;
    add_rule_options(dist, dist_src);
    std::string dist_metric = "full", dist_out;
    unsigned dist_depth = 10;
    bool dist_approx = false;
    std::vector<std::string> dist_queries;
    dist->add_option("--metric", dist_metric, "full | trunc:N");
    dist->add_option("--depth", dist_depth, "index depth");
    dist->add_option("--out", dist_out, "output file (default stdout)");
    dist->add_flag("--approx", dist_approx, "append decimal approximations (lossy)");
    dist->add_option("queries", dist_queries, "pairs 'x,y' or all@depth")->required();

    // fold
    auto* fold = app.add_subcommand("fold", "evaluate the folding cascade");
    RuleSource fold_src;
    add_rule_options(fold, fold_src);
    unsigned fold_m = 0, fold_n = 0;
    std::string fold_out;
    std::vector<std::string> fold_points;
    fold->add_option("--m", fold_m, "cascade target level m")->required();
    fold->add_option("--n", fold_n, "cascade source level n")->required();
    fold->add_option("--out", fold_out, "output file (default stdout)");
    fold->add_option("points", fold_points, "dyadic points")->required();

    // verify
    auto* verify = app.add_subcommand("verify", "Lipschitz-light verification sweep");
    RuleSource verify_src;
    add_rule_options(verify, verify_src);
    VerifyOptions vopt;
    vopt.jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string verify_out, mstar_range = "3..8";
    bool no_traces = false, no_composite = false;
    verify->add_option("--depth", vopt.depth, "grid depth L (default 12, max 13)");
    verify->add_option("--mstar", mstar_range, "target level range A..B (default 3..8)");
    verify->add_option("--jobs", vopt.jobs, "parallel jobs (results are order-independent)");
    verify->add_option("--out", verify_out, "report JSON path (default stdout)");
    verify->add_flag("--no-traces", no_traces, "skip the V-trace lemma machinery");
    verify->add_flag("--no-composite", no_composite, "skip the composite g∘F_0 sweep");

    // lemmas
    auto* lemmas = app.add_subcommand("lemmas", "per-lemma pass/fail table");
    RuleSource lemmas_src;
    add_rule_options(lemmas, lemmas_src);
    unsigned lemmas_depth = 10;
    std::string lemmas_out;
    lemmas->add_option("--depth", lemmas_depth, "driving depth");
    lemmas->add_option("--out", lemmas_out, "also write the table as JSON");

    // bench
    auto* bench = app.add_subcommand("bench", "timing of the core engines");
    RuleSource bench_src;
    add_rule_options(bench, bench_src);
    unsigned bench_depth = 12;
    bench->add_option("--depth", bench_depth, "index depth");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(gen_spec, gen_depth, gen_topology, gen_out);
        if (dist->parsed()) {
            dist_src.depth = dist_depth;
            return cmd_dist(dist_src, dist_metric, dist_depth, dist_queries, dist_out,
                            dist_approx);
        }
        if (fold->parsed()) return cmd_fold(fold_src, fold_m, fold_n, fold_points, fold_out);
        if (verify->parsed()) {
            auto dots = mstar_range.find("..");
            if (dots == std::string::npos)
                throw std::invalid_argument("--mstar wants a range A..B");
            vopt.mstar_lo = static_cast<unsigned>(std::stoul(mstar_range.substr(0, dots)));
            vopt.mstar_hi = static_cast<unsigned>(std::stoul(mstar_range.substr(dots + 2)));
            vopt.run_traces = !no_traces;
            vopt.composite = !no_composite;
            verify_src.depth = vopt.depth;
            return cmd_verify(verify_src, vopt, verify_out);
        }
        if (lemmas->parsed()) {
            lemmas_src.depth = lemmas_depth;
            return cmd_lemmas(lemmas_src, lemmas_depth, lemmas_out);
        }
        if (bench->parsed()) {
            bench_src.depth = bench_depth;
            return cmd_bench(bench_src, bench_depth);
        }
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
