// Command-line front end: channel reduction, high-SNR entropy offsets,
// low-SNR slopes, channel ensembles and density exports.
//
// Exit codes: 0 success, 1 solver non-convergence, 2 input error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "oicap/capacity.hpp"
#include "oicap/io.hpp"
#include "oicap/low_snr.hpp"
#include "oicap/maxent.hpp"
#include "oicap/scenario.hpp"

namespace {

using namespace oicap;

constexpr int kExitOk = 0;
constexpr int kExitSolver = 1;
constexpr int kExitInput = 2;

struct CommonArgs {
    std::string channel_path;
    std::string alpha_text;
    std::string mode = "EC";
    std::string out_dir;
    std::string sigma_text = "1e-2";
    std::uint64_t seed = 1;
    int samples = 1000;
    int quad_nodes = 0;       // 0 = default
    std::string force_path;   // "", "fiber", "rank-one"
};

ValidatedChannel load_validated(const CommonArgs& args) {
    ChannelInput input = read_channel(args.channel_path);
    Eigen::VectorXd alpha = input.alpha;
    if (!args.alpha_text.empty()) alpha = parse_alpha(args.alpha_text);
    if (alpha.size() == 0)
        throw std::invalid_argument("no alpha given (use --alpha or an \"alpha\" block in the JSON)");
    return validate(std::move(input.channel), std::move(alpha));
}

CostMode parse_mode(const std::string& mode) {
    if (mode == "EC" || mode == "ec") return CostMode::EqualCost;
    if (mode == "BC" || mode == "bc") return CostMode::BoundedCost;
    throw std::invalid_argument("mode must be EC or BC");
}

MaxEntOptions make_opts(const CommonArgs& args) {
    MaxEntOptions opts;
    if (args.quad_nodes > 0) {
        opts.quad.gl_nodes = args.quad_nodes;
        opts.quad.qmc_points = args.quad_nodes;
    }
    return opts;
}

std::optional<GammaPath> parse_force_path(const std::string& text) {
    if (text.empty()) return std::nullopt;
    if (text == "fiber") return GammaPath::Fiber;
    if (text == "rank-one") return GammaPath::RankOne;
    throw std::invalid_argument("--path must be fiber or rank-one");
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::string out_file(const std::string& dir, const std::string& name) {
    return dir.empty() ? name : (std::filesystem::path(dir) / name).string();
}

int cmd_reduce(const CommonArgs& args) {
    ChannelInput input = read_channel(args.channel_path);
    ValidatedChannel vc = validate(std::move(input.channel),
                                   input.alpha.size() ? input.alpha
                                                      : Eigen::VectorXd::Constant(input.channel.H.cols(), 0.5));
    const ReducedChannel rc = reduce(vc.channel);
    std::cout << "rank: " << rc.rank << "\n";
    std::cout << "sigma:";
    for (int i = 0; i < rc.sigma.size(); ++i) std::cout << " " << std::setprecision(9) << rc.sigma[i];
    std::cout << "\nV1:\n" << rc.V1 << "\n";
    if (rc.has_tail) std::cout << "v_tail: " << rc.v_tail.transpose() << "\n";
    ensure_out_dir(args.out_dir);
    std::ofstream json_out(out_file(args.out_dir, "reduced.json"));
    json_out << reduced_to_json(rc) << "\n";
    std::ofstream zd_out(out_file(args.out_dir, "decomposition.json"));
    zd_out << decomposition_to_json(decompose(rc)) << "\n";
    std::cout << "wrote " << out_file(args.out_dir, "reduced.json") << " and "
              << out_file(args.out_dir, "decomposition.json") << "\n";
    return kExitOk;
}

int cmd_gamma(const CommonArgs& args) {
    ValidatedChannel vc = load_validated(args);
    const CostMode mode = parse_mode(args.mode);
    const GammaReport report =
        compute_gamma(vc.channel, vc.profile, mode, make_opts(args), parse_force_path(args.force_path));
    std::cout << std::setprecision(9);
    std::cout << "gamma: " << report.gamma << " nats (dim " << report.dim << ")\n";
    std::cout << gamma_report_to_json(report) << "\n";
    if (std::isfinite(report.gamma) && report.dim >= 1) {
        const Eigen::VectorXd sigmas = parse_alpha(args.sigma_text);
        for (int i = 0; i < sigmas.size(); ++i) {
            const double epi = epi_lower_bound(report.gamma, report.dim, NoiseLevel{sigmas[i]});
            std::cout << "epi_lower_bound(sigma=" << sigmas[i] << "): " << epi << " nats\n";
        }
    }
    ensure_out_dir(args.out_dir);
    std::ofstream json_out(out_file(args.out_dir, "gamma.json"));
    json_out << gamma_report_to_json(report) << "\n";
    if (report.status == SolveStatus::max_iter) return kExitSolver;
    if (report.status == SolveStatus::infeasible) {
        std::cout << "status: infeasible\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_slope(const CommonArgs& args) {
    ValidatedChannel vc = load_validated(args);
    const CostMode mode = parse_mode(args.mode);
    const Eigen::MatrixXd G = gram(vc.channel);
    std::cout << std::setprecision(9);
    if (mode == CostMode::EqualCost) {
        const double v = max_output_trace_ec(G, vc.profile.alpha);
        std::cout << "max_trace: " << v << "\nslope: " << 0.5 * v << " nats/snr\n";
    } else {
        const Allocation alloc = solve_bc_allocation(G, vc.profile.alpha);
        const LadderResult ladder = best_ladder_allocation(G, vc.profile.alpha);
        const double ratio = alloc.value > 0 ? ladder.value / alloc.value : 1.0;
        std::cout << "max_trace: " << alloc.value << "\nslope: " << 0.5 * alloc.value
                  << " nats/snr\n";
        std::cout << "x_star:";
        for (int i = 0; i < alloc.x.size(); ++i) std::cout << " " << alloc.x[i];
        std::cout << "\nladder_beta: " << ladder.beta << "\nladder_value: " << ladder.value
                  << "\nladder_ratio: " << ratio << "\n";
        if (!args.out_dir.empty()) {
            ensure_out_dir(args.out_dir);
            const std::string path = out_file(args.out_dir, "allocation.csv");
            std::ofstream out(path);
            out << std::setprecision(9);
            out << "channel,value,ladder_beta,ladder_ratio";
            for (int i = 0; i < alloc.x.size(); ++i) out << ",x" << (i + 1);
            out << "\n" << args.channel_path << "," << alloc.value << "," << ladder.beta << ","
                << ratio;
            for (int i = 0; i < alloc.x.size(); ++i) out << "," << alloc.x[i];
            out << "\n";
            std::cout << "wrote " << path << "\n";
        }
        if (!alloc.converged) return kExitSolver;
    }
    return kExitOk;
}

int cmd_density(const CommonArgs& args) {
    ValidatedChannel vc = load_validated(args);
    const CostMode mode = parse_mode(args.mode);
    const GammaReport report = compute_gamma(vc.channel, vc.profile, mode, make_opts(args),
                                             parse_force_path(args.force_path));
    if (report.status != SolveStatus::converged || report.path == GammaPath::Degenerate) {
        std::cerr << "solver did not converge; no density to export\n";
        return kExitSolver;
    }
    ensure_out_dir(args.out_dir);
    const std::string path = out_file(args.out_dir, "density.csv");
    std::ofstream out(path);
    out << std::setprecision(9);
    const int k = report.problem.spec.dim();
    for (int i = 0; i < k; ++i) out << "s" << (i + 1) << ",";
    out << "pdf\n";
    if (k == 1) {
        const auto [lo, hi] = report.problem.spec.support.bounding_box();
        const int n = std::max(args.samples, 16);
        for (int i = 0; i <= n; ++i) {
            Eigen::VectorXd s(1);
            s[0] = lo[0] + (hi[0] - lo[0]) * i / n;
            out << s[0] << "," << density_eval(report.problem.sol, report.problem.spec, s) << "\n";
        }
    } else {
        Rng rng(args.seed);
        for (int i = 0; i < args.samples; ++i) {
            const Eigen::VectorXd s = sample_uniform(report.problem.spec.support, rng);
            for (int d = 0; d < k; ++d) out << s[d] << ",";
            out << density_eval(report.problem.sol, report.problem.spec, s) << "\n";
        }
    }
    std::cout << "wrote " << path << "\n";
    return kExitOk;
}

EnsembleKind parse_kind(const std::string& kind) {
    if (kind == "indoor-sr") return EnsembleKind::IndoorScreen;
    if (kind == "indoor-mdr") return EnsembleKind::IndoorMultiDirectional;
    if (kind == "lognormal") return EnsembleKind::Lognormal;
    throw std::invalid_argument("kind must be indoor-sr, indoor-mdr or lognormal");
}

int cmd_ensemble(const CommonArgs& args, const std::string& kind, bool with_gamma,
                 int gamma_max_solves, const std::string& config_path) {
    EnsembleConfig config;
    config.kind = parse_kind(kind);
    config.n_samples = args.samples;
    config.seed = args.seed;
    if (!args.alpha_text.empty()) config.alpha = parse_alpha(args.alpha_text);
    config.with_gamma = with_gamma;
    config.gamma_max_solves = gamma_max_solves;
    config.maxent = make_opts(args);

    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        nlohmann::json j;
        in >> j;
        if (j.contains("kind")) config.kind = parse_kind(j["kind"].get<std::string>());
        if (j.contains("samples")) config.n_samples = j["samples"].get<int>();
        if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("alpha")) {
            const auto& arr = j["alpha"];
            config.alpha.resize(static_cast<Eigen::Index>(arr.size()));
            for (std::size_t i = 0; i < arr.size(); ++i)
                config.alpha[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        }
        if (j.contains("eps_rank_threshold"))
            config.eps_rank_threshold = j["eps_rank_threshold"].get<double>();
        if (j.contains("with_gamma")) config.with_gamma = j["with_gamma"].get<bool>();
        if (j.contains("gamma_max_solves")) config.gamma_max_solves = j["gamma_max_solves"].get<int>();
        if (j.contains("quad_points")) config.maxent.quad.qmc_points = j["quad_points"].get<int>();
        if (j.contains("threads")) config.threads = j["threads"].get<int>();
        if (j.contains("lognormal_n_r")) config.lognormal_n_r = j["lognormal_n_r"].get<int>();
        if (j.contains("lognormal_n_t")) config.lognormal_n_t = j["lognormal_n_t"].get<int>();
    }
    if (const char* env = std::getenv("OICAP_THREADS")) config.threads = std::max(1, std::atoi(env));

    const EnsembleResult result = ensemble_run(config);
    ensure_out_dir(args.out_dir);
    write_ensemble_csv(out_file(args.out_dir, "samples.csv"), result);
    for (const auto& table : result.cdfs)
        write_cdf_csv(out_file(args.out_dir, "cdf_" + table.metric + ".csv"), table);
    std::cout << "samples: " << result.rows.size() << " (all-zero: " << result.n_all_zero
              << ", solver failures: " << result.n_failed << ")\n";
    std::cout << "wrote " << out_file(args.out_dir, "samples.csv") << " and "
              << result.cdfs.size() << " CDF tables\n";
    return result.n_failed == 0 ? kExitOk : kExitSolver;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Capacity toolkit for MIMO optical intensity channels under per-antenna "
                 "peak- and average-intensity constraints"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string ensemble_kind = "indoor-sr";
    bool ensemble_gamma = false;
    int gamma_max_solves = 0;
    std::string ensemble_config;

    auto add_common = [&](CLI::App* cmd, bool needs_channel) {
        if (needs_channel)
            cmd->add_option("--channel", args.channel_path, "channel file (.json or .csv)")->required();
        cmd->add_option("--alpha", args.alpha_text, "comma list or @file.csv");
        cmd->add_option("--mode", args.mode, "EC or BC");
        cmd->add_option("--sigma", args.sigma_text, "noise standard deviation (comma list allowed)");
        cmd->add_option("--seed", args.seed, "random seed");
        cmd->add_option("--samples", args.samples, "sample count");
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--quad-nodes", args.quad_nodes, "quadrature nodes per axis / points per cell");
    };

    CLI::App* reduce_cmd = app.add_subcommand("reduce", "SVD reduction report");
    add_common(reduce_cmd, true);

    CLI::App* gamma_cmd = app.add_subcommand("gamma", "high-SNR entropy offset");
    add_common(gamma_cmd, true);
    gamma_cmd->add_option("--path", args.force_path, "force a solution path: fiber or rank-one");

    CLI::App* slope_cmd = app.add_subcommand("slope", "low-SNR capacity slope");
    add_common(slope_cmd, true);

    CLI::App* density_cmd = app.add_subcommand("density", "maximum-entropy density export");
    add_common(density_cmd, true);
    density_cmd->add_option("--path", args.force_path, "force a solution path: fiber or rank-one");

    CLI::App* ensemble_cmd = app.add_subcommand("ensemble", "channel ensemble statistics");
    add_common(ensemble_cmd, false);
    ensemble_cmd->add_option("--kind", ensemble_kind, "indoor-sr, indoor-mdr or lognormal");
    ensemble_cmd->add_flag("--gamma", ensemble_gamma, "also solve gamma offsets on eligible samples");
    ensemble_cmd->add_option("--gamma-max-solves", gamma_max_solves, "cap on gamma solves (0 = all)");
    ensemble_cmd->add_option("--config", ensemble_config, "JSON scenario config (overrides flags)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (reduce_cmd->parsed()) return cmd_reduce(args);
        if (gamma_cmd->parsed()) return cmd_gamma(args);
        if (slope_cmd->parsed()) return cmd_slope(args);
        if (density_cmd->parsed()) return cmd_density(args);
        if (ensemble_cmd->parsed())
            return cmd_ensemble(args, ensemble_kind, ensemble_gamma, gamma_max_solves,
                                ensemble_config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
