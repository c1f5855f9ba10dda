// Command-line surface for energy trees: fit, predict, simulate.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "etree/etree.hpp"

namespace {

struct FitArgs {
    std::string data;
    double alpha = 0.05;
    int min_bucket = 5;
    int n_perm = 999;
    std::string split = "fve";
    int n_basis = 10;
    int shell_bins = 10;
    std::uint64_t seed = 0;
    std::string out;
};

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out;
};

struct SimulateArgs {
    std::string scenario;
    int reps = 0;  // 0: resolved from scale
    int n = 100;
    std::string scale = "desk";
    std::uint64_t seed = 0;
    std::string out;
};

std::uint64_t resolve_seed(const CLI::App* sub, std::uint64_t given) {
    if (sub->count("--seed") > 0) return given;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int run_fit(const FitArgs& args, std::uint64_t seed, int workers) {
    std::fprintf(stderr,
                 "config: subcommand=fit data=%s alpha=%g min_bucket=%d n_perm=%d split=%s "
                 "n_basis=%d shell_bins=%d seed=%llu out=%s workers=%d\n",
                 args.data.c_str(), args.alpha, args.min_bucket, args.n_perm, args.split.c_str(),
                 args.n_basis, args.shell_bins, static_cast<unsigned long long>(seed),
                 args.out.c_str(), workers);

    const etree::Dataset ds = etree::load_dataset(args.data);
    etree::FitConfig cfg;
    cfg.alpha = args.alpha;
    cfg.min_bucket = args.min_bucket;
    cfg.n_permutations = args.n_perm;
    cfg.split_method =
        args.split == "clustering" ? etree::SplitMethod::clustering : etree::SplitMethod::fve;
    cfg.n_basis = args.n_basis;
    cfg.shell_bins = args.shell_bins;
    cfg.seed = seed;

    const etree::EnergyTree tree = etree::fit(ds, cfg);
    etree::save_tree(tree, args.out);
    std::fputs(etree::render_text(tree).c_str(), stdout);
    return 0;
}

int run_predict(const PredictArgs& args, int workers) {
    std::fprintf(stderr, "config: subcommand=predict model=%s data=%s out=%s workers=%d\n",
                 args.model.c_str(), args.data.c_str(), args.out.c_str(), workers);
    const etree::EnergyTree tree = etree::load_tree(args.model);
    const etree::Dataset ds = etree::load_dataset(args.data);
    const etree::Predictions pred = etree::predict(tree, ds);

    std::string text;
    for (int i = 0; i < ds.n; ++i) {
        if (pred.kind == etree::ResponseKind::numeric)
            text += etree::csv::format_double(pred.values[static_cast<std::size_t>(i)]);
        else
            text += tree.schema
                        .response_levels[static_cast<std::size_t>(pred.codes[static_cast<std::size_t>(i)])];
        text += "\n";
    }
    std::ofstream out(args.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + args.out + "' for writing");
    out << text;
    if (!out.good()) throw std::runtime_error("failed writing '" + args.out + "'");
    return 0;
}

int run_simulate(const SimulateArgs& args, std::uint64_t seed, int workers) {
    const bool paper_scale = args.scale == "paper";
    etree::SimulationConfig cfg;
    cfg.grid_points = 100;
    cfg.n_vertices = paper_scale ? 100 : 30;
    cfg.n_permutations = paper_scale ? 999 : 199;
    const int reps = args.reps > 0 ? args.reps : (paper_scale ? 10000 : 1000);

    std::fprintf(stderr,
                 "config: subcommand=simulate scenario=%s reps=%d n=%d scale=%s seed=%llu "
                 "alpha=%g n_perm=%d grid_points=%d n_vertices=%d out=%s workers=%d\n",
                 args.scenario.c_str(), reps, args.n, args.scale.c_str(),
                 static_cast<unsigned long long>(seed), cfg.alpha, cfg.n_permutations,
                 cfg.grid_points, cfg.n_vertices, args.out.c_str(), workers);

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(args.out, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + args.out + "': " + ec.message());

    nlohmann::json meta;
    meta["scenario"] = args.scenario;
    meta["scale"] = args.scale;
    meta["seed"] = seed;
    meta["reps"] = reps;
    meta["n"] = args.n;
    meta["alpha"] = cfg.alpha;
    meta["n_permutations"] = cfg.n_permutations;
    meta["grid_points"] = cfg.grid_points;
    meta["n_vertices"] = cfg.n_vertices;
    meta["edge_prob"] = cfg.edge_prob;

    if (args.scenario == "unbiasedness") {
        const etree::UnbiasednessResult res =
            etree::scenario_unbiasedness(reps, args.n, cfg, seed);
        etree::write_unbiasedness_csv(res, (fs::path(args.out) / "unbiasedness.csv").string());
        nlohmann::json counts;
        std::printf("covariate  estimate  95%% CI\n");
        for (const etree::CovariateFrequency& f : res.frequencies) {
            counts[f.name] = f.count;
            std::printf("%-9s  %.4f    (%.4f, %.4f)\n", f.name.c_str(), f.estimate, f.ci.lo,
                        f.ci.hi);
        }
        meta["selection_counts"] = counts;
    } else {
        const etree::AssociatedCovariate assoc = args.scenario == "power-functional"
                                                     ? etree::AssociatedCovariate::functional_cov
                                                     : etree::AssociatedCovariate::graph_cov;
        const std::vector<double> mu_grid = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
        meta["mu_grid"] = mu_grid;
        meta["edge_prob_assoc"] = cfg.edge_prob_assoc;
        meta["gp_mean_assoc"] = cfg.gp_mean_assoc;
        const etree::PowerResult res =
            etree::scenario_power(assoc, mu_grid, reps, args.n, cfg, seed);
        etree::write_power_csv(res, (fs::path(args.out) / "power.csv").string(),
                               (fs::path(args.out) / "conditional.csv").string());
        nlohmann::json sel = nlohmann::json::array();
        std::printf("mu     power   95%% CI             conditional  95%% CI\n");
        for (const etree::PowerPoint& pt : res.points) {
            sel.push_back({{"mu", pt.mu}, {"n_selected", pt.n_selected}, {"n_correct", pt.n_correct}});
            std::printf("%-5.2f  %.4f  (%.4f, %.4f)   %.4f       (%.4f, %.4f)\n", pt.mu, pt.power,
                        pt.power_ci.lo, pt.power_ci.hi, pt.conditional, pt.conditional_ci.lo,
                        pt.conditional_ci.hi);
        }
        meta["selection"] = sel;
    }

    std::ofstream mout(fs::path(args.out) / "metadata.json", std::ios::binary);
    if (!mout) throw std::runtime_error("cannot write metadata.json under '" + args.out + "'");
    mout << meta.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy trees: regression and classification with structured covariates"};
    app.require_subcommand(1);

    FitArgs fit_args;
    PredictArgs predict_args;
    SimulateArgs sim_args;
    int workers = 0;  // 0: all cores

    const auto positive_alpha = CLI::Validator(
        [](std::string& s) -> std::string {
            const double v = std::stod(s);
            if (!(v > 0.0 && v <= 1.0)) return "alpha must lie in (0, 1]";
            return {};
        },
        "ALPHA");

    CLI::App* fit = app.add_subcommand("fit", "fit an energy tree from a data manifest");
    fit->add_option("--data", fit_args.data, "path to the dataset manifest (JSON)")->required();
    fit->add_option("--alpha", fit_args.alpha, "significance level in (0,1]; 1 forces splits")
        ->capture_default_str()
        ->check(positive_alpha);
    fit->add_option("--min-bucket", fit_args.min_bucket, "minimum observations per terminal node")
        ->capture_default_str()
        ->check(CLI::Range(1, 1 << 30));
    fit->add_option("--n-perm", fit_args.n_perm, "permutation replicates per test")
        ->capture_default_str()
        ->check(CLI::Range(1, 1 << 30));
    fit->add_option("--split", fit_args.split, "split method for structured covariates")
        ->capture_default_str()
        ->check(CLI::IsMember({"fve", "clustering"}));
    fit->add_option("--n-basis", fit_args.n_basis, "B-spline basis size for functional covariates")
        ->capture_default_str()
        ->check(CLI::Range(4, 1 << 20));
    fit->add_option("--shell-bins", fit_args.shell_bins,
                    "shell-distribution bins for weighted graphs")
        ->capture_default_str()
        ->check(CLI::Range(1, 1 << 20));
    fit->add_option("--seed", fit_args.seed, "RNG seed (random when omitted, echoed either way)");
    fit->add_option("--out", fit_args.out, "output model path (JSON)")->required();
    fit->add_option("--workers", workers, "worker threads (default: all cores)");

    CLI::App* predict = app.add_subcommand("predict", "score a manifest with a fitted model");
    predict->add_option("--model", predict_args.model, "fitted model path")->required();
    predict->add_option("--data", predict_args.data, "path to the dataset manifest (JSON)")
        ->required();
    predict->add_option("--out", predict_args.out, "output CSV path (one prediction per row)")
        ->required();
    predict->add_option("--workers", workers, "worker threads (default: all cores)");

    CLI::App* simulate = app.add_subcommand("simulate", "run a simulation scenario");
    simulate->add_option("--scenario", sim_args.scenario, "scenario name")
        ->required()
        ->check(CLI::IsMember({"unbiasedness", "power-functional", "power-graph"}));
    simulate->add_option("--reps", sim_args.reps, "replications (default: 1000 desk, 10000 paper)")
        ->check(CLI::Range(1, 1 << 30));
    simulate->add_option("--n", sim_args.n, "observations per replication")
        ->capture_default_str()
        ->check(CLI::Range(2, 1 << 30));
    simulate->add_option("--scale", sim_args.scale, "desk: V=30,B=199,R=1000; paper: V=100,B=999,R=10000")
        ->capture_default_str()
        ->check(CLI::IsMember({"desk", "paper"}));
    simulate->add_option("--seed", sim_args.seed, "RNG seed (random when omitted, echoed either way)");
    simulate->add_option("--out", sim_args.out, "output directory")->required();
    simulate->add_option("--workers", workers, "worker threads (default: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    if (workers != 0) etree::set_worker_count(workers);
    const int effective_workers = etree::worker_count();

    try {
        if (fit->parsed())
            return run_fit(fit_args, resolve_seed(fit, fit_args.seed), effective_workers);
        if (predict->parsed()) return run_predict(predict_args, effective_workers);
        return run_simulate(sim_args, resolve_seed(simulate, sim_args.seed), effective_workers);
    } catch (const etree::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
