// gpvol: ingest, simulate, backtest and compare volatility forecasters.

#include "gpvol/compare.hpp"
#include "gpvol/error.hpp"
#include "gpvol/io.hpp"
#include "gpvol/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gpvol;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRunFailed = 2;

struct Options {
    // data and output
    std::vector<std::string> inputs;
    std::string out_dir = "gpvol-out";
    std::vector<std::string> formats{"csv", "json"};
    bool no_steps = false;
    int workers = default_workers();

    // strategies
    std::vector<std::string> strategies{"gp-abs", "gp-abs-envelope", "gp-combined-envelope", "garch"};
    std::vector<std::string> kernels{"matern32"};
    bool hyper_update = false;
    std::string garch_target = "auto";

    // rolling and estimation
    RollingConfig rolling;
    double floor = 0.0;
    std::vector<double> prior_mean;
    std::vector<double> prior_sd;

    // synth
    std::string generator = "sinvol";
    std::size_t n = 3140;
    std::string output;
    SinVol sinvol;
    double alpha0 = 2e-7, alpha1 = 0.10, beta1 = 0.85;
    std::string gp_kernel = "matern32";
    double gp_sigma_h = 0.5, gp_length = 50.0, gp_noise = 0.8, gp_level = 1e-3;

    // recovery
    RecoveryConfig recovery;
    std::string truth_kernel = "se";
    double truth_sigma_h = 1.0, truth_length = 20.0, truth_noise = 0.1;
};

std::vector<Dataset> load_inputs(const Options& o) {
    if (o.inputs.empty()) throw InvalidInput("--input is required");
    std::vector<Dataset> out;
    for (const auto& path : o.inputs) out.push_back({fs::path(path).stem().string(), ingest_csv(path)});
    return out;
}

CompareConfig compare_config(const Options& o) {
    CompareConfig cfg;
    cfg.rolling = o.rolling;
    if (o.floor > 0.0) cfg.rolling.floor = o.floor;
    cfg.workers = o.workers;
    std::vector<KernelFamily> families;
    for (const auto& k : o.kernels) families.push_back(parse_kernel_family(k));
    if (!o.prior_mean.empty() || !o.prior_sd.empty()) {
        if (o.prior_mean.size() != o.prior_sd.size())
            throw InvalidInput("--prior-mean and --prior-sd need the same length");
        HyperPrior p;
        p.mean = Eigen::Map<const Eigen::VectorXd>(o.prior_mean.data(), static_cast<Eigen::Index>(o.prior_mean.size()));
        p.stddev = Eigen::Map<const Eigen::VectorXd>(o.prior_sd.data(), static_cast<Eigen::Index>(o.prior_sd.size()));
        for (KernelFamily f : families) p.validate(f);
        cfg.rolling.prior = p;
    }
    bool squared_gp = false;
    for (const auto& name : o.strategies)
        if (parse_strategy_tag(name) == StrategyTag::GpSquared) squared_gp = true;
    for (const auto& name : o.strategies) {
        const StrategyTag tag = parse_strategy_tag(name);
        if (is_gp(tag)) {
            for (KernelFamily f : families) cfg.strategies.push_back(Strategy::gp(tag, f, o.hyper_update));
            continue;
        }
        if (o.garch_target == "abs" || o.garch_target == "both" || (o.garch_target == "auto"))
            cfg.strategies.push_back(Strategy::garch(tag, ProxyKind::Abs));
        if (o.garch_target == "squared" || o.garch_target == "both" || (o.garch_target == "auto" && squared_gp))
            cfg.strategies.push_back(Strategy::garch(tag, ProxyKind::Squared));
    }
    cfg.validate();
    return cfg;
}

OutputOptions output_options(const Options& o) {
    OutputOptions out;
    out.csv = std::find(o.formats.begin(), o.formats.end(), "csv") != o.formats.end();
    out.json = std::find(o.formats.begin(), o.formats.end(), "json") != o.formats.end();
    out.steps = !o.no_steps;
    if (!out.csv && !out.json) throw InvalidInput("--formats must include csv or json");
    return out;
}

int cmd_ingest_check(const Options& o) {
    for (const auto& d : load_inputs(o)) {
        const auto segs = split_quarters(d.prices, o.rolling.segment);
        const ReturnSeries r = log_returns(d.prices);
        std::size_t zeros = 0;
        for (double v : r.values) zeros += v == 0.0;
        std::cout << d.name << ": " << d.prices.size() << " prices, " << r.size() << " returns (" << zeros
                  << " zero), " << segs.size() << " segment(s) of " << o.rolling.segment;
        if (!segs.empty() && segs.back().partial)
            std::cout << ", trailing partial segment of " << segs.back().prices.size() << " points";
        std::cout << ", timestamps " << d.prices.timestamps.front() << " .. " << d.prices.timestamps.back()
                  << "\n";
    }
    return kExitOk;
}

int cmd_synth(const Options& o) {
    SynthSpec spec;
    spec.n = o.n;
    spec.seed = o.rolling.seed;
    if (o.generator == "sinvol") {
        spec.generator = o.sinvol;
    } else if (o.generator == "garch") {
        GarchSim g;
        g.params.alpha0 = o.alpha0;
        g.params.alpha = {o.alpha1};
        g.params.beta = {o.beta1};
        spec.generator = g;
    } else if (o.generator == "gp") {
        GpDraw g;
        g.kernel = KernelSpec::make(parse_kernel_family(o.gp_kernel), o.gp_sigma_h, o.gp_length, o.gp_noise);
        g.log_level = std::log(o.gp_level);
        spec.generator = g;
    } else {
        throw InvalidInput("unknown generator '" + o.generator + "' (sinvol, garch, gp)");
    }
    const PriceSeries prices = prices_from_returns(generate(spec));
    if (o.output.empty() || o.output == "-") {
        write_prices_csv(std::cout, prices);
    } else {
        std::ofstream out(o.output, std::ios::binary);
        if (!out) throw InvalidInput("cannot write '" + o.output + "'");
        write_prices_csv(out, prices);
    }
    return kExitOk;
}

int cmd_compare(const Options& o, bool single) {
    const CompareConfig cfg = compare_config(o);
    if (single && cfg.strategies.size() != 1)
        throw InvalidInput("backtest runs exactly one strategy; use compare for several");
    const CompareResult result = run_compare(load_inputs(o), cfg);
    write_outputs(result, cfg, o.out_dir, output_options(o));
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& r : result.runs)
        if (r.status == RunResult::Status::Failed)
            std::cerr << "run failed: " << r.dataset << " segment " << r.segment << " " << r.strategy.label()
                      << ": " << r.error << "\n";
    for (const auto& t : result.tables)
        if (t.aggregation == "mean") std::cout << markdown_table(t) << "\n";
    return result.any_failed ? kExitRunFailed : kExitOk;
}

int cmd_recovery(const Options& o) {
    RecoveryConfig cfg = o.recovery;
    cfg.truth = KernelSpec::make(parse_kernel_family(o.truth_kernel), o.truth_sigma_h, o.truth_length, o.truth_noise);
    cfg.seed = o.rolling.seed;
    const RecoveryReport rep = recovery_experiment(cfg);

    fs::create_directories(o.out_dir);
    std::ofstream detail(fs::path(o.out_dir) / "recovery.csv", std::ios::binary);
    detail << "set,fraction,rmse_data,rmse_function,log_sigma_h,log_length,log_sigma_n,failed\r\n";
    for (std::size_t s = 0; s < rep.sets.size(); ++s)
        for (std::size_t j = 0; j < rep.fractions.size(); ++j) {
            const auto& c = rep.sets[s][j];
            detail << s << ',' << format_number(rep.fractions[j], 6) << ',' << format_number(c.rmse_data, 17) << ','
                   << format_number(c.rmse_function, 17);
            for (int k = 0; k < 3; ++k)
                detail << ',' << (c.failed ? std::string("NA") : format_number(c.recovered.log_params[k], 17));
            detail << ',' << (c.failed ? 1 : 0) << "\r\n";
        }
    std::ofstream summary(fs::path(o.out_dir) / "recovery_summary.csv", std::ios::binary);
    summary << "fraction,median_rmse_data,median_rmse_function,median_sigma_h,median_length,median_sigma_n\r\n";
    std::cout << "fraction  median RMSE (data)  median RMSE (function)\n";
    for (std::size_t j = 0; j < rep.fractions.size(); ++j) {
        const auto& m = rep.median_log_params[j];
        summary << format_number(rep.fractions[j], 6) << ',' << format_number(rep.median_rmse_data[j], 6) << ','
                << format_number(rep.median_rmse_function[j], 6) << ',' << format_number(std::exp(m[0]), 6) << ','
                << format_number(std::exp(m[1]), 6) << ',' << format_number(std::exp(m[2]), 6) << "\r\n";
        char line[128];
        std::snprintf(line, sizeof line, "%8.3f  %18.6g  %22.6g\n", rep.fractions[j], rep.median_rmse_data[j],
                      rep.median_rmse_function[j]);
        std::cout << line;
    }
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["truth_log_params"] = std::vector<double>(cfg.truth.log_params.data(),
                                                cfg.truth.log_params.data() + cfg.truth.log_params.size());
    j["sets"] = cfg.n_sets;
    j["points"] = cfg.n_points;
    j["fractions"] = rep.fractions;
    j["median_rmse_data"] = rep.median_rmse_data;
    j["median_rmse_function"] = rep.median_rmse_function;
    j["failures"] = rep.failures;
    std::ofstream(fs::path(o.out_dir) / "recovery.json", std::ios::binary) << j.dump(2) << "\n";
    return rep.failures > 0 ? kExitRunFailed : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-process volatility forecasting and GARCH comparison"};
    app.set_config("--config", "", "flat key=value file; keys are the long option names");
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.require_subcommand(1);
    app.fallthrough();
    app.get_formatter()->column_width(36);

    Options o;
    auto& r = o.rolling;

    auto* io = app.add_option_group("Data and output");
    io->add_option("--input", o.inputs, "price CSV file(s): timestamp,price");
    io->add_option("--out", o.out_dir, "output directory")->capture_default_str();
    io->add_option("--formats", o.formats, "csv and/or json")->capture_default_str()->delimiter(',');
    io->add_flag("--no-steps", o.no_steps, "skip per-step CSV records");
    io->add_option("--workers", o.workers, "parallel backtests (default from GPVOL_WORKERS, else 1)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    auto* st = app.add_option_group("Strategies");
    st->add_option("--strategies", o.strategies,
                   "gp-abs, gp-squared, gp-abs-envelope, gp-combined-envelope, garch, egarch, gjr-garch")
        ->capture_default_str()
        ->delimiter(',');
    st->add_option("--kernels", o.kernels, "se, matern32, qp")->capture_default_str()->delimiter(',');
    st->add_flag("--hyper-update", o.hyper_update, "warm-started hyperparameter update at every step");
    st->add_option("--garch-target", o.garch_target, "abs, squared, both, or auto (squared only with gp-squared)")
        ->capture_default_str()
        ->check(CLI::IsMember({"abs", "squared", "both", "auto"}));

    auto* rc = app.add_option_group("Rolling forecast");
    rc->add_option("--training", r.training, "training points")->capture_default_str();
    rc->add_option("--window", r.window, "rolling window length")->capture_default_str();
    rc->add_option("--segment", r.segment, "segment (quarter) length in prices")->capture_default_str();
    rc->add_option("--z", r.z, "interval multiplier")->capture_default_str();
    rc->add_option("--floor", o.floor, "proxy floor (default: half the smallest non-zero training |r|)");
    rc->add_option("--seed", r.seed, "random seed")->capture_default_str();
    rc->add_flag("--garch-refit", r.garch_refit, "warm GARCH refit on the trailing window every step");

    auto* es = app.add_option_group("Estimation");
    es->add_option("--max-iterations", r.simplex.max_iterations, "simplex iterations")->capture_default_str();
    es->add_option("--f-tolerance", r.simplex.f_tolerance, "simplex function-value spread")->capture_default_str();
    es->add_option("--restarts", r.simplex.restarts, "MAP restarts")->capture_default_str();
    es->add_option("--prior-stddev", r.prior_stddev, "default log-space prior sd")->capture_default_str();
    es->add_option("--prior-mean", o.prior_mean, "log-space prior means (overrides data-scaled defaults)")
        ->delimiter(',');
    es->add_option("--prior-sd", o.prior_sd, "log-space prior sds, same length as --prior-mean")->delimiter(',');
    es->add_option("--garch-restarts", r.garch_simplex.restarts, "GARCH fit restarts")->capture_default_str();

    auto* sy = app.add_option_group("Synthetic data");
    sy->add_option("--generator", o.generator, "sinvol, garch, gp")->capture_default_str();
    sy->add_option("--n", o.n, "number of returns")->capture_default_str();
    sy->add_option("--output", o.output, "synth output file (default stdout)");
    sy->add_option("--amplitude", o.sinvol.amplitude, "sinvol amplitude")->capture_default_str();
    sy->add_option("--period", o.sinvol.period, "sinvol period")->capture_default_str();
    sy->add_option("--base", o.sinvol.base, "sinvol base volatility")->capture_default_str();
    sy->add_option("--alpha0", o.alpha0, "garch alpha0")->capture_default_str();
    sy->add_option("--alpha1", o.alpha1, "garch alpha1")->capture_default_str();
    sy->add_option("--beta1", o.beta1, "garch beta1")->capture_default_str();
    sy->add_option("--gp-kernel", o.gp_kernel, "kernel of the log|r| draw")->capture_default_str();
    sy->add_option("--gp-sigma-h", o.gp_sigma_h, "output scale of the log|r| draw")->capture_default_str();
    sy->add_option("--gp-length", o.gp_length, "length scale of the log|r| draw")->capture_default_str();
    sy->add_option("--gp-noise", o.gp_noise, "noise of the log|r| draw")->capture_default_str();
    sy->add_option("--gp-level", o.gp_level, "typical |r| of the gp generator")->capture_default_str();

    auto* rv = app.add_option_group("Recovery study");
    rv->add_option("--sets", o.recovery.n_sets, "datasets")->capture_default_str();
    rv->add_option("--points", o.recovery.n_points, "points per dataset")->capture_default_str();
    rv->add_option("--fractions", o.recovery.fractions, "subsample fractions")->capture_default_str()->delimiter(',');
    rv->add_option("--cold-limit", o.recovery.cold_limit, "largest subsample estimated from scratch")
        ->capture_default_str();
    rv->add_option("--recovery-restarts", o.recovery.simplex.restarts, "restarts for cold estimates")
        ->capture_default_str();
    rv->add_option("--truth-kernel", o.truth_kernel, "kernel of the generating GP")->capture_default_str();
    rv->add_option("--truth-sigma-h", o.truth_sigma_h, "true output scale")->capture_default_str();
    rv->add_option("--truth-length", o.truth_length, "true length scale")->capture_default_str();
    rv->add_option("--truth-noise", o.truth_noise, "true noise sd")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest-check", "validate price files and report segmentation");
    auto* synth = app.add_subcommand("synth", "write a simulated price series as CSV");
    auto* backtest = app.add_subcommand("backtest", "run one strategy over every segment");
    auto* compare = app.add_subcommand("compare", "run every strategy over every segment and tabulate");
    auto* recovery = app.add_subcommand("recovery", "hyperparameter recovery study on GP-drawn data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (ingest->parsed()) return cmd_ingest_check(o);
        if (synth->parsed()) return cmd_synth(o);
        if (backtest->parsed()) return cmd_compare(o, true);
        if (compare->parsed()) return cmd_compare(o, false);
        if (recovery->parsed()) return cmd_recovery(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
