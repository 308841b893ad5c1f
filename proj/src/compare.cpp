#include "gpvol/compare.hpp"

#include "gpvol/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace gpvol {

void CompareConfig::validate() const {
    if (strategies.empty()) throw InvalidInput("compare: at least one strategy is required");
    for (const auto& s : strategies) s.validate();
    rolling.validate();
    if (workers < 1) throw InvalidInput("compare: workers must be at least 1");
}

int default_workers() {
    if (const char* env = std::getenv("GPVOL_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

namespace {

std::array<std::optional<double>, 6> cells_of(const MetricSuite& m) {
    return {m.mse1, m.mse2, m.mae1, m.mae2, m.mdrae, m.smape};
}

std::optional<double> aggregate(std::vector<double> xs, bool use_median) {
    if (xs.empty()) return std::nullopt;
    if (use_median) return median(std::move(xs));
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

ComparisonTable build_table(const std::vector<RunResult>& runs, const std::string& dataset, ProxyKind proxy,
                            const std::vector<Strategy>& strategies, bool use_median) {
    ComparisonTable t;
    t.dataset = dataset;
    t.proxy = proxy;
    t.aggregation = use_median ? "median" : "mean";

    const auto add_row = [&](const std::string& label, const std::vector<const MetricSuite*>& suites,
                             std::size_t failed) {
        std::array<std::optional<double>, 6> row;
        for (std::size_t c = 0; c < 6; ++c) {
            std::vector<double> xs;
            for (const MetricSuite* m : suites)
                if (auto v = cells_of(*m)[c]) xs.push_back(*v);
            row[c] = aggregate(std::move(xs), use_median);
        }
        t.rows.push_back(label);
        t.cells.push_back(row);
        t.segments.push_back(suites.size());
        t.failed.push_back(failed);
    };

    // No-change baseline: one suite per segment, from the first successful run on that segment.
    std::vector<const MetricSuite*> baseline;
    std::optional<std::size_t> last_segment;
    for (const auto& r : runs) {
        if (r.dataset != dataset || r.strategy.proxy() != proxy || !r.report) continue;
        if (last_segment && *last_segment == r.segment) continue;
        last_segment = r.segment;
        baseline.push_back(&r.report->no_change);
    }
    for (const auto& s : strategies) {
        if (s.proxy() != proxy) continue;
        std::vector<const MetricSuite*> suites;
        std::size_t failed = 0;
        for (const auto& r : runs) {
            if (r.dataset != dataset || r.strategy.label() != s.label()) continue;
            if (r.status == RunResult::Status::Failed) ++failed;
            if (r.report) suites.push_back(&r.report->metrics);
        }
        add_row(s.label(), suites, failed);
    }
    add_row("no-change", baseline, 0);
    return t;
}

} // namespace

CompareResult run_compare(const std::vector<Dataset>& datasets, const CompareConfig& cfg) {
    cfg.validate();
    CompareResult result;

    struct Job {
        const Dataset* dataset;
        std::size_t segment;
        const Segment* seg;
        const Strategy* strategy;
    };
    std::vector<std::vector<Segment>> segments;
    segments.reserve(datasets.size());
    for (const auto& d : datasets) {
        segments.push_back(split_quarters(d.prices, cfg.rolling.segment));
        for (const auto& s : segments.back())
            if (s.partial)
                result.warnings.push_back(d.name + ": trailing partial segment of " +
                                          std::to_string(s.prices.size()) + " points");
    }
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < datasets.size(); ++d)
        for (std::size_t k = 0; k < segments[d].size(); ++k)
            for (const auto& s : cfg.strategies) jobs.push_back({&datasets[d], k, &segments[d][k], &s});

    result.runs.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            RunResult& out = result.runs[i];
            out.dataset = job.dataset->name;
            out.segment = job.segment;
            out.partial = job.seg->partial;
            out.strategy = *job.strategy;
            if (job.seg->prices.size() < cfg.rolling.training + 3) {
                out.status = RunResult::Status::Skipped;
                out.error = "segment too short for training";
                continue;
            }
            try {
                out.report = run_backtest(job.seg->prices, *job.strategy, cfg.rolling);
            } catch (const std::exception& e) {
                out.status = RunResult::Status::Failed;
                out.error = e.what();
            }
        }
    };
    const int n_threads = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (const auto& r : result.runs)
        if (r.status == RunResult::Status::Failed) result.any_failed = true;

    for (const auto& d : datasets)
        for (ProxyKind proxy : {ProxyKind::Abs, ProxyKind::Squared}) {
            const bool used = std::any_of(cfg.strategies.begin(), cfg.strategies.end(),
                                          [&](const Strategy& s) { return s.proxy() == proxy; });
            if (!used) continue;
            for (bool use_median : {false, true})
                result.tables.push_back(build_table(result.runs, d.name, proxy, cfg.strategies, use_median));
        }
    return result;
}

std::string csv_table(const ComparisonTable& t) {
    std::ostringstream out;
    out << "strategy";
    for (const char* m : kMetricNames) out << ',' << m;
    out << ",segments,failed\r\n";
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out << csv_field(t.rows[i]);
        for (const auto& c : t.cells[i]) out << ',' << (c ? format_number(*c, 6) : std::string("NA"));
        out << ',' << t.segments[i] << ',' << t.failed[i] << "\r\n";
    }
    return out.str();
}

std::string markdown_table(const ComparisonTable& t) {
    std::array<std::optional<double>, 6> best;
    for (const auto& row : t.cells)
        for (std::size_t c = 0; c < 6; ++c)
            if (row[c] && (!best[c] || *row[c] < *best[c])) best[c] = row[c];

    std::ostringstream out;
    out << "### " << t.dataset << " (" << to_string(t.proxy) << ", " << t.aggregation << " over segments)\n\n";
    out << "| strategy |";
    for (const char* m : kMetricNames) out << ' ' << m << " |";
    out << "\n|---|";
    for (std::size_t c = 0; c < 6; ++c) out << "---:|";
    out << '\n';
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out << "| " << t.rows[i] << " |";
        for (std::size_t c = 0; c < 6; ++c) {
            const auto& v = t.cells[i][c];
            if (!v) {
                out << (t.segments[i] == 0 ? " failed |" : " NA |");
                continue;
            }
            const std::string s = format_number(*v, 6);
            out << ' ' << (*v == *best[c] ? "**" + s + "**" : s) << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string csv_steps(const BacktestReport& rep) {
    std::ostringstream out;
    out << "time,forecast,low,up,realized,return,log_mean,log_var,pos,neg,flagged\r\n";
    for (const auto& r : rep.records) {
        out << r.time << ',' << format_number(r.forecast, 17) << ',' << format_number(r.low, 17) << ','
            << format_number(r.up, 17) << ',' << format_number(r.realized, 17) << ',' << format_number(r.ret, 17)
            << ',' << format_number(r.log_mean, 17) << ',' << format_number(r.log_var, 17) << ','
            << format_number(r.pos, 17) << ',' << format_number(r.neg, 17) << ',' << (r.flagged ? 1 : 0)
            << "\r\n";
    }
    return out.str();
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json suite_json(const MetricSuite& m) {
    ordered_json j;
    j["mse1"] = m.mse1;
    j["mse2"] = m.mse2;
    j["mae1"] = m.mae1;
    j["mae2"] = m.mae2;
    j["mdrae"] = m.mdrae ? ordered_json(*m.mdrae) : ordered_json(nullptr);
    j["smape"] = m.smape;
    j["n"] = m.n;
    j["n_mdrae"] = m.n_mdrae;
    j["n_smape"] = m.n_smape;
    return j;
}

std::string file_safe(std::string s) {
    for (char& c : s)
        if (c == '/' || c == '+' || c == ' ' || c == '\\') c = '_';
    return s;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + p.string() + "'");
    out << content;
}

} // namespace

void write_outputs(const CompareResult& result, const CompareConfig& cfg, const std::filesystem::path& dir,
                   const OutputOptions& opts) {
    std::filesystem::create_directories(dir);
    std::string markdown;
    for (const auto& t : result.tables) {
        const std::string stem = "table_" + file_safe(t.dataset) + "_" + std::string(to_string(t.proxy)) +
                                 (t.aggregation == "median" ? "_median" : "");
        if (opts.csv) write_file(dir / (stem + ".csv"), csv_table(t));
        markdown += markdown_table(t) + "\n";
    }
    write_file(dir / "tables.md", markdown);

    if (opts.steps) {
        std::filesystem::create_directories(dir / "steps");
        for (const auto& r : result.runs)
            if (r.report)
                write_file(dir / "steps" /
                               (file_safe(r.dataset) + "_seg" + std::to_string(r.segment) + "_" +
                                file_safe(r.strategy.label()) + ".csv"),
                           csv_steps(*r.report));
    }

    if (!opts.json) return;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    ordered_json c;
    c["training"] = cfg.rolling.training;
    c["window"] = cfg.rolling.window;
    c["segment"] = cfg.rolling.segment;
    c["z"] = cfg.rolling.z;
    c["floor"] = cfg.rolling.floor ? ordered_json(*cfg.rolling.floor) : ordered_json(nullptr);
    c["seed"] = cfg.rolling.seed;
    c["restarts"] = cfg.rolling.simplex.restarts;
    c["max_iterations"] = cfg.rolling.simplex.max_iterations;
    c["f_tolerance"] = cfg.rolling.simplex.f_tolerance;
    c["prior_stddev"] = cfg.rolling.prior_stddev;
    c["garch_refit"] = cfg.rolling.garch_refit;
    for (const auto& s : cfg.strategies) c["strategies"].push_back(s.label());
    j["config"] = c;

    for (const auto& r : result.runs) {
        ordered_json rj;
        rj["dataset"] = r.dataset;
        rj["segment"] = r.segment;
        rj["partial"] = r.partial;
        rj["strategy"] = r.strategy.label();
        rj["status"] = r.status == RunResult::Status::Ok       ? "ok"
                       : r.status == RunResult::Status::Failed ? "failed"
                                                               : "skipped";
        if (!r.error.empty()) rj["error"] = r.error;
        if (r.report) {
            const auto& rep = *r.report;
            rj["floor"] = rep.floor;
            rj["steps"] = rep.records.size();
            rj["flagged"] = rep.flagged;
            rj["inference_failures"] = rep.inference_failures;
            rj["metrics"] = suite_json(rep.metrics);
            rj["no_change"] = suite_json(rep.no_change);
            ordered_json res;
            res["mean"] = rep.residuals.mean;
            res["stddev"] = rep.residuals.stddev;
            res["calibration"] = rep.residuals.calibration;
            res["calibrated_mean"] = rep.residuals.calibrated_mean;
            res["calibrated_stddev"] = rep.residuals.calibrated_stddev;
            res["excluded"] = rep.residuals.excluded;
            rj["residuals"] = res;
            if (rep.final_hyper) {
                ordered_json h;
                h["kernel"] = std::string(to_string(rep.final_hyper->spec.family));
                for (Eigen::Index k = 0; k < rep.final_hyper->spec.log_params.size(); ++k)
                    h["log_params"].push_back(rep.final_hyper->spec.log_params[k]);
                rj["final_hyperparameters"] = h;
            }
            if (rep.garch_params) {
                ordered_json g;
                g["alpha0"] = rep.garch_params->alpha0;
                g["alpha"] = rep.garch_params->alpha;
                g["beta"] = rep.garch_params->beta;
                g["gamma"] = rep.garch_params->gamma;
                g["theta"] = rep.garch_params->theta;
                g["lambda"] = rep.garch_params->lambda;
                rj["garch_params"] = g;
            }
        }
        j["runs"].push_back(rj);
    }
    for (const auto& t : result.tables) {
        ordered_json tj;
        tj["dataset"] = t.dataset;
        tj["proxy"] = std::string(to_string(t.proxy));
        tj["aggregation"] = t.aggregation;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            ordered_json row;
            row["strategy"] = t.rows[i];
            for (std::size_t c = 0; c < 6; ++c)
                row[kMetricNames[c]] = t.cells[i][c] ? ordered_json(*t.cells[i][c]) : ordered_json(nullptr);
            row["segments"] = t.segments[i];
            row["failed"] = t.failed[i];
            tj["rows"].push_back(row);
        }
        j["tables"].push_back(tj);
    }
    j["warnings"] = result.warnings;
    j["any_failed"] = result.any_failed;
    write_file(dir / "report.json", j.dump(2) + "\n");
}

} // namespace gpvol
