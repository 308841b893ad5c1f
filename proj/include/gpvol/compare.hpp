#pragma once

#include "gpvol/forecast.hpp"
#include "gpvol/io.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpvol {

inline constexpr int kReportSchemaVersion = 1;

struct Dataset {
    std::string name;
    PriceSeries prices;
};

struct CompareConfig {
    std::vector<Strategy> strategies;
    RollingConfig rolling;
    int workers = 1;

    void validate() const;
};

struct RunResult {
    std::string dataset;
    std::size_t segment = 0;
    bool partial = false;
    Strategy strategy;
    enum class Status { Ok, Failed, Skipped } status = Status::Ok;
    std::string error;
    std::optional<BacktestReport> report;
};

inline constexpr std::array<const char*, 6> kMetricNames{"mse1", "mse2", "mae1", "mae2", "mdrae", "smape"};

/// Rows are strategies (plus the no-change baseline), columns the six metrics,
/// aggregated over segments. Empty cells are failed runs or undefined MdRAE.
struct ComparisonTable {
    std::string dataset;
    ProxyKind proxy = ProxyKind::Abs;
    std::string aggregation;  // "mean" or "median"
    std::vector<std::string> rows;
    std::vector<std::array<std::optional<double>, 6>> cells;
    std::vector<std::size_t> segments;  // successful segments per row
    std::vector<std::size_t> failed;    // failed segments per row
};

struct CompareResult {
    std::vector<RunResult> runs;  // ordered by (dataset, segment, strategy)
    std::vector<ComparisonTable> tables;
    std::vector<std::string> warnings;
    bool any_failed = false;
};

/// Every (dataset segment x strategy) backtest on up to cfg.workers threads. The merge is
/// ordered by job index, so results do not depend on completion order.
CompareResult run_compare(const std::vector<Dataset>& datasets, const CompareConfig& cfg);

/// Markdown rendering with the per-column minimum in bold.
std::string markdown_table(const ComparisonTable& t);
/// RFC-4180 CSV at 6 significant digits.
std::string csv_table(const ComparisonTable& t);
/// Tidy per-step records at full precision.
std::string csv_steps(const BacktestReport& rep);

struct OutputOptions {
    bool csv = true;
    bool json = true;
    bool steps = true;
};

/// Writes tables (CSV + markdown), per-step CSVs and report.json into dir.
void write_outputs(const CompareResult& result, const CompareConfig& cfg, const std::filesystem::path& dir,
                   const OutputOptions& opts);

/// Worker count from GPVOL_WORKERS, else 1.
int default_workers();

} // namespace gpvol
