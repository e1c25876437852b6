#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "carloss/area_model.hpp"
#include "carloss/asymmetry.hpp"
#include "carloss/loss.hpp"
#include "carloss/risk.hpp"
#include "carloss/sampler.hpp"

namespace carloss::io {

namespace fs = std::filesystem;

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

struct CsvTable {
    fs::path path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    // 1-based source line of every row.
    std::vector<std::size_t> lines;

    // Index of a named column; throws InputError when absent.
    std::size_t column(const std::string& name) const;
    double number(std::size_t row, std::size_t col) const;
};

// Plain comma-separated text with a header row; blank lines are skipped.
CsvTable read_csv(const fs::path& path);
void require_header(const CsvTable& table, const std::vector<std::string>& expected);

// Column name -> divisor; values in that column are divided by it.
using ColumnScales = std::map<std::string, double>;
ColumnScales parse_scales(const std::vector<std::string>& specs);

// region_id,z,<covariates...>; an intercept column is prepended.
AreaDataset load_dataset(const fs::path& path, const ColumnScales& scales = {},
                         std::optional<double> sigma2_meas = std::nullopt);

// region_a,region_b edge list, reindexed to the dataset's row order.
NeighborGraph load_adjacency(const fs::path& path, const std::vector<std::string>& region_ids);

// Draw files inside a fit output directory.
inline constexpr const char* kParamsFile = "params.csv";
inline constexpr const char* kFittedFile = "fitted.csv";
inline constexpr const char* kObservedFile = "observed.csv";
inline constexpr const char* kDiagnosticsFile = "diagnostics.csv";
inline constexpr const char* kManifestFile = "manifest.json";

void write_params(const fs::path& path, const PosteriorDraws& draws);
void write_fitted(const fs::path& path, const PosteriorDraws& draws);
void write_diagnostics(const fs::path& path, const PosteriorDraws& draws);
void write_observed(const fs::path& path, const std::vector<std::string>& region_ids, const Eigen::VectorXd& z);

// Reads params.csv and fitted.csv from a fit directory. num_chains splits the
// draws into equal blocks for diagnostics.
PosteriorDraws read_draws(const fs::path& dir, int num_chains = 1);
// Reads observed values, reordered to region_ids.
Eigen::VectorXd read_observed(const fs::path& path, const std::vector<std::string>& region_ids);

void write_predictor_table(const fs::path& path, const PredictorTable& table);
PredictorTable read_predictor_table(const fs::path& path);

void write_curve(const fs::path& path, const PowerRatioCurve& curve);
void write_sweep_warnings(const fs::path& path, const PowerRatioCurve& curve);

void write_risk_long(const fs::path& path, const RiskMatrix& matrix);
void write_risk_summary(const fs::path& path, const RiskMatrix& matrix);

}  // namespace carloss::io
