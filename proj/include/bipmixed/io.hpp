#pragma once

#include "bipmixed/data.hpp"
#include "bipmixed/metrics.hpp"
#include "bipmixed/model.hpp"
#include "bipmixed/prediction.hpp"
#include "bipmixed/simulation.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bipmixed::io {

namespace fs = std::filesystem;

/// Shortest "%.17g" rendering; parses back to the identical double.
std::string format_double(double v);

/// Headerless comma-separated matrix, one row per subject.
Eigen::MatrixXd read_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m);
Eigen::VectorXd read_vector_csv(const fs::path& path);
void write_vector_csv(const fs::path& path, const Eigen::VectorXd& v);
/// One label per line.
std::vector<std::string> read_labels(const fs::path& path);
void write_labels(const fs::path& path, const std::vector<std::string>& labels);

/// Manifest: JSON naming the per-view matrices, covariates, outcome and label
/// files (relative to the manifest's directory) plus feature names. A missing
/// outcome entry loads as an empty vector, which prediction accepts.
MultiViewDataset load_manifest(const fs::path& manifest);
/// Writes `<stem>_view<m>.csv`, `<stem>_outcome.csv`, ... and `<stem>.json`
/// into `dir`. Returns the manifest path.
fs::path save_manifest(const fs::path& dir, const std::string& stem, const MultiViewDataset& data);

void save_truth(const fs::path& path, const ScenarioSpec& spec, const SimulationTruth& truth);

void save_fitted(const fs::path& path, const FittedModel& fitted);
FittedModel load_fitted(const fs::path& path);

/// Columns row_id, site, family, y_hat.
void write_predictions(const fs::path& path, const std::vector<std::string>& site,
                       const std::vector<std::string>& family, const Eigen::VectorXd& y_hat);
Eigen::VectorXd read_predictions(const fs::path& path);

/// Per-view MPP table: view, feature, importance, then one MPP column per component.
void write_selection_csv(const fs::path& path, const FittedModel& fitted,
                         const std::vector<std::vector<std::string>>& feature_names);

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace);

}  // namespace bipmixed::io
