#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfmot/sim.hpp"
#include "pfmot/types.hpp"

namespace pfmot {

/// 17 significant digits; parse_double(format_double(v)) == v.
std::string format_double(double v);
double parse_double(std::string_view text);

struct EstimateRow {
  int k = 0;
  Label label;
  Eigen::VectorXd state;
  double existence = 0.0;
};

struct SeriesRow {
  int k = 0;
  double value = 0.0;
};

void write_truth(std::ostream& os, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth(std::istream& is);

/// Rows `k,meas_index,z_1..z_d`; meas_index is 0-based within the frame.
void write_measurements(std::ostream& os, const std::vector<MeasurementFrame>& frames,
                        Eigen::Index dim);
/// Frames in increasing k; steps without rows are absent.
std::vector<MeasurementFrame> read_measurements(std::istream& is);

void write_estimates(std::ostream& os, const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> read_estimates(std::istream& is);

/// Two-column series such as `k,ospa` or `k,mospa`.
void write_series(std::ostream& os, const std::string& name, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series(std::istream& is, const std::string& name);

// File wrappers; they throw Error when the file cannot be opened.
std::vector<TruthRow> read_truth_file(const std::filesystem::path& path);
std::vector<MeasurementFrame> read_measurements_file(const std::filesystem::path& path);
std::vector<EstimateRow> read_estimates_file(const std::filesystem::path& path);
std::vector<SeriesRow> read_series_file(const std::filesystem::path& path, const std::string& name);

}  // namespace pfmot
