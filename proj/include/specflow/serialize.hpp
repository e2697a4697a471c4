#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "specflow/flowcore.hpp"

namespace specflow {

/// Floating-point formatting used in every report: 17 significant digits.
std::string format_double(double v);

/// Matrices serialize as an array of rows of {"re": x, "im": y} entries.
std::string matrix_to_json(const Eigen::MatrixXcd& m, int indent = 0);

/// Parses the array-of-rows format back; throws Error naming what is wrong.
Eigen::MatrixXcd matrix_from_json(const std::string& json_text);

/// Deterministic (insertion-ordered, 17-digit) JSON rendering of a report.
std::string flow_report_to_json(const FlowReport& r, int indent = 0);

/// CSV row for a report; see csv_report_header() for the column order.
std::string csv_report_header();
std::string flow_report_to_csv_row(const FlowReport& r);

/// Writes content to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace specflow
