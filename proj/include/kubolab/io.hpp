#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kubolab/ensemble.hpp"
#include "kubolab/measure.hpp"
#include "kubolab/response.hpp"

namespace kubolab::io {

std::string iso_timestamp();
std::string unit_filename(int index); // "0007.json"

/// Shortest round-tripping decimal representation, '.' decimal point.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& p, const std::string& content);
nlohmann::json read_json_file(const std::filesystem::path& p);

/// result.csv (primary block) and result_<block>.csv side tables; sweep
/// runs additionally get summary.csv with one row per grid point.
void write_estimate_csv(const std::filesystem::path& dir, const std::string& task,
                        const ensemble::EnsembleEstimate& est);

/// Single-trace table: t, J, imag_residual.
std::string current_trace_csv(const response::CurrentTrace& trace);

/// Measure table: bin_left, bin_right, mass, stderr (stderr 0 when absent).
std::string binned_measure_csv(const BinnedMeasure& binned,
                               const std::vector<double>* stderrs = nullptr);

/// Self-contained step/line charts, no external renderer.
std::string svg_step_chart(const std::vector<double>& edges,
                           const std::vector<double>& values, const std::string& title);
std::string svg_line_chart(const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& title);

} // namespace kubolab::io
