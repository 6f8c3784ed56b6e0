#pragma once

#include <filesystem>
#include <string>

#include "afx/metrics.hpp"

namespace afx {

// report.json: {mode, n, validity_pct, mean_ssim, mean_boundary_drift,
// ssim_spec, records:[{id, pred_orig, pred_expl, ssim, dist_orig, dist_expl,
// valid}]}. report.csv carries the same per-sample rows.
void write_report_json(const EvaluationReport& rep, const std::filesystem::path& path);
void write_report_csv(const EvaluationReport& rep, const std::filesystem::path& path);
EvaluationReport read_report_json(const std::filesystem::path& path);

// One-line aggregate summary, two decimal places: "validity=96.20 ssim=0.32".
std::string report_summary_line(const EvaluationReport& rep);

}  // namespace afx
