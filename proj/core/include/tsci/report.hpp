#pragma once

#include <string>
#include <vector>

#include "tsci/pipeline.hpp"
#include "tsci/sim.hpp"

namespace tsci {

/// Bumped whenever a field of report.json is renamed or removed.
inline constexpr int kReportSchemaVersion = 1;

/// JSON object for one fit: beta_init, beta, se, ci_lo, ci_hi, q, mu_hat,
/// trace_m, warnings, correction_kind, se_kind, denom. NaN prints as null.
std::string fit_json(const TsciFit& fit);

/// Full estimate report, including per-split detail when `per_split` is set.
std::string report_json(const TsciReport& report, bool per_split = true);

/// Strength rows for the standalone strength command.
std::string strength_json(const std::vector<StrengthResult>& table, int q_max, bool weak_iv);

std::string sim_json(const SimSummary& summary);

/// Human-readable summary of an estimate report.
std::string summary_text(const TsciReport& report);

/// Fixed-width strength table.
std::string strength_text(const std::vector<StrengthResult>& table);

}  // namespace tsci
