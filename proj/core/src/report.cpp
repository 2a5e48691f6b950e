#include "tsci/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace tsci {
namespace {

using nlohmann::json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json to_json(const TsciFit& f) {
  return json{{"q", f.q},
              {"beta_init", num(f.beta_init)},
              {"beta", num(f.beta)},
              {"se", num(f.se)},
              {"ci_lo", num(f.ci_lo)},
              {"ci_hi", num(f.ci_hi)},
              {"mu_hat", num(f.mu_hat)},
              {"trace_m", num(f.trace_m)},
              {"denom", num(f.denom)},
              {"correction_kind", to_string(f.correction_kind)},
              {"se_kind", to_string(f.se_kind)},
              {"warnings", f.warnings}};
}

json to_json(const StrengthResult& s) {
  return json{{"q", s.q},           {"mu_hat", num(s.mu_hat)},         {"trace_m", num(s.trace_m)},
              {"threshold", num(s.threshold)}, {"s_quantile", num(s.s_quantile)}, {"passed", s.passed},
              {"l", s.l}};
}

json to_json(const BaselineFit& b) {
  return json{{"name", b.name},       {"beta", num(b.beta)},   {"se", num(b.se)},
              {"ci_lo", num(b.ci_lo)}, {"ci_hi", num(b.ci_hi)}, {"ok", b.ok},
              {"negative_denominator", b.negative_denominator}, {"note", b.note}};
}

json to_json(const SelectionReport& r) {
  json pairs = json::array();
  for (const PairwiseEntry& e : r.pairwise)
    pairs.push_back({{"q", e.q},
                     {"q_prime", e.q_prime},
                     {"diff", num(e.diff)},
                     {"h_hat", num(e.h_hat)},
                     {"stat", std::isinf(e.stat) ? json("inf") : num(e.stat)},
                     {"exceeds_z_alpha0", e.exceeds_z}});
  json fits = json::array();
  for (const TsciFit& f : r.fits) fits.push_back(to_json(f));
  return json{{"q_max", r.q_max},     {"fits", fits},          {"pairwise", pairs}, {"rho_hat", num(r.rho_hat)},
              {"layer_flags", r.layer_flags}, {"q_c", r.q_c}, {"q_r", r.q_r},    {"invalid_iv", r.invalid_iv},
              {"notes", r.notes}};
}

json to_json(const SplitResult& s) {
  json strength = json::array();
  for (const StrengthResult& r : s.strength) strength.push_back(to_json(r));
  json j{{"seed", s.seed},
         {"n1", s.n1},
         {"strength", strength},
         {"q_max", s.q_max},
         {"weak_iv", s.weak_iv},
         {"later_passes", s.later_passes},
         {"selection", to_json(s.selection)},
         {"fit_c", to_json(s.fit_c)},
         {"fit_r", to_json(s.fit_r)},
         {"empty_leaf_events", s.empty_leaf_events},
         {"boosting_iterations", s.boosting_iterations},
         {"warnings", s.warnings}};
  if (s.oracle) j["oracle"] = to_json(*s.oracle);
  if (!s.baselines.empty()) {
    json b = json::array();
    for (const BaselineFit& f : s.baselines) b.push_back(to_json(f));
    j["baselines"] = b;
  }
  return j;
}

json to_json(const MultiSplitResult& m) {
  return json{{"splits", m.splits()},
              {"alpha", m.alpha},
              {"beta_med", num(m.median.beta_med)},
              {"se_med", num(m.median.se_med)},
              {"ci_med", {num(m.median.ci.lo), num(m.median.ci.hi)}},
              {"ci_multisplit", {num(m.multisplit.ci.lo), num(m.multisplit.ci.hi)}},
              {"ci_multisplit_empty", m.multisplit.empty},
              {"ci_multisplit_contiguous", m.multisplit.contiguous}};
}

json to_json(const TsciConfig& c) {
  return json{{"stage", to_string(c.stage)},
              {"q_cap", c.q_cap},
              {"alpha", c.alpha},
              {"alpha0", c.alpha0},
              {"boot_l", c.boot_l},
              {"w_mode", c.w_mode.to_string()},
              {"forest",
               {{"num_trees", c.forest.num_trees},
                {"mtry", c.forest.mtry},
                {"min_leaf", c.forest.min_leaf},
                {"sample_fraction", c.forest.sample_fraction}}},
              {"boosting",
               {{"nu", c.boosting.nu}, {"m_stop", c.boosting.m_stop}, {"base", to_string(c.boosting.base)}}},
              {"basis_count", c.basis_count}};
}

std::string fmt(double v, int prec = 4) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

}  // namespace

std::string fit_json(const TsciFit& fit) { return to_json(fit).dump(2); }

std::string report_json(const TsciReport& r, bool per_split) {
  json j{{"schema_version", kReportSchemaVersion},
         {"n", r.n},
         {"seed", r.seed},
         {"config", to_json(r.config)},
         {"splits", r.splits.size()},
         {"invalid_votes", r.invalid_votes},
         {"weak_iv_votes", r.weak_iv_votes},
         {"invalid_iv", r.invalid_iv},
         {"weak_iv", r.weak_iv},
         {"warnings", r.warnings}};
  j["comp"] = r.comp ? to_json(*r.comp) : json(nullptr);
  j["robust"] = r.robust ? to_json(*r.robust) : json(nullptr);
  if (per_split) {
    json s = json::array();
    for (const SplitResult& sr : r.splits) s.push_back(to_json(sr));
    j["split_results"] = s;
  }
  return j.dump(2);
}

std::string strength_json(const std::vector<StrengthResult>& table, int q_max, bool weak_iv) {
  json rows = json::array();
  for (const StrengthResult& s : table) rows.push_back(to_json(s));
  json j{{"schema_version", kReportSchemaVersion}, {"strength", rows}, {"weak_iv", weak_iv}};
  j["q_max"] = weak_iv ? json(nullptr) : json(q_max);
  return j.dump(2);
}

std::string sim_json(const SimSummary& s) {
  json est = json::array();
  for (const EstimatorTally& t : s.tallies)
    est.push_back({{"name", to_string(t.estimator)},
                   {"runs", t.runs},
                   {"coverage", t.coverage()},
                   {"mean_abs_bias", t.mean_abs_bias()},
                   {"mean_length", t.mean_length()},
                   {"failures", t.failures}});
  json mu = json::array();
  for (std::size_t q = 0; q < s.mean_mu_hat.size(); ++q)
    mu.push_back({{"q", q}, {"mean_mu_hat", num(s.mean_mu_hat[q])}, {"count", s.mu_hat_counts[q]}});
  const SimConfig& c = s.config;
  json j{{"schema_version", kReportSchemaVersion},
         {"config",
          {{"model", c.model},
           {"vio", c.vio},
           {"a", c.a},
           {"n", c.n},
           {"p", c.p},
           {"error", c.error},
           {"beta", c.beta},
           {"reps", c.reps},
           {"seed", c.seed}}},
         {"estimators", est},
         {"invalidity", s.invalidity},
         {"invalidity_ba", s.invalidity_ba},
         {"mu_hat", mu}};
  json errors = json::array();
  for (std::size_t r = 0; r < s.replicates.size(); ++r)
    if (!s.replicates[r].error.empty()) errors.push_back({{"replicate", r}, {"error", s.replicates[r].error}});
  j["replicate_errors"] = errors;
  return j.dump(2);
}

std::string strength_text(const std::vector<StrengthResult>& table) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%3s %14s %10s %12s %12s  %s\n", "q", "mu_hat", "Tr[M]", "threshold", "band", "result");
  out << line;
  for (const StrengthResult& s : table) {
    std::snprintf(line, sizeof line, "%3d %14.2f %10.2f %12.2f %12.2f  %s\n", s.q, s.mu_hat, s.trace_m, s.threshold,
                  s.s_quantile, s.passed ? "pass" : "fail");
    out << line;
  }
  return out.str();
}

std::string summary_text(const TsciReport& r) {
  std::ostringstream out;
  out << "first stage: " << to_string(r.config.stage) << ", n = " << r.n << ", splits = " << r.splits.size() << '\n';
  if (r.comp) {
    const MultiSplitResult& m = *r.comp;
    out << "beta (comparison, median over splits): " << fmt(m.median.beta_med) << "  se " << fmt(m.median.se_med)
        << '\n';
    out << "  median CI     (" << fmt(m.median.ci.lo) << ", " << fmt(m.median.ci.hi) << ")\n";
    if (m.multisplit.empty)
      out << "  multi-split CI empty\n";
    else
      out << "  multi-split CI (" << fmt(m.multisplit.ci.lo) << ", " << fmt(m.multisplit.ci.hi) << ")"
          << (m.multisplit.contiguous ? "" : "  [accepted set not contiguous]") << '\n';
  }
  if (r.robust)
    out << "beta (robust, median over splits): " << fmt(r.robust->median.beta_med) << "  CI ("
        << fmt(r.robust->median.ci.lo) << ", " << fmt(r.robust->median.ci.hi) << ")\n";

  if (!r.splits.empty()) {
    const SplitResult& s = r.splits.front();
    out << "first split: Q_max = " << (s.weak_iv ? std::string("none") : std::to_string(s.q_max))
        << ", q_c = " << s.selection.q_c << ", q_r = " << s.selection.q_r << '\n';
    out << strength_text(s.strength);
  }
  if (r.weak_iv)
    out << "verdict: WEAK INSTRUMENT (" << r.weak_iv_votes << " of " << r.splits.size()
        << " splits fail the strength test without adjustment); the reported fit assumes a valid instrument\n";
  else
    out << "verdict: instrument " << (r.invalid_iv ? "INVALID" : "not detected invalid") << " (" << r.invalid_votes
        << " of " << r.splits.size() << " splits)\n";
  for (const std::string& w : r.warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace tsci
