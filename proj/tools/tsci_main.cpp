// tsci: treatment effect estimation with possibly invalid instruments.
//
//   tsci estimate --data file.csv --y Y --d D --z Z --x X1,X2 [...]
//   tsci simulate --model 1 --vio 1 --a 1 --n 3000 --error 1 --reps 200
//   tsci strength --data file.csv --y Y --d D --z Z --x X1,X2 --q 3

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tsci/dataset.hpp"
#include "tsci/error.hpp"
#include "tsci/parallel.hpp"
#include "tsci/pipeline.hpp"
#include "tsci/report.hpp"
#include "tsci/sim.hpp"

namespace {

struct DataFlags {
  std::string path;
  std::string y;
  std::string d;
  std::vector<std::string> z;
  std::vector<std::string> x;
};

struct PipelineFlags {
  std::string stage = "rf";
  int q_cap = 3;
  double alpha = 0.05;
  double alpha0 = 0.025;
  std::uint64_t seed = 0;
  int boot_l = 300;
  std::string w_mode = "linear";
  int trees = 200;
  int min_leaf = 5;
  int mtry = 0;
  int basis_count = 6;
  double nu = 0.1;
  int m_stop = 100;
  std::string boost_base = "linear";
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data", f.path, "CSV file with a header row")->required();
  cmd->add_option("--y", f.y, "outcome column")->required();
  cmd->add_option("--d", f.d, "treatment column")->required();
  cmd->add_option("--z", f.z, "instrument column(s)")->required()->delimiter(',');
  cmd->add_option("--x", f.x, "baseline covariate columns")->delimiter(',');
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
  cmd->add_option("--stage", f.stage, "first stage: rf, basis or boost")->capture_default_str();
  cmd->add_option("--alpha0", f.alpha0, "level of the strength and comparison bootstraps")->capture_default_str();
  cmd->add_option("--seed", f.seed, "master seed")->capture_default_str();
  cmd->add_option("--boot-l", f.boot_l, "bootstrap replications")->capture_default_str();
  cmd->add_option("--w-mode", f.w_mode, "covariate basis: linear or basis:k")->capture_default_str();
  cmd->add_option("--trees", f.trees, "forest size")->capture_default_str();
  cmd->add_option("--min-leaf", f.min_leaf, "minimum training rows per leaf")->capture_default_str();
  cmd->add_option("--mtry", f.mtry, "candidate features per split (0: p/3)")->capture_default_str();
  cmd->add_option("--basis-count", f.basis_count, "polynomial degree of the basis first stage")->capture_default_str();
  cmd->add_option("--nu", f.nu, "boosting step length")->capture_default_str();
  cmd->add_option("--m-stop", f.m_stop, "boosting iterations")->capture_default_str();
  cmd->add_option("--boost-base", f.boost_base, "boosting base learner: linear or tree")->capture_default_str();
}

tsci::Dataset load(const DataFlags& f) {
  return tsci::load_dataset(f.path, tsci::ColumnSpec{f.y, f.d, f.z, f.x});
}

tsci::TsciConfig make_config(const PipelineFlags& f) {
  tsci::TsciConfig c;
  c.stage = tsci::parse_first_stage(f.stage);
  c.q_cap = f.q_cap;
  c.alpha = f.alpha;
  c.alpha0 = f.alpha0;
  c.boot_l = f.boot_l;
  c.w_mode = tsci::WMode::parse(f.w_mode);
  c.forest.num_trees = f.trees;
  c.forest.min_leaf = f.min_leaf;
  c.forest.mtry = f.mtry;
  c.basis_count = f.basis_count;
  c.boosting.nu = f.nu;
  c.boosting.m_stop = f.m_stop;
  if (f.boost_base == "tree")
    c.boosting.base = tsci::BoostingConfig::Base::tree;
  else if (f.boost_base != "linear")
    throw tsci::UsageError("boost base must be linear or tree");
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw tsci::DataError("cannot write " + path);
  out << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage curvature identification: treatment effects with possibly invalid instruments"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0: all cores)");

  DataFlags est_data;
  PipelineFlags est;
  int splits = 51;
  std::string out_path = "report.json";
  std::string dump_omega;
  auto* estimate = app.add_subcommand("estimate", "estimate the effect with violation-space selection");
  add_data_flags(estimate, est_data);
  add_pipeline_flags(estimate, est);
  estimate->add_option("--qmax-cap", est.q_cap, "largest violation order considered")->capture_default_str();
  estimate->add_option("--alpha", est.alpha, "confidence level is 1 - alpha")->capture_default_str();
  estimate->add_option("--splits", splits, "number of random sample splits")->capture_default_str();
  estimate->add_option("--out", out_path, "JSON report path")->capture_default_str();
  estimate->add_option("--dump-omega", dump_omega, "write the first split's weighting matrix as CSV");
  estimate->add_option("--threads", threads, "worker threads (0: all cores)");

  tsci::SimConfig sim;
  PipelineFlags sim_flags;
  std::string estimators = "default";
  std::string csv_path, json_path;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo study on the built-in generators");
  simulate->add_option("--model", sim.model, "mean model 1, 2 or 3 (binary instrument)")->capture_default_str();
  simulate->add_option("--vio", sim.vio, "violation 0 (none), 1 (linear) or 2 (quadratic)")->capture_default_str();
  simulate->add_option("--a", sim.a, "interaction strength")->capture_default_str();
  simulate->add_option("--n", sim.n, "sample size")->capture_default_str();
  simulate->add_option("--p", sim.p, "covariate count")->capture_default_str();
  simulate->add_option("--error", sim.error, "error distribution 1 or 2")->capture_default_str();
  simulate->add_option("--reps", sim.reps, "replications")->capture_default_str();
  simulate->add_option("--estimators", estimators, "comma-separated estimator menu")->capture_default_str();
  simulate->add_option("--csv", csv_path, "summary CSV path");
  simulate->add_option("--json", json_path, "summary JSON path");
  simulate->add_option("--qmax-cap", sim_flags.q_cap, "largest violation order considered")->capture_default_str();
  simulate->add_option("--alpha", sim_flags.alpha, "confidence level is 1 - alpha")->capture_default_str();
  add_pipeline_flags(simulate, sim_flags);
  simulate->add_option("--threads", threads, "worker threads (0: all cores)");

  DataFlags str_data;
  PipelineFlags str;
  std::string str_out;
  auto* strength = app.add_subcommand("strength", "generalized instrument strength per violation order");
  add_data_flags(strength, str_data);
  add_pipeline_flags(strength, str);
  strength->add_option("--q", str.q_cap, "largest violation order")->capture_default_str();
  strength->add_option("--out", str_out, "JSON output path");
  strength->add_option("--threads", threads, "worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(tsci::ExitCode::usage);
  }

  try {
    if (threads > 0) tsci::set_max_threads(threads);

    if (*estimate) {
      const tsci::Dataset data = load(est_data);
      const tsci::TsciReport report = tsci::run_tsci(data, make_config(est), splits, est.seed, dump_omega);
      write_file(out_path, tsci::report_json(report));
      std::cout << tsci::summary_text(report);
      std::cout << "report written to " << out_path << '\n';
    } else if (*simulate) {
      sim.seed = sim_flags.seed;
      sim.validate();
      const auto menu = tsci::parse_estimators(estimators);
      const tsci::SimSummary summary = tsci::run_replications(sim, menu, make_config(sim_flags));
      const std::string table = tsci::sim_csv(summary);
      std::cout << table;
      if (!csv_path.empty()) write_file(csv_path, table);
      if (!json_path.empty()) write_file(json_path, tsci::sim_json(summary));
    } else if (*strength) {
      const tsci::Dataset data = load(str_data);
      const tsci::TsciConfig config = make_config(str);
      const tsci::CovariateBasis w = tsci::build_w(data.x(), config.w_mode);
      const tsci::SplitResult split = tsci::run_split(data, w, config, str.seed);
      std::cout << tsci::strength_text(split.strength);
      if (split.weak_iv)
        std::cout << "weak instrument: fails at q = 0\n";
      else
        std::cout << "Q_max = " << split.q_max << '\n';
      for (const auto& w_msg : split.warnings) std::cout << "warning: " << w_msg << '\n';
      if (!str_out.empty()) write_file(str_out, tsci::strength_json(split.strength, split.q_max, split.weak_iv));
    }
  } catch (const tsci::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
