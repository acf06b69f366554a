#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "ttshs/config.hpp"
#include "ttshs/errors.hpp"
#include "ttshs/gene_expression.hpp"
#include "ttshs/phase_engine.hpp"
#include "ttshs/renewal_engine.hpp"
#include "ttshs/simulator.hpp"

namespace {

using namespace ttshs;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kEngineAgreementTol = 1e-6;

std::string fmt(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::NumericalFailure, "cannot write " + path);
  }
  out << text;
}

struct MomentTable {
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Matrix> covariance;
};

std::string moment_table_csv(const MomentTable& table) {
  const Eigen::Index n = table.mean.front().size();
  std::ostringstream out;
  out << "time";
  for (Eigen::Index i = 0; i < n; ++i) out << ",mean_" << i;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) out << ",cov_" << a << "_" << b;
  out << "\n";
  for (std::size_t t = 0; t < table.times.size(); ++t) {
    out << fmt(table.times[t]);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << fmt(table.mean[t][i]);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b)
        out << "," << fmt(table.covariance[t](a, b));
    out << "\n";
  }
  return out.str();
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

std::string moment_table_json(const MomentTable& table,
                              const std::string& source) {
  json doc;
  doc["meta"] = {{"version", kVersion}, {"source", source}};
  json rows = json::array();
  for (std::size_t t = 0; t < table.times.size(); ++t) {
    rows.push_back({{"time", table.times[t]},
                    {"mean", vector_json(table.mean[t])},
                    {"covariance", matrix_json(table.covariance[t])}});
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

// Engines need phase-type timing; anything else is replaced by a
// two-moment fit with a notice on stderr.
TTSHSModel with_phase_type_timing(const TTSHSModel& model) {
  if (std::holds_alternative<PhaseTypeMixture>(model.timer_reset.timing))
    return model;
  const double mean = timing_mean(model.timer_reset.timing);
  const double cv2 = timing_cv2(model.timer_reset.timing);
  if (!(cv2 > 0.0)) {
    throw Error(ErrorCode::TimingNotPhaseType,
                "deterministic timing cannot be fit by a phase-type law; "
                "use a positive cv2");
  }
  std::cerr << "note: fitted phase-type timing (mean " << mean << ", cv2 "
            << cv2 << ") for the moment engine\n";
  TTSHSModel fitted = model;
  fitted.timer_reset.timing = fit_mixture(mean, cv2);
  return fitted;
}

MomentState phase_steady(const TTSHSModel& model) {
  const auto system = build_augmented_system(with_phase_type_timing(model));
  return marginal_moments(system, steady_state_moments(system));
}

int cmd_validate(const std::string& config_path) {
  const RunConfig config = load_config_raw(config_path);
  const ValidationReport report = validate_model(config.model);
  for (const auto& v : report.errors)
    std::cout << "error " << v.code << ": " << v.message << "\n";
  for (const auto& v : report.warnings)
    std::cout << "warning " << v.code << ": " << v.message << "\n";
  if (report.valid()) {
    std::cout << "valid\n";
    return 0;
  }
  return 3;
}

int cmd_transient(const RunConfig& config) {
  const auto grid = make_time_grid(config.run.t_end, config.run.grid_points);
  MomentTable table;
  table.times = grid;
  const TTSHSModel model = with_phase_type_timing(config.model);
  const auto system = build_augmented_system(model);
  const Vector mu0 = initial_condition(system, model.initial_state);
  for (const auto& [time, mu] : integrate_moments(system, mu0, grid)) {
    MomentState state = marginal_moments(system, mu);
    state.time = time;
    table.mean.push_back(state.mean);
    table.covariance.push_back(state.covariance());
  }
  const std::string text = config.run.format == "json"
                               ? moment_table_json(table, "phase_engine")
                               : moment_table_csv(table);
  write_output(config.run.out, text);
  return 0;
}

int cmd_steady(const RunConfig& config) {
  MomentTable table;
  table.times = {0.0};
  std::string source;
  if (std::holds_alternative<PhaseTypeMixture>(
          config.model.timer_reset.timing) ||
      !is_noise_imparting(config.model)) {
    const MomentState state = phase_steady(config.model);
    table.mean = {state.mean};
    table.covariance = {state.covariance()};
    source = "phase_engine";
  } else {
    table.mean = {renewal_engine::steady_state_mean(config.model)};
    table.covariance = {renewal_engine::steady_state_covariance(config.model)};
    source = "renewal_engine";
  }
  const std::string text = config.run.format == "json"
                               ? moment_table_json(table, source)
                               : moment_table_csv(table);
  write_output(config.run.out, text);
  return 0;
}

std::string ensemble_csv(const EnsembleSummary& summary) {
  const Eigen::Index n = summary.mean.front().size();
  std::ostringstream out;
  out << "time";
  for (Eigen::Index i = 0; i < n; ++i) out << ",mean_" << i;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) out << ",cov_" << a << "_" << b;
  for (Eigen::Index i = 0; i < n; ++i) out << ",se_mean_" << i;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) out << ",se_cov_" << a << "_" << b;
  out << "\n";
  for (std::size_t t = 0; t < summary.times.size(); ++t) {
    out << fmt(summary.times[t]);
    const Matrix cov = summary.covariance(t);
    const Matrix se_cov = summary.se_covariance(t);
    for (Eigen::Index i = 0; i < n; ++i) out << "," << fmt(summary.mean[t][i]);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b) out << "," << fmt(cov(a, b));
    for (Eigen::Index i = 0; i < n; ++i)
      out << "," << fmt(summary.se_mean[t][i]);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b) out << "," << fmt(se_cov(a, b));
    out << "\n";
  }
  return out.str();
}

std::string ensemble_json(const EnsembleSummary& summary) {
  json doc;
  doc["meta"] = {{"version", kVersion},
                 {"source", "simulator"},
                 {"paths", summary.paths},
                 {"seed", summary.master_seed},
                 {"cov_projection_warnings", summary.cov_projection_warnings}};
  if (summary.interval_count > 0) {
    doc["meta"]["intervals"] = {{"count", summary.interval_count},
                                {"sum", summary.interval_sum},
                                {"sum2", summary.interval_sum2},
                                {"sum3", summary.interval_sum3}};
  }
  json rows = json::array();
  for (std::size_t t = 0; t < summary.times.size(); ++t) {
    rows.push_back({{"time", summary.times[t]},
                    {"mean", vector_json(summary.mean[t])},
                    {"covariance", matrix_json(summary.covariance(t))},
                    {"se_mean", vector_json(summary.se_mean[t])},
                    {"se_covariance", matrix_json(summary.se_covariance(t))}});
  }
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

int cmd_simulate(const RunConfig& config) {
  const auto grid = make_time_grid(config.run.t_end, config.run.grid_points);
  const EnsembleSummary summary =
      run_ensemble(config.model, config.run.sampler_kind(), config.run.paths,
                   grid, config.run.seed, {config.run.threads});
  const std::string text = config.run.format == "json"
                               ? ensemble_json(summary)
                               : ensemble_csv(summary);
  write_output(config.run.out, text);
  return 0;
}

struct ComparisonRow {
  std::string quantity;
  std::string criterion;
  double left = 0.0;
  double right = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

void print_comparison(const std::vector<ComparisonRow>& rows) {
  std::printf("%-14s %-22s %16s %16s %12s  %s\n", "quantity", "criterion",
              "value", "reference", "tolerance", "verdict");
  for (const auto& row : rows) {
    std::printf("%-14s %-22s %16.9g %16.9g %12.3g  %s\n",
                row.quantity.c_str(), row.criterion.c_str(), row.left,
                row.right, row.tolerance, row.pass ? "PASS" : "FAIL");
  }
}

int cmd_compare(const RunConfig& config) {
  const TTSHSModel& model = config.model;
  const Eigen::Index n = model.dimension();
  const MomentState phase = phase_steady(model);
  const Matrix phase_cov = phase.covariance();

  std::vector<ComparisonRow> rows;
  if (is_noise_imparting(model)) {
    const Vector mean = renewal_engine::steady_state_mean(model);
    const Matrix cov = renewal_engine::steady_state_covariance(model);
    for (Eigen::Index i = 0; i < n; ++i) {
      rows.push_back({"mean_" + std::to_string(i), "engines 1e-6 rel",
                      phase.mean[i], mean[i],
                      kEngineAgreementTol * std::max(1.0, std::abs(mean[i])),
                      false});
    }
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a; b < n; ++b)
        rows.push_back(
            {"cov_" + std::to_string(a) + "_" + std::to_string(b),
             "engines 1e-6 rel", phase_cov(a, b), cov(a, b),
             kEngineAgreementTol * std::max(1.0, std::abs(cov(a, b))), false});
    for (auto& row : rows)
      row.pass = std::abs(row.left - row.right) <= row.tolerance;
  }

  SteadyEstimateOptions options;
  options.paths = config.run.paths;
  options.master_seed = config.run.seed;
  options.threads = config.run.threads;
  const SteadyEstimate mc =
      steady_estimate(model, config.run.sampler_kind(), options);
  for (Eigen::Index i = 0; i < n; ++i) {
    ComparisonRow row{"mean_" + std::to_string(i), "MC 3 SE", phase.mean[i],
                      mc.mean[i], 3.0 * mc.se_mean[i], false};
    row.pass = std::abs(row.left - row.right) <= row.tolerance;
    rows.push_back(row);
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      ComparisonRow row{"cov_" + std::to_string(a) + "_" + std::to_string(b),
                        "MC 3 SE", phase_cov(a, b), mc.covariance(a, b),
                        3.0 * mc.se_covariance(a, b), false};
      row.pass = std::abs(row.left - row.right) <= row.tolerance;
      rows.push_back(row);
    }
  }

  print_comparison(rows);
  const bool all_pass =
      std::all_of(rows.begin(), rows.end(),
                  [](const ComparisonRow& row) { return row.pass; });
  std::printf("%s\n", all_pass ? "ALL PASS" : "COMPARISON FAILED");
  return all_pass ? 0 : 1;
}

int cmd_fit_timing(double mean, double cv2, const std::string& out,
                   const std::string& format) {
  const PhaseTypeMixture mix = fit_mixture(mean, cv2);
  const MeanCv2 check = mean_and_cv2(mix);
  std::ostringstream text;
  if (format == "json") {
    json doc;
    doc["meta"] = {{"version", kVersion},
                   {"fitted_mean", check.mean},
                   {"fitted_cv2", check.cv2}};
    json branches = json::array();
    for (const auto& b : mix.branches)
      branches.push_back(
          {{"p", b.probability}, {"m", b.stages}, {"k", b.rate}});
    doc["timing"] = {{"type", "phase_type"}, {"branches", branches}};
    text << doc.dump(2) << "\n";
  } else {
    text << "p,m,k\n";
    for (const auto& b : mix.branches)
      text << fmt(b.probability) << "," << b.stages << "," << fmt(b.rate)
           << "\n";
  }
  write_output(out, text.str());
  return 0;
}

struct GeneCliOptions {
  double kx = 10.0;
  double burst_mean = 1.0;
  double burst_second_moment = 2.0;
  double gamma = 1.0;
  std::optional<double> mean_interval;
  double beta = 1.0;
  double division_cv2 = 1.0 / 3.0;
  std::string burst_law = "exponential";
  bool with_bursts = false;
  bool compare = false;
  long long paths = 100'000;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out;
  std::string format = "csv";
};

int cmd_gene(const GeneCliOptions& cli) {
  GeneModelParams params;
  params.burst_rate = cli.kx;
  params.burst_size_mean = cli.burst_mean;
  params.burst_size_second_moment = cli.burst_second_moment;
  params.dilution_rate = cli.mean_interval
                             ? dilution_rate_from_interval(*cli.mean_interval)
                             : cli.gamma;
  params.partition_noise = cli.beta;
  params.burst_law = cli.burst_law == "constant"    ? BurstLaw::Constant
                     : cli.burst_law == "geometric" ? BurstLaw::Geometric
                                                    : BurstLaw::Exponential;
  const double mean_interval =
      division_interval_from_rate(params.dilution_rate);
  params.division_timing = fit_mixture(mean_interval, cli.division_cv2);

  const TTSHSModel model = build_ttshs(params, cli.with_bursts);
  const auto system = build_augmented_system(model);
  const MomentState engine =
      marginal_moments(system, steady_state_moments(system));
  const double engine_mean = engine.mean[0];
  const double engine_cv2 =
      engine.covariance()(0, 0) / (engine_mean * engine_mean);
  const ClosedFormStats printed = closed_form_stats(params, cli.with_bursts);

  if (!cli.compare) {
    std::ostringstream text;
    if (cli.format == "json") {
      json doc;
      doc["meta"] = {{"version", kVersion},
                     {"variant", cli.with_bursts ? "bursty" : "deterministic"},
                     {"mean_division_interval", mean_interval}};
      doc["engine"] = {{"mean", engine_mean}, {"cv2", engine_cv2}};
      doc["paper_closed_form"] = {{"mean", printed.mean},
                                  {"cv2", printed.cv2}};
      text << doc.dump(2) << "\n";
    } else {
      text << "source,mean,cv2\n";
      text << "engine," << fmt(engine_mean) << "," << fmt(engine_cv2) << "\n";
      text << "paper_closed_form," << fmt(printed.mean) << ","
           << fmt(printed.cv2) << "\n";
    }
    write_output(cli.out, text.str());
    return 0;
  }

  SteadyEstimateOptions options;
  options.paths = cli.paths;
  options.master_seed = cli.seed;
  options.threads = cli.threads;
  const SteadyEstimate mc =
      steady_estimate(model, ResetSampler::ScaledBinomial, options);
  const double mc_mean = mc.mean[0];
  const double mc_cv2 = mc.covariance(0, 0) / (mc_mean * mc_mean);
  // Delta-method SE for cv2 = C / mean^2.
  const double se_cv2 = std::sqrt(
      std::pow(mc.se_covariance(0, 0) / (mc_mean * mc_mean), 2) +
      std::pow(2.0 * mc.covariance(0, 0) / std::pow(mc_mean, 3) *
                   mc.se_mean[0],
               2));

  std::printf("gene expression (%s production), exact binomial partitioning\n",
              cli.with_bursts ? "bursty" : "deterministic");
  std::printf("%-22s %14s %14s\n", "source", "mean", "cv2");
  std::printf("%-22s %14.8g %14.8g\n", "engine (phase-type)", engine_mean,
              engine_cv2);
  std::printf("%-22s %14.8g %14.8g\n", "simulator", mc_mean, mc_cv2);
  std::printf("%-22s %14.8g %14.8g\n", "paper closed form", printed.mean,
              printed.cv2);
  std::printf("mc se: mean %.3g, cv2 %.3g\n", mc.se_mean[0], se_cv2);

  const bool mean_ok = std::abs(engine_mean - mc_mean) <= 3.0 * mc.se_mean[0];
  const bool cv2_ok = std::abs(engine_cv2 - mc_cv2) <= 3.0 * se_cv2;
  const bool printed_matches = std::abs(printed.cv2 - mc_cv2) <= 3.0 * se_cv2;
  std::printf("engine vs simulator (3 SE): %s\n",
              mean_ok && cv2_ok ? "PASS" : "FAIL");
  std::printf("printed closed form vs simulator (3 SE): %s\n",
              printed_matches ? "agrees" : "disagrees");
  return mean_ok && cv2_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact moment dynamics and Monte Carlo simulation of linear "
               "time-triggered stochastic hybrid systems"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> t_end;
  std::optional<int> grid_points;
  std::optional<long long> paths;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::string> sampler;

  auto add_common = [&](CLI::App* cmd, bool with_run_flags) {
    cmd->add_option("--config", config_path, "JSON model/run configuration")
        ->required();
    if (with_run_flags) {
      cmd->add_option("--t-end", t_end, "horizon");
      cmd->add_option("--grid-points", grid_points, "output grid size");
      cmd->add_option("--paths", paths, "Monte Carlo paths");
      cmd->add_option("--seed", seed, "master seed");
      cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
      cmd->add_option("--out", out, "output file (default stdout)");
      cmd->add_option("--format", format, "csv|json");
      cmd->add_option("--sampler", sampler, "gaussian|deterministic|binomial");
    }
  };

  CLI::App* validate = app.add_subcommand("validate", "check a model config");
  add_common(validate, false);
  CLI::App* transient =
      app.add_subcommand("transient", "moment trajectories (phase engine)");
  add_common(transient, true);
  CLI::App* steady =
      app.add_subcommand("steady", "steady-state moments (engines)");
  add_common(steady, true);
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo ensemble summary");
  add_common(simulate, true);
  CLI::App* compare = app.add_subcommand(
      "compare", "engines vs Monte Carlo with PASS/FAIL verdicts");
  add_common(compare, true);

  double fit_mean = 1.0;
  double fit_cv2 = 1.0;
  std::string fit_out;
  std::string fit_format = "csv";
  CLI::App* fit =
      app.add_subcommand("fit-timing", "two-moment phase-type fit");
  fit->add_option("--mean", fit_mean, "target mean")->required();
  fit->add_option("--cv2", fit_cv2, "target cv2")->required();
  fit->add_option("--out", fit_out, "output file");
  fit->add_option("--format", fit_format, "csv|json");

  GeneCliOptions gene;
  CLI::App* gene_cmd =
      app.add_subcommand("gene", "bursty gene-expression preset");
  gene_cmd->add_option("--kx", gene.kx, "burst frequency");
  gene_cmd->add_option("--burst-mean", gene.burst_mean, "<B>");
  gene_cmd->add_option("--burst-second-moment", gene.burst_second_moment,
                       "<B^2>");
  gene_cmd->add_option("--gamma", gene.gamma, "dilution rate");
  gene_cmd->add_option("--t-mean", gene.mean_interval,
                       "mean division interval (overrides --gamma)");
  gene_cmd->add_option("--beta", gene.beta, "partition noise");
  gene_cmd->add_option("--division-cv2", gene.division_cv2,
                       "division timing cv2");
  gene_cmd->add_option("--burst-law", gene.burst_law,
                       "exponential|constant|geometric");
  gene_cmd->add_flag("--with-bursts", gene.with_bursts,
                     "stochastic bursty production");
  gene_cmd->add_flag("--compare", gene.compare,
                     "run engine + simulator + closed forms side by side");
  gene_cmd->add_option("--paths", gene.paths, "Monte Carlo paths");
  gene_cmd->add_option("--seed", gene.seed, "master seed");
  gene_cmd->add_option("--threads", gene.threads, "worker threads");
  gene_cmd->add_option("--out", gene.out, "output file");
  gene_cmd->add_option("--format", gene.format, "csv|json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(config_path);
    RunConfig config;
    if (*transient || *steady || *simulate || *compare) {
      config = load_config(config_path);
      if (t_end) config.run.t_end = *t_end;
      if (grid_points) config.run.grid_points = *grid_points;
      if (paths) config.run.paths = *paths;
      if (seed) config.run.seed = *seed;
      if (threads) config.run.threads = *threads;
      if (out) config.run.out = *out;
      if (format) config.run.format = *format;
      if (sampler) config.run.sampler = *sampler;
      if (config.run.format != "csv" && config.run.format != "json") {
        throw Error(ErrorCode::SchemaError, "format must be csv or json");
      }
      config.run.sampler_kind();
    }
    if (*transient) return cmd_transient(config);
    if (*steady) return cmd_steady(config);
    if (*simulate) return cmd_simulate(config);
    if (*compare) return cmd_compare(config);
    if (*fit) return cmd_fit_timing(fit_mean, fit_cv2, fit_out, fit_format);
    if (*gene_cmd) return cmd_gene(gene);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    switch (err.code()) {
      case ErrorCode::ParseError:
      case ErrorCode::SchemaError:
      case ErrorCode::ValidationError:
        return 3;
      default:
        return 4;
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 4;
  }
  return 0;
}
