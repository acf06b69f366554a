// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Statistical checks run at fixed seeds so the suite is
// deterministic; tolerances are part of the contract, not knobs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "ttshs/config.hpp"
#include "ttshs/gene_expression.hpp"
#include "ttshs/phase_engine.hpp"
#include "ttshs/phase_type.hpp"
#include "ttshs/renewal_engine.hpp"
#include "ttshs/simulator.hpp"

using namespace ttshs;
using ttshs::testing::adaptive_simpson;
using ttshs::testing::reference_2d_model;
using ttshs::testing::reference_full_reset_model;
using ttshs::testing::reference_gene_params;
using ttshs::testing::reference_scalar_model;

namespace {

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --- criterion 1: cross-engine oracle on random noise-imparting models ----

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(20260809);
  double worst_mean = 0.0, worst_cov = 0.0;
  bool pass = true;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 3;
    const TTSHSModel model =
        ttshs::testing::random_noise_imparting_model(gen, n, 6);
    if (!validate_model(model).valid()) {
      pass = false;
      break;
    }
    const Vector mean_renewal = renewal_engine::steady_state_mean(model);
    const Matrix cov_renewal = renewal_engine::steady_state_covariance(model);
    const auto system = build_augmented_system(model);
    const MomentState phase =
        marginal_moments(system, steady_state_moments(system));

    const double mean_err = (phase.mean - mean_renewal).cwiseAbs().maxCoeff();
    const double cov_err =
        (phase.covariance() - cov_renewal).cwiseAbs().maxCoeff() /
        std::max(1e-30, cov_renewal.cwiseAbs().maxCoeff());
    worst_mean = std::max(worst_mean, mean_err);
    worst_cov = std::max(worst_cov, cov_err);
    if (mean_err > 1e-8 * std::max(1.0, mean_renewal.cwiseAbs().maxCoeff()) ||
        cov_err > 1e-6) {
      pass = false;
    }
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 30.0;
  verdict(1, pass,
          "cross-engine oracle on 25 random models: worst mean err " +
              fmt(worst_mean) + ", worst cov rel err " + fmt(worst_cov) +
              ", " + fmt(elapsed) + " s");
}

// --- criterion 2: Monte Carlo oracle on the reference models --------------

struct NamedModel {
  std::string name;
  TTSHSModel model;
  ResetSampler sampler;
};

std::vector<NamedModel> reference_models() {
  return {{"scalar-renewal", reference_scalar_model(), ResetSampler::Gaussian},
          {"two-state", reference_2d_model(), ResetSampler::Gaussian},
          {"full-reset", reference_full_reset_model(), ResetSampler::Gaussian},
          {"gene-deterministic", build_ttshs(reference_gene_params(), false),
           ResetSampler::ScaledBinomial},
          {"gene-bursty", build_ttshs(reference_gene_params(), true),
           ResetSampler::ScaledBinomial}};
}

void criterion_2() {
  bool pass = true;
  std::string detail;
  for (const auto& [name, model, sampler] : reference_models()) {
    const auto start = std::chrono::steady_clock::now();
    const auto system = build_augmented_system(model);
    const MomentState engine =
        marginal_moments(system, steady_state_moments(system));
    SteadyEstimateOptions options;
    options.paths = 100'000;
    options.master_seed = 7;
    const SteadyEstimate mc = steady_estimate(model, sampler, options);

    bool model_ok = true;
    double worst_sigma = 0.0;
    const Eigen::Index n = model.dimension();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sigma =
          std::abs(engine.mean[i] - mc.mean[i]) / mc.se_mean[i];
      worst_sigma = std::max(worst_sigma, sigma);
      if (sigma > 3.0) model_ok = false;
    }
    const Matrix engine_cov = engine.covariance();
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = a; b < n; ++b) {
        const double sigma = std::abs(engine_cov(a, b) - mc.covariance(a, b)) /
                             mc.se_covariance(a, b);
        worst_sigma = std::max(worst_sigma, sigma);
        if (sigma > 3.0) model_ok = false;
      }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 180.0) model_ok = false;
    if (!model_ok) pass = false;
    detail += name + " " + fmt(worst_sigma) + " se/" + fmt(elapsed) + "s  ";
  }
  verdict(2, pass, "Monte Carlo oracle, 1e5 paths: " + detail);
}

// --- criterion 3: mean-interval invariance at steady state ----------------

void criterion_3() {
  TTSHSModel erlang1 = reference_scalar_model();
  erlang1.timer_reset.timing = PhaseTypeMixture{{{1.0, 1, 1.0}}};
  TTSHSModel erlang10 = reference_scalar_model();
  erlang10.timer_reset.timing = PhaseTypeMixture{{{1.0, 10, 10.0}}};
  TTSHSModel mixture = reference_scalar_model();
  mixture.timer_reset.timing =
      PhaseTypeMixture{{{0.3, 1, 0.6}, {0.7, 2, 2.8}}};
  const std::vector<const TTSHSModel*> trio{&erlang1, &erlang10, &mixture};

  std::vector<double> engine_cov, transient_cov, mc_cov, mc_se;
  for (const TTSHSModel* model : trio) {
    const auto system = build_augmented_system(*model);
    engine_cov.push_back(
        marginal_moments(system, steady_state_moments(system))
            .covariance()(0, 0));
    const Vector mu0 = initial_condition(system, model->initial_state);
    const std::vector<double> grid{0.0, 0.5};  // <T>/2 with <T> = 1
    const auto traj = integrate_moments(system, mu0, grid);
    transient_cov.push_back(
        marginal_moments(system, traj[1].second).covariance()(0, 0));

    SteadyEstimateOptions options;
    options.paths = 100'000;
    options.master_seed = 13;
    const SteadyEstimate mc =
        steady_estimate(*model, ResetSampler::Gaussian, options);
    mc_cov.push_back(mc.covariance(0, 0));
    mc_se.push_back(mc.se_covariance(0, 0));
  }

  bool pass = true;
  double worst_rel = 0.0, worst_sigma = 0.0, min_transient_gap = 1e99;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double rel = std::abs(engine_cov[i] - engine_cov[j]) /
                         std::abs(engine_cov[i]);
      worst_rel = std::max(worst_rel, rel);
      if (rel > 1e-6) pass = false;
      const double sigma =
          std::abs(mc_cov[i] - mc_cov[j]) /
          std::sqrt(mc_se[i] * mc_se[i] + mc_se[j] * mc_se[j]);
      worst_sigma = std::max(worst_sigma, sigma);
      if (sigma > 3.0) pass = false;
    }
  }
  for (int j = 1; j < 3; ++j) {
    const double gap = std::abs(transient_cov[0] - transient_cov[j]) /
                       std::abs(transient_cov[0]);
    min_transient_gap = std::min(min_transient_gap, gap);
  }
  if (!(min_transient_gap > 1e-3)) pass = false;
  verdict(3, pass,
          "interval-mean invariance: engine rel spread " + fmt(worst_rel) +
              ", MC spread " + fmt(worst_sigma) + " se, transient gap at " +
              "t=<T>/2 " + fmt(min_transient_gap));
}

// --- criterion 4: conditional-mean flatness in timer age ------------------

void criterion_4() {
  const auto start = std::chrono::steady_clock::now();
  const TTSHSModel model = reference_scalar_model();
  const ConditionalStats flat = timer_conditional_stats(
      model, ResetSampler::Gaussian, 100'000, 25.0, 10, 17);

  TTSHSModel control = reference_scalar_model();
  control.timer_reset.mean_gain(0, 0) = 0.5;
  control.timer_reset.cov_linear.setZero();
  const ConditionalStats sloped = timer_conditional_stats(
      control, ResetSampler::Deterministic, 100'000, 25.0, 10, 17);

  bool bins_contain_mean = true;
  for (const auto& bin : flat.bins) {
    if (std::abs(bin.mean - flat.global_mean) > bin.ci_half_width)
      bins_contain_mean = false;
  }
  const bool flat_ok = std::abs(flat.slope) <= flat.slope_ci_half_width;
  const bool control_ok =
      std::abs(sloped.slope) > sloped.slope_ci_half_width;
  const double elapsed = seconds_since(start);
  const bool pass =
      flat_ok && control_ok && bins_contain_mean && elapsed < 120.0;
  verdict(4, pass,
          "conditional mean vs timer age: slope " + fmt(flat.slope) + " +- " +
              fmt(flat.slope_ci_half_width) + " (flat), control slope " +
              fmt(sloped.slope) + " +- " + fmt(sloped.slope_ci_half_width) +
              ", " + fmt(elapsed) + " s");
}

// --- criterion 5: phase-type distribution suite ---------------------------

void criterion_5() {
  bool pass = true;
  std::string note;

  // Ten mixtures: sampled moments q in {1,2,3} within 4 SE.
  std::mt19937_64 gen(5005);
  double worst_sigma = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const PhaseTypeMixture mix = ttshs::testing::random_mixture(gen);
    RandomStream rng(900 + trial);
    const int count = 1'000'000;
    double sums[7] = {0, 0, 0, 0, 0, 0, 0};
    for (int i = 0; i < count; ++i) {
      const double t = sample_interval(mix, rng);
      double power = t;
      for (int q = 1; q <= 6; ++q) {
        sums[q] += power;
        power *= t;
      }
    }
    for (int q = 1; q <= 3; ++q) {
      const double mq = sums[q] / count;
      const double m2q = sums[2 * q] / count;
      const double se = std::sqrt(std::max(0.0, m2q - mq * mq) / count);
      const double sigma = std::abs(mq - interval_moment(mix, q)) / se;
      worst_sigma = std::max(worst_sigma, sigma);
      if (sigma > 4.0) pass = false;
    }
  }
  note += "sampling worst " + fmt(worst_sigma) + " se; ";

  // Fit round trip at 1e-9 relative.
  double worst_fit = 0.0;
  for (double mean : {0.1, 1.0, 10.0}) {
    for (double cv2 : {0.05, 0.2, 1.0 / 3.0, 0.4, 1.0, 2.0, 5.0}) {
      const auto round = mean_and_cv2(fit_mixture(mean, cv2));
      worst_fit = std::max(worst_fit, std::abs(round.mean - mean) / mean);
      worst_fit = std::max(worst_fit, std::abs(round.cv2 - cv2) / cv2);
    }
  }
  if (worst_fit > 1e-9) pass = false;
  note += "fit worst rel " + fmt(worst_fit) + "; ";

  // Hazard integrates back to the survival function at 1e-8.
  const PhaseTypeMixture probes[] = {
      PhaseTypeMixture{{{1.0, 1, 2.0}}}, PhaseTypeMixture{{{1.0, 5, 5.0}}},
      PhaseTypeMixture{{{0.3, 1, 0.6}, {0.7, 2, 2.8}}}};
  double worst_hazard = 0.0;
  for (const auto& mix : probes) {
    const double mean = mean_and_cv2(mix).mean;
    for (double frac : {0.4, 1.1, 3.0, 10.0}) {
      const double tau = frac * mean;
      const double integral = adaptive_simpson(
          [&](double u) { return hazard_at(mix, u); }, 0.0, tau, 1e-11);
      const double err =
          std::abs(std::exp(-integral) - std::exp(log_survival(mix, tau)));
      worst_hazard = std::max(worst_hazard, err);
    }
  }
  if (worst_hazard > 1e-8) pass = false;
  note += "hazard-survival worst " + fmt(worst_hazard);
  verdict(5, pass, "phase-type suite: " + note);
}

// --- criterion 6: single-stage reduction to jump-linear moments -----------

void criterion_6() {
  std::mt19937_64 gen(606060);
  double worst = 0.0;
  bool pass = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    TTSHSModel model;
    model.dynamics = ttshs::testing::random_stable_dynamics(gen, n);
    const Matrix f = ttshs::testing::random_matrix(gen, n, -0.5, 0.5);
    model.timer_reset = {
        ttshs::testing::random_matrix(gen, n, -0.6, 0.6),
        Vector::Constant(n, ttshs::testing::uniform(gen, -1.0, 1.0)),
        ttshs::testing::random_matrix(gen, n, -0.1, 0.1),
        ttshs::testing::random_matrix(gen, n, -0.3, 0.3),
        f * f.transpose(),
        PhaseTypeMixture{{{1.0, 1, ttshs::testing::uniform(gen, 0.5, 3.0)}}}};
    model.initial_state = Vector::Zero(n);
    if (trial % 2 == 1) {
      MemorylessResetFamily family;
      family.rate = 1.3;
      family.mean_gain = ttshs::testing::random_matrix(gen, n, -0.4, 0.4);
      family.mean_offset = Vector::Constant(n, 0.25);
      family.cov_quadratic = Matrix::Zero(n, n);
      family.cov_linear = ttshs::testing::random_matrix(gen, n, -0.2, 0.2);
      family.cov_constant = Matrix::Identity(n, n);
      model.memoryless_resets.push_back(std::move(family));
    }
    const auto system = build_augmented_system(model);
    const Matrix oracle = ttshs::testing::jump_linear_generator(model);
    const double err = (system.generator - oracle).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err > 1e-12 || system.offset.cwiseAbs().maxCoeff() != 0.0)
      pass = false;
  }
  verdict(6, pass,
          "jump-linear reduction, 10 random models: worst generator "
          "discrepancy " +
              fmt(worst));
}

// --- criterion 7: gene-expression adjudication ----------------------------

void criterion_7() {
  bool pass = true;
  std::printf("  gene-expression adjudication (kx=10, <B>=1, gamma=1, "
              "beta=1, exact binomial partitioning)\n");
  std::printf("  %-14s %-22s %12s %12s\n", "variant", "source", "mean",
              "cv2");
  for (const bool with_bursts : {false, true}) {
    const GeneModelParams params = reference_gene_params();
    const TTSHSModel model = build_ttshs(params, with_bursts);
    const auto system = build_augmented_system(model);
    const MomentState engine =
        marginal_moments(system, steady_state_moments(system));
    const double engine_mean = engine.mean[0];
    const double engine_cv2 =
        engine.covariance()(0, 0) / (engine_mean * engine_mean);

    SteadyEstimateOptions options;
    options.paths = 100'000;
    options.master_seed = 19;
    const SteadyEstimate mc =
        steady_estimate(model, ResetSampler::ScaledBinomial, options);
    const double mc_mean = mc.mean[0];
    const double mc_cv2 = mc.covariance(0, 0) / (mc_mean * mc_mean);
    const double se_cv2 = std::sqrt(
        std::pow(mc.se_covariance(0, 0) / (mc_mean * mc_mean), 2) +
        std::pow(2.0 * mc.covariance(0, 0) / std::pow(mc_mean, 3) *
                     mc.se_mean[0],
                 2));
    const ClosedFormStats printed = closed_form_stats(params, with_bursts);

    const char* tag = with_bursts ? "bursty" : "deterministic";
    std::printf("  %-14s %-22s %12.6f %12.6f\n", tag, "engine", engine_mean,
                engine_cv2);
    std::printf("  %-14s %-22s %12.6f %12.6f  (se %.2g, %.2g)\n", tag,
                "simulator", mc_mean, mc_cv2, mc.se_mean[0], se_cv2);
    std::printf("  %-14s %-22s %12.6f %12.6f\n", tag, "printed closed form",
                printed.mean, printed.cv2);

    const bool mean_ok =
        std::abs(engine_mean - mc_mean) <= 3.0 * mc.se_mean[0];
    const bool cv2_ok = std::abs(engine_cv2 - mc_cv2) <= 3.0 * se_cv2;
    if (!(mean_ok && cv2_ok)) pass = false;
    const bool printed_matches =
        std::abs(printed.cv2 - mc_cv2) <= 3.0 * se_cv2;
    std::printf("  %-14s engine-vs-simulator %s; printed cv2 %s the "
                "simulation\n",
                tag, mean_ok && cv2_ok ? "agrees (3 se)" : "DISAGREES",
                printed_matches ? "matches" : "does not match");
  }
  verdict(7, pass,
          "gene adjudication: simulator and engine agree on both variants "
          "(printed forms reported above, agreement not required)");
}

// --- criterion 8: byte-identical CLI output across thread counts ----------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void criterion_8(const std::string& cli, const std::string& work_dir) {
  if (cli.empty()) {
    verdict(8, false, "CLI path not supplied (--cli)");
    return;
  }
  const std::string config_path = work_dir + "/acceptance_determinism.json";
  {
    RunConfig config;
    config.model = reference_scalar_model();
    config.run.t_end = 6.0;
    config.run.grid_points = 13;
    config.run.paths = 20'000;
    config.run.seed = 31;
    std::ofstream out(config_path);
    out << save_config(config);
  }
  const std::string out1 = work_dir + "/acceptance_sim_t1.csv";
  const std::string out2 = work_dir + "/acceptance_sim_t2.csv";
  const std::string base =
      "\"" + cli + "\" simulate --config \"" + config_path + "\"";
  const int rc1 =
      std::system((base + " --threads 1 --out \"" + out1 + "\"").c_str());
  const int rc2 =
      std::system((base + " --threads 2 --out \"" + out2 + "\"").c_str());
  const std::string a = read_file(out1);
  const std::string b = read_file(out2);
  const bool pass = rc1 == 0 && rc2 == 0 && !a.empty() && a == b;
  verdict(8, pass,
          "simulate --threads 1 vs --threads 2: " +
              std::string(pass ? "byte-identical CSV (" : "MISMATCH (") +
              std::to_string(a.size()) + " bytes)");
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::string work_dir = ".";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--cli") cli = argv[i + 1];
    if (flag == "--work-dir") work_dir = argv[i + 1];
  }

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8(cli, work_dir);

  if (failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return 1;
}
