#include "ttshs/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "ttshs/errors.hpp"

namespace ttshs {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& context,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw Error(ErrorCode::SchemaError,
                  "unknown key \"" + item.key() + "\" in " + context);
    }
  }
}

double as_number(const json& value, const std::string& context) {
  if (!value.is_number()) {
    throw Error(ErrorCode::SchemaError, context + " must be a number");
  }
  return value.get<double>();
}

Vector parse_vector(const json& value, const std::string& context,
                    Eigen::Index expected = -1) {
  if (!value.is_array()) {
    throw Error(ErrorCode::SchemaError, context + " must be an array");
  }
  Vector out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    out[static_cast<Eigen::Index>(i)] =
        as_number(value[i], context + "[" + std::to_string(i) + "]");
  if (expected >= 0 && out.size() != expected) {
    throw Error(ErrorCode::SchemaError,
                context + " must have length " + std::to_string(expected) +
                    ", got " + std::to_string(out.size()));
  }
  return out;
}

Matrix parse_matrix(const json& value, const std::string& context,
                    Eigen::Index expected) {
  if (!value.is_array() || value.empty()) {
    throw Error(ErrorCode::SchemaError,
                context + " must be a non-empty array of rows");
  }
  const std::size_t rows = value.size();
  std::size_t cols = 0;
  Matrix out;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = value[r];
    if (!row.is_array()) {
      throw Error(ErrorCode::SchemaError,
                  context + " row " + std::to_string(r) + " must be an array");
    }
    if (r == 0) {
      cols = row.size();
      out.resize(rows, cols);
    } else if (row.size() != cols) {
      throw Error(ErrorCode::SchemaError,
                  context + " rows have inconsistent lengths");
    }
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_number(row[c], context + " entry");
  }
  if (out.rows() != expected || out.cols() != expected) {
    throw Error(ErrorCode::SchemaError,
                context + " must be " + std::to_string(expected) + "x" +
                    std::to_string(expected) + ", got " +
                    std::to_string(out.rows()) + "x" +
                    std::to_string(out.cols()));
  }
  return out;
}

TimingLaw parse_timing(const json& value) {
  if (!value.is_object()) {
    throw Error(ErrorCode::SchemaError, "model.timing must be an object");
  }
  const std::string type = value.value("type", "");
  if (type == "phase_type") {
    check_keys(value, "model.timing", {"type", "branches"});
    if (!value.contains("branches") || !value["branches"].is_array()) {
      throw Error(ErrorCode::SchemaError,
                  "phase_type timing needs a branches array");
    }
    PhaseTypeMixture mix;
    for (const auto& b : value["branches"]) {
      check_keys(b, "timing branch", {"p", "m", "k"});
      ErlangBranch branch;
      branch.probability = as_number(b.at("p"), "branch p");
      branch.stages = static_cast<int>(as_number(b.at("m"), "branch m"));
      branch.rate = as_number(b.at("k"), "branch k");
      mix.branches.push_back(branch);
    }
    return mix;
  }
  if (type == "deterministic" || type == "gamma" || type == "lognormal") {
    check_keys(value, "model.timing", {"type", "mean", "cv2"});
    EmpiricalRenewal law;
    law.kind = type == "deterministic" ? EmpiricalRenewal::Kind::Deterministic
               : type == "gamma"       ? EmpiricalRenewal::Kind::Gamma
                                       : EmpiricalRenewal::Kind::LogNormal;
    law.mean = as_number(value.at("mean"), "timing mean");
    law.cv2 = value.contains("cv2") ? as_number(value["cv2"], "timing cv2")
                                    : 0.0;
    return law;
  }
  throw Error(ErrorCode::SchemaError,
              "timing type must be phase_type, deterministic, gamma or "
              "lognormal, got \"" +
                  type + "\"");
}

BurstLaw parse_burst_law(const std::string& name) {
  if (name == "moment_matched") return BurstLaw::MomentMatched;
  if (name == "exponential") return BurstLaw::Exponential;
  if (name == "constant") return BurstLaw::Constant;
  if (name == "geometric") return BurstLaw::Geometric;
  throw Error(ErrorCode::SchemaError, "unknown burst_law \"" + name + "\"");
}

const char* burst_law_name(BurstLaw law) {
  switch (law) {
    case BurstLaw::MomentMatched: return "moment_matched";
    case BurstLaw::Exponential: return "exponential";
    case BurstLaw::Constant: return "constant";
    case BurstLaw::Geometric: return "geometric";
  }
  return "moment_matched";
}

json dump_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json dump_matrix(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json dump_timing(const TimingLaw& timing) {
  json out;
  if (const auto* mix = std::get_if<PhaseTypeMixture>(&timing)) {
    out["type"] = "phase_type";
    json branches = json::array();
    for (const auto& b : mix->branches) {
      branches.push_back(
          {{"p", b.probability}, {"m", b.stages}, {"k", b.rate}});
    }
    out["branches"] = branches;
    return out;
  }
  const auto& law = std::get<EmpiricalRenewal>(timing);
  switch (law.kind) {
    case EmpiricalRenewal::Kind::Deterministic:
      out["type"] = "deterministic";
      break;
    case EmpiricalRenewal::Kind::Gamma: out["type"] = "gamma"; break;
    case EmpiricalRenewal::Kind::LogNormal: out["type"] = "lognormal"; break;
  }
  out["mean"] = law.mean;
  out["cv2"] = law.cv2;
  return out;
}

}  // namespace

ResetSampler RunSettings::sampler_kind() const {
  if (sampler == "gaussian") return ResetSampler::Gaussian;
  if (sampler == "deterministic") return ResetSampler::Deterministic;
  if (sampler == "binomial") return ResetSampler::ScaledBinomial;
  throw Error(ErrorCode::SchemaError,
              "sampler must be gaussian, deterministic or binomial, got \"" +
                  sampler + "\"");
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw Error(ErrorCode::ParseError, err.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorCode::SchemaError, "top level must be an object");
  }
  check_keys(doc, "top level", {"model", "run"});
  if (!doc.contains("model")) {
    throw Error(ErrorCode::SchemaError, "missing \"model\" section");
  }
  const json& model_doc = doc["model"];
  check_keys(model_doc, "model",
             {"dynamics", "timing", "timer_reset", "memoryless_resets",
              "initial_state"});
  if (!model_doc.contains("dynamics")) {
    throw Error(ErrorCode::SchemaError, "missing model.dynamics");
  }
  const json& dyn = model_doc["dynamics"];
  check_keys(dyn, "model.dynamics", {"drift_offset", "drift_matrix"});
  if (!dyn.contains("drift_offset") || !dyn.contains("drift_matrix")) {
    throw Error(ErrorCode::SchemaError,
                "model.dynamics needs drift_offset and drift_matrix");
  }

  RunConfig config;
  config.model.dynamics.drift_offset =
      parse_vector(dyn["drift_offset"], "drift_offset");
  const Eigen::Index n = config.model.dynamics.drift_offset.size();
  if (n < 1) {
    throw Error(ErrorCode::SchemaError, "drift_offset must be non-empty");
  }
  config.model.dynamics.drift_matrix =
      parse_matrix(dyn["drift_matrix"], "drift_matrix", n);

  if (!model_doc.contains("timing")) {
    throw Error(ErrorCode::SchemaError, "missing model.timing");
  }
  TimingLaw timing = parse_timing(model_doc["timing"]);

  // Default timer reset: pure renewal marker, J = I, R = 0, no noise.
  config.model.timer_reset = {Matrix::Identity(n, n), Vector::Zero(n),
                              Matrix::Zero(n, n),     Matrix::Zero(n, n),
                              Matrix::Zero(n, n),     std::move(timing)};
  if (model_doc.contains("timer_reset")) {
    const json& reset = model_doc["timer_reset"];
    check_keys(reset, "model.timer_reset",
               {"mean_gain", "mean_offset", "cov_quadratic", "cov_linear",
                "cov_constant"});
    auto& family = config.model.timer_reset;
    if (reset.contains("mean_gain"))
      family.mean_gain = parse_matrix(reset["mean_gain"], "mean_gain", n);
    if (reset.contains("mean_offset"))
      family.mean_offset = parse_vector(reset["mean_offset"], "mean_offset", n);
    if (reset.contains("cov_quadratic"))
      family.cov_quadratic =
          parse_matrix(reset["cov_quadratic"], "cov_quadratic", n);
    if (reset.contains("cov_linear"))
      family.cov_linear = parse_matrix(reset["cov_linear"], "cov_linear", n);
    if (reset.contains("cov_constant"))
      family.cov_constant =
          parse_matrix(reset["cov_constant"], "cov_constant", n);
  }

  if (model_doc.contains("memoryless_resets")) {
    const json& families = model_doc["memoryless_resets"];
    if (!families.is_array()) {
      throw Error(ErrorCode::SchemaError,
                  "model.memoryless_resets must be an array");
    }
    for (const auto& f : families) {
      check_keys(f, "memoryless reset",
                 {"rate", "mean_gain", "mean_offset", "cov_quadratic",
                  "cov_linear", "cov_constant", "burst_law"});
      MemorylessResetFamily family;
      family.rate = as_number(f.at("rate"), "memoryless rate");
      family.mean_gain = f.contains("mean_gain")
                             ? parse_matrix(f["mean_gain"], "mean_gain", n)
                             : Matrix::Identity(n, n);
      family.mean_offset = f.contains("mean_offset")
                               ? parse_vector(f["mean_offset"], "mean_offset", n)
                               : Vector::Zero(n);
      family.cov_quadratic =
          f.contains("cov_quadratic")
              ? parse_matrix(f["cov_quadratic"], "cov_quadratic", n)
              : Matrix::Zero(n, n);
      family.cov_linear = f.contains("cov_linear")
                              ? parse_matrix(f["cov_linear"], "cov_linear", n)
                              : Matrix::Zero(n, n);
      family.cov_constant =
          f.contains("cov_constant")
              ? parse_matrix(f["cov_constant"], "cov_constant", n)
              : Matrix::Zero(n, n);
      if (f.contains("burst_law"))
        family.burst_law = parse_burst_law(f["burst_law"].get<std::string>());
      config.model.memoryless_resets.push_back(std::move(family));
    }
  }

  config.model.initial_state =
      model_doc.contains("initial_state")
          ? parse_vector(model_doc["initial_state"], "initial_state", n)
          : Vector::Zero(n);

  if (doc.contains("run")) {
    const json& run = doc["run"];
    check_keys(run, "run",
               {"t_end", "grid_points", "paths", "seed", "out", "format",
                "sampler", "threads"});
    if (run.contains("t_end"))
      config.run.t_end = as_number(run["t_end"], "run.t_end");
    if (run.contains("grid_points"))
      config.run.grid_points =
          static_cast<int>(as_number(run["grid_points"], "run.grid_points"));
    if (run.contains("paths"))
      config.run.paths =
          static_cast<long long>(as_number(run["paths"], "run.paths"));
    if (run.contains("seed"))
      config.run.seed =
          static_cast<std::uint64_t>(as_number(run["seed"], "run.seed"));
    if (run.contains("out")) config.run.out = run["out"].get<std::string>();
    if (run.contains("format"))
      config.run.format = run["format"].get<std::string>();
    if (run.contains("sampler"))
      config.run.sampler = run["sampler"].get<std::string>();
    if (run.contains("threads"))
      config.run.threads =
          static_cast<int>(as_number(run["threads"], "run.threads"));
  }
  if (config.run.format != "csv" && config.run.format != "json") {
    throw Error(ErrorCode::SchemaError,
                "run.format must be csv or json, got \"" + config.run.format +
                    "\"");
  }
  config.run.sampler_kind();  // reject bad sampler names early
  return config;
}

RunConfig load_config_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open config file " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

RunConfig load_config(const std::string& path) {
  RunConfig config = load_config_raw(path);
  const ValidationReport report = validate_model(config.model);
  if (!report.valid()) {
    std::string codes;
    for (const auto& violation : report.errors) {
      if (!codes.empty()) codes += ", ";
      codes += violation.code;
    }
    throw Error(ErrorCode::ValidationError, codes);
  }
  return config;
}

std::string save_config(const RunConfig& config) {
  json model;
  model["dynamics"] = {
      {"drift_offset", dump_vector(config.model.dynamics.drift_offset)},
      {"drift_matrix", dump_matrix(config.model.dynamics.drift_matrix)}};
  model["timing"] = dump_timing(config.model.timer_reset.timing);
  model["timer_reset"] = {
      {"mean_gain", dump_matrix(config.model.timer_reset.mean_gain)},
      {"mean_offset", dump_vector(config.model.timer_reset.mean_offset)},
      {"cov_quadratic", dump_matrix(config.model.timer_reset.cov_quadratic)},
      {"cov_linear", dump_matrix(config.model.timer_reset.cov_linear)},
      {"cov_constant", dump_matrix(config.model.timer_reset.cov_constant)}};
  if (!config.model.memoryless_resets.empty()) {
    json families = json::array();
    for (const auto& f : config.model.memoryless_resets) {
      families.push_back({{"rate", f.rate},
                          {"mean_gain", dump_matrix(f.mean_gain)},
                          {"mean_offset", dump_vector(f.mean_offset)},
                          {"cov_quadratic", dump_matrix(f.cov_quadratic)},
                          {"cov_linear", dump_matrix(f.cov_linear)},
                          {"cov_constant", dump_matrix(f.cov_constant)},
                          {"burst_law", burst_law_name(f.burst_law)}});
    }
    model["memoryless_resets"] = families;
  }
  model["initial_state"] = dump_vector(config.model.initial_state);

  json doc;
  doc["model"] = model;
  doc["run"] = {{"t_end", config.run.t_end},
                {"grid_points", config.run.grid_points},
                {"paths", config.run.paths},
                {"seed", config.run.seed},
                {"out", config.run.out},
                {"format", config.run.format},
                {"sampler", config.run.sampler},
                {"threads", config.run.threads}};
  return doc.dump(2) + "\n";
}

}  // namespace ttshs
