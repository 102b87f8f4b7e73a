#include "ratelab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ratelab/errors.hpp"

namespace ratelab {

namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* ctx) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw SchemaError(std::string(ctx) + ": malformed JSON");
  }
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const char* ctx) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (item.key() == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw SchemaError(std::string(ctx) + ": unknown field '" + item.key() + "'");
    }
  }
}

const json& require_field(const json& j, const char* name, const char* ctx) {
  const auto it = j.find(name);
  if (it == j.end()) {
    throw SchemaError(std::string(ctx) + ": missing field '" + name + "'");
  }
  return *it;
}

double as_number(const json& j, const char* name, const char* ctx) {
  if (!j.is_number()) {
    throw SchemaError(std::string(ctx) + ": field '" + name + "' must be a number");
  }
  return j.get<double>();
}

double number_field(const json& j, const char* name, const char* ctx) {
  return as_number(require_field(j, name, ctx), name, ctx);
}

double number_field_or(const json& j, const char* name, const char* ctx, double fallback) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  return as_number(*it, name, ctx);
}

long integer_field(const json& j, const char* name, const char* ctx) {
  const json& f = require_field(j, name, ctx);
  if (!f.is_number_integer()) {
    throw SchemaError(std::string(ctx) + ": field '" + name + "' must be an integer");
  }
  return f.get<long>();
}

std::string string_field(const json& j, const char* name, const char* ctx) {
  const json& f = require_field(j, name, ctx);
  if (!f.is_string()) {
    throw SchemaError(std::string(ctx) + ": field '" + name + "' must be a string");
  }
  return f.get<std::string>();
}

Table table_from_json(const json& j, const char* name, const char* ctx) {
  if (!j.is_array() || j.empty()) {
    throw SchemaError(std::string(ctx) + ": field '" + name + "' must be a non-empty array");
  }
  const auto rows = static_cast<int>(j.size());
  if (!j[0].is_array() || j[0].empty()) {
    throw SchemaError(std::string(ctx) + ": field '" + name + "' must hold rows of numbers");
  }
  const auto cols = static_cast<int>(j[0].size());
  Table t(rows, cols);
  for (int x = 0; x < rows; ++x) {
    if (!j[x].is_array() || static_cast<int>(j[x].size()) != cols) {
      throw SchemaError(std::string(ctx) + ": field '" + name + "' has ragged rows");
    }
    for (int a = 0; a < cols; ++a) {
      t.at(x, a) = as_number(j[x][a], name, ctx);
    }
  }
  return t;
}

void append_row(std::string& out, std::span<const double> row) {
  out += '[';
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += format_double(row[i]);
  }
  out += ']';
}

void append_table(std::string& out, const Table& t) {
  out += '[';
  for (int x = 0; x < t.prompts(); ++x) {
    if (x) out += ',';
    append_row(out, t.row(x));
  }
  out += ']';
}

DivergenceKind divergence_from_json(const json& j, const char* ctx) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "KL") return DivergenceKind::kl();
    if (name == "CHI2") return DivergenceKind::chi2();
    throw SchemaError(std::string(ctx) + ": divergence '" + name +
                      "' needs the object form to carry gamma");
  }
  if (!j.is_object()) {
    throw SchemaError(std::string(ctx) + ": field 'divergence' must be a string or object");
  }
  reject_unknown(j, {"tag", "gamma"}, ctx);
  const auto tag = string_field(j, "tag", ctx);
  if (tag == "KL") return DivergenceKind::kl();
  if (tag == "CHI2") return DivergenceKind::chi2();
  if (tag == "KL_PLUS_GAMMA_CHI2") {
    return DivergenceKind::kl_plus_chi2(number_field(j, "gamma", ctx));
  }
  throw SchemaError(std::string(ctx) + ": unknown divergence tag '" + tag + "'");
}

std::string divergence_to_json(const DivergenceKind& kind) {
  switch (kind.tag) {
    case DivergenceKind::Tag::kKl:
      return "\"KL\"";
    case DivergenceKind::Tag::kChi2:
      return "\"CHI2\"";
    case DivergenceKind::Tag::kKlPlusGammaChi2:
      return std::string("{\"tag\":\"KL_PLUS_GAMMA_CHI2\",\"gamma\":") +
             format_double(kind.gamma) + "}";
  }
  return "\"KL\"";
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string environment_to_json(const Environment& env) {
  std::string out = "{\n";
  out += "\"num_prompts\":" + std::to_string(env.prompts()) + ",\n";
  out += "\"num_responses\":" + std::to_string(env.responses()) + ",\n";
  out += "\"nu0\":";
  append_row(out, std::span<const double>(env.nu0.weights));
  out += ",\n\"r_min\":" + format_double(env.r_star.r_min);
  out += ",\n\"r_max\":" + format_double(env.r_star.r_max);
  out += ",\n\"r_star\":";
  append_table(out, env.r_star.values);
  out += ",\n\"pi_data_logits\":";
  append_table(out, env.pi_data.logits());
  out += ",\n\"pi_ref_logits\":";
  append_table(out, env.pi_ref.logits());
  out += "\n}\n";
  return out;
}

Environment environment_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "environment");
  reject_unknown(j,
                 {"num_prompts", "num_responses", "nu0", "r_min", "r_max", "r_star",
                  "pi_data_logits", "pi_ref_logits"},
                 "environment");
  const long prompts = integer_field(j, "num_prompts", "environment");
  const long responses = integer_field(j, "num_responses", "environment");
  Environment env;
  const json& nu = require_field(j, "nu0", "environment");
  if (!nu.is_array() || static_cast<long>(nu.size()) != prompts) {
    throw SchemaError("environment: field 'nu0' must be an array of num_prompts weights");
  }
  for (const auto& w : nu) env.nu0.weights.push_back(as_number(w, "nu0", "environment"));
  env.r_star.r_min = number_field(j, "r_min", "environment");
  env.r_star.r_max = number_field(j, "r_max", "environment");
  env.r_star.values = table_from_json(require_field(j, "r_star", "environment"), "r_star",
                                      "environment");
  env.pi_data = SoftmaxPolicy(table_from_json(require_field(j, "pi_data_logits", "environment"),
                                              "pi_data_logits", "environment"));
  env.pi_ref = SoftmaxPolicy(table_from_json(require_field(j, "pi_ref_logits", "environment"),
                                             "pi_ref_logits", "environment"));
  if (env.r_star.prompts() != prompts || env.r_star.responses() != responses) {
    throw SchemaError("environment: field 'r_star' shape disagrees with the declared counts");
  }
  env.validate();
  return env;
}

std::string dataset_to_jsonl(const Dataset& ds) {
  std::string out = "{\"seed\":" + std::to_string(ds.seed) +
                    ",\"count\":" + std::to_string(ds.size()) + "}\n";
  for (const auto& e : ds.examples) {
    out += "{\"prompt\":" + std::to_string(e.prompt) +
           ",\"chosen\":" + std::to_string(e.chosen) +
           ",\"rejected\":" + std::to_string(e.rejected) +
           ",\"z\":" + std::to_string(static_cast<int>(e.z)) + ",\"rating_gap\":";
    out += e.has_rating ? format_double(e.rating_gap) : "null";
    out += "}\n";
  }
  return out;
}

Dataset dataset_from_jsonl(const std::string& text) {
  Dataset ds;
  std::istringstream stream(text);
  std::string line;
  bool saw_header = false;
  long declared = -1;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_or_throw(line, "dataset");
    if (!saw_header && !j.contains("prompt")) {
      reject_unknown(j, {"seed", "count"}, "dataset header");
      saw_header = true;
      ds.seed = static_cast<std::uint64_t>(integer_field(j, "seed", "dataset header"));
      declared = integer_field(j, "count", "dataset header");
      continue;
    }
    saw_header = true;
    reject_unknown(j, {"prompt", "chosen", "rejected", "z", "rating_gap"}, "dataset record");
    PreferenceExample e;
    e.prompt = static_cast<std::int32_t>(integer_field(j, "prompt", "dataset record"));
    e.chosen = static_cast<std::int32_t>(integer_field(j, "chosen", "dataset record"));
    e.rejected = static_cast<std::int32_t>(integer_field(j, "rejected", "dataset record"));
    const long z = integer_field(j, "z", "dataset record");
    if (z != 0 && z != 1) {
      throw SchemaError("dataset record: field 'z' must be 0 or 1 (line " +
                        std::to_string(line_no) + ")");
    }
    e.z = static_cast<std::int8_t>(z);
    const json& gap = require_field(j, "rating_gap", "dataset record");
    if (gap.is_null()) {
      e.has_rating = false;
    } else {
      e.has_rating = true;
      e.rating_gap = as_number(gap, "rating_gap", "dataset record");
    }
    ds.examples.push_back(e);
  }
  if (declared >= 0 && declared != static_cast<long>(ds.size())) {
    throw SchemaError("dataset: header count disagrees with the number of records");
  }
  return ds;
}

std::string algorithm_spec_to_json(const AlgorithmSpec& spec) {
  std::string out = "{";
  out += "\"family\":\"" + std::string(to_string(spec.family)) + "\"";
  out += ",\"beta\":" + format_double(spec.beta);
  out += ",\"beta1\":" + format_double(spec.beta1);
  out += ",\"variance\":" + format_double(spec.variance);
  out += ",\"divergence\":" + divergence_to_json(spec.divergence);
  out += ",\"lambda1\":" + format_double(spec.lambda1);
  out += ",\"lambda2\":" + format_double(spec.lambda2);
  out += ",\"delta_max\":" + format_double(spec.delta_max);
  out += "}";
  return out;
}

AlgorithmSpec algorithm_spec_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "AlgorithmSpec");
  if (!j.is_object()) throw SchemaError("AlgorithmSpec: expected a JSON object");
  reject_unknown(j,
                 {"family", "beta", "beta1", "variance", "divergence", "lambda1",
                  "lambda2", "delta_max"},
                 "AlgorithmSpec");
  AlgorithmSpec spec;
  spec.family = loss_family_from_string(string_field(j, "family", "AlgorithmSpec"));
  spec.beta = number_field_or(j, "beta", "AlgorithmSpec", spec.beta);
  spec.beta1 = number_field_or(j, "beta1", "AlgorithmSpec", spec.beta1);
  spec.variance = number_field_or(j, "variance", "AlgorithmSpec", spec.variance);
  if (j.contains("divergence")) {
    spec.divergence = divergence_from_json(j["divergence"], "AlgorithmSpec");
  }
  spec.lambda1 = number_field_or(j, "lambda1", "AlgorithmSpec", spec.lambda1);
  spec.lambda2 = number_field_or(j, "lambda2", "AlgorithmSpec", spec.lambda2);
  spec.delta_max = number_field_or(j, "delta_max", "AlgorithmSpec", spec.delta_max);
  spec.validate();
  return spec;
}

std::string policy_to_json(const SoftmaxPolicy& policy) {
  std::string out = "{\n";
  out += "\"num_prompts\":" + std::to_string(policy.prompts()) + ",\n";
  out += "\"num_responses\":" + std::to_string(policy.responses()) + ",\n";
  out += "\"logits\":";
  append_table(out, policy.logits());
  out += "\n}\n";
  return out;
}

SoftmaxPolicy policy_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "policy");
  reject_unknown(j, {"num_prompts", "num_responses", "logits"}, "policy");
  const long prompts = integer_field(j, "num_prompts", "policy");
  const long responses = integer_field(j, "num_responses", "policy");
  Table logits = table_from_json(require_field(j, "logits", "policy"), "logits", "policy");
  if (logits.prompts() != prompts || logits.responses() != responses) {
    throw SchemaError("policy: field 'logits' shape disagrees with the declared counts");
  }
  return SoftmaxPolicy(std::move(logits));
}

std::string rating_model_to_json(const RatingModel& rating) {
  switch (rating.mode) {
    case RatingModel::Mode::kExact:
      return "{\"mode\":\"EXACT\"}";
    case RatingModel::Mode::kGaussian:
      return "{\"mode\":\"GAUSSIAN\",\"variance\":" + format_double(rating.variance) + "}";
    case RatingModel::Mode::kBiased: {
      std::string out = "{\"mode\":\"BIASED\",\"r_min\":" +
                        format_double(rating.biased_table.r_min) +
                        ",\"r_max\":" + format_double(rating.biased_table.r_max) +
                        ",\"table\":";
      append_table(out, rating.biased_table.values);
      out += "}";
      return out;
    }
  }
  return "{}";
}

RatingModel rating_model_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "rating model");
  reject_unknown(j, {"mode", "variance", "table", "r_min", "r_max"}, "rating model");
  const auto mode = string_field(j, "mode", "rating model");
  if (mode == "EXACT") return RatingModel::exact();
  if (mode == "GAUSSIAN") {
    return RatingModel::gaussian(number_field(j, "variance", "rating model"));
  }
  if (mode == "BIASED") {
    RewardTable table;
    table.values = table_from_json(require_field(j, "table", "rating model"), "table",
                                   "rating model");
    table.r_min = number_field_or(j, "r_min", "rating model", 0.0);
    table.r_max = number_field_or(j, "r_max", "rating model", 0.0);
    return RatingModel::biased(std::move(table));
  }
  throw SchemaError("rating model: unknown mode '" + mode + "'");
}

std::string train_config_to_json(const TrainConfig& cfg) {
  std::string out = "{";
  out += "\"learning_rate\":" + format_double(cfg.learning_rate);
  out += ",\"steps\":" + std::to_string(cfg.steps);
  out += ",\"seed\":" + std::to_string(cfg.seed);
  out += std::string(",\"mode\":\"") +
         (cfg.mode == TrainMode::kEmpirical ? "EMPIRICAL" : "POPULATION") + "\"";
  out += ",\"log_every\":" + std::to_string(cfg.log_every);
  if (cfg.init_logits) {
    out += ",\"init\":{\"logits\":";
    append_table(out, *cfg.init_logits);
    out += "}";
  } else {
    out += ",\"init\":\"FROM_REF\"";
  }
  out += ",\"grad_clip\":";
  out += cfg.grad_clip ? format_double(*cfg.grad_clip) : "null";
  out += "}";
  return out;
}

TrainConfig train_config_from_json(const std::string& text) {
  const json j = parse_or_throw(text, "train config");
  reject_unknown(j, {"learning_rate", "steps", "seed", "mode", "log_every", "init",
                     "grad_clip"},
                 "train config");
  TrainConfig cfg;
  cfg.learning_rate = number_field_or(j, "learning_rate", "train config", cfg.learning_rate);
  if (j.contains("steps")) cfg.steps = integer_field(j, "steps", "train config");
  if (j.contains("seed")) {
    cfg.seed = static_cast<std::uint64_t>(integer_field(j, "seed", "train config"));
  }
  if (j.contains("mode")) {
    const auto mode = string_field(j, "mode", "train config");
    if (mode == "EMPIRICAL") {
      cfg.mode = TrainMode::kEmpirical;
    } else if (mode == "POPULATION") {
      cfg.mode = TrainMode::kPopulation;
    } else {
      throw SchemaError("train config: unknown mode '" + mode + "'");
    }
  }
  if (j.contains("log_every")) cfg.log_every = integer_field(j, "log_every", "train config");
  if (j.contains("init") && !j["init"].is_null()) {
    const json& init = j["init"];
    if (init.is_string()) {
      if (init.get<std::string>() != "FROM_REF") {
        throw SchemaError("train config: init must be \"FROM_REF\" or {\"logits\":[[..]]}");
      }
    } else if (init.is_object()) {
      reject_unknown(init, {"logits"}, "train config init");
      cfg.init_logits = table_from_json(require_field(init, "logits", "train config init"),
                                        "logits", "train config init");
    } else {
      throw SchemaError("train config: init must be \"FROM_REF\" or {\"logits\":[[..]]}");
    }
  }
  if (j.contains("grad_clip") && !j["grad_clip"].is_null()) {
    cfg.grad_clip = number_field(j, "grad_clip", "train config");
  }
  cfg.validate();
  return cfg;
}

std::string trace_to_csv(const TrainTrace& trace) {
  std::string out = "step,loss,grad_norm,subopt_gap,kl_to_ref\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.step);
    out += ',' + format_double(r.loss);
    out += ',' + format_double(r.grad_norm);
    out += ',' + format_double(r.subopt_gap);
    out += ',' + format_double(r.kl_to_ref);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

}  // namespace ratelab
