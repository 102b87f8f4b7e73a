#include "ratelab/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ratelab/errors.hpp"
#include "ratelab/rng.hpp"
#include "ratelab/serialize.hpp"

namespace ratelab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::size_t dataset_size_for(const SweepPlan& plan, std::size_t point_index) {
  if (plan.kind == SweepKind::kAcceleration) {
    return static_cast<std::size_t>(plan.grid[point_index]);
  }
  return plan.dataset_size;
}

RunResult execute_run(const SweepPlan& plan, const Environment& env,
                      std::size_t point_index, std::size_t algo_index,
                      const std::string& label, std::uint64_t seed) {
  RunResult row;
  row.point_index = point_index;
  row.point = plan.grid[point_index];
  row.algorithm = label;
  row.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    AlgorithmSpec spec = plan.algorithms[algo_index];
    if (plan.kind == SweepKind::kAblationBeta1) spec.beta1 = row.point;
    if (plan.kind == SweepKind::kAblationVariance) spec.variance = row.point;

    // One stream per (seed, point): datasets are shared across algorithms
    // for paired comparisons, and single seeds can be re-run in isolation.
    Rng point_stream = Rng(seed).split(point_index);
    const std::uint64_t data_seed = point_stream.next_u64();
    const std::uint64_t corrupt_seed = point_stream.next_u64();

    Dataset ds = sample_dataset(env, dataset_size_for(plan, point_index), plan.rating,
                                data_seed);
    switch (plan.kind) {
      case SweepKind::kRobustSwap:
        ds = corrupt_swap(ds, row.point, corrupt_seed);
        break;
      case SweepKind::kRobustNoise:
        ds = corrupt_noise(ds, row.point, corrupt_seed);
        break;
      case SweepKind::kMissingRatings:
        ds = mask_ratings(ds, row.point, corrupt_seed);
        break;
      default:
        break;
    }

    const TrainResult trained = train(spec, env, ds, plan.train);
    row.gap = suboptimality_gap(trained.policy, env, spec.beta_eff());
    row.final_loss = trained.trace.records.back().loss;

    BoundParams params = plan.bounds;
    params.r_max = env.r_star.r_max;
    params.n = ds.size();
    const double err_hat = empirical_rating_error(ds, env);
    const SoftmaxPolicy best = optimal_policy(env.r_star, spec.beta_eff(), env.pi_ref,
                                              env.nu0);
    const SoftmaxPolicy proxies[] = {best, trained.policy};
    const double c_conc = c_max(proxies, env);
    row.bounds = rate_bounds(params, err_hat, spec.variance, c_conc, spec.beta);
    row.ok = true;
  } catch (const std::exception& ex) {
    row.ok = false;
    row.error = ex.what();
    row.gap = kNan;
    row.final_loss = kNan;
    row.bounds = {kNan, kNan, kNan, kNan};
  }
  row.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

const char* to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kAcceleration: return "ACCELERATION";
    case SweepKind::kRobustSwap: return "ROBUST_SWAP";
    case SweepKind::kRobustNoise: return "ROBUST_NOISE";
    case SweepKind::kAblationBeta1: return "ABLATION_BETA1";
    case SweepKind::kAblationVariance: return "ABLATION_VARIANCE";
    case SweepKind::kMissingRatings: return "MISSING_RATINGS";
  }
  return "?";
}

SweepKind sweep_kind_from_string(std::string_view name) {
  if (name == "ACCELERATION") return SweepKind::kAcceleration;
  if (name == "ROBUST_SWAP") return SweepKind::kRobustSwap;
  if (name == "ROBUST_NOISE") return SweepKind::kRobustNoise;
  if (name == "ABLATION_BETA1") return SweepKind::kAblationBeta1;
  if (name == "ABLATION_VARIANCE") return SweepKind::kAblationVariance;
  if (name == "MISSING_RATINGS") return SweepKind::kMissingRatings;
  throw SchemaError("sweep plan: unknown kind '" + std::string(name) + "'");
}

void SweepPlan::validate() const {
  if (grid.empty()) throw std::invalid_argument("SweepPlan: empty grid");
  if (algorithms.empty()) throw std::invalid_argument("SweepPlan: no algorithms");
  if (seeds.empty()) throw std::invalid_argument("SweepPlan: no seeds");
  for (const auto& spec : algorithms) spec.validate();
  train.validate();
  rating.validate();
  for (double point : grid) {
    switch (kind) {
      case SweepKind::kAcceleration:
        if (!(point >= 1.0) || point != std::floor(point)) {
          throw std::invalid_argument("SweepPlan: ACCELERATION grid must hold integers >= 1");
        }
        break;
      case SweepKind::kRobustSwap:
      case SweepKind::kMissingRatings:
        if (!(point >= 0.0 && point <= 1.0)) {
          throw std::invalid_argument("SweepPlan: grid values must be in [0,1]");
        }
        break;
      case SweepKind::kRobustNoise:
        if (!(point >= 0.0)) {
          throw std::invalid_argument("SweepPlan: noise variances must be >= 0");
        }
        break;
      case SweepKind::kAblationBeta1:
      case SweepKind::kAblationVariance:
        if (!(point > 0.0)) {
          throw std::invalid_argument("SweepPlan: ablation values must be positive");
        }
        break;
    }
  }
  if (kind != SweepKind::kAcceleration && dataset_size == 0) {
    throw std::invalid_argument("SweepPlan: dataset_size must be >= 1");
  }
}

std::vector<std::string> algorithm_labels(const SweepPlan& plan) {
  std::map<std::string, int> family_count;
  for (const auto& spec : plan.algorithms) {
    ++family_count[to_string(spec.family)];
  }
  std::vector<std::string> labels;
  labels.reserve(plan.algorithms.size());
  std::map<std::string, int> seen;
  for (const auto& spec : plan.algorithms) {
    std::string label = to_string(spec.family);
    if (family_count[label] > 1) {
      if (spec.uses_beta1()) {
        label += "(beta1=" + short_number(spec.beta1) + ")";
      } else if (spec.uses_variance()) {
        label += "(V=" + short_number(spec.variance) + ")";
      }
    }
    const int dup = seen[label]++;
    if (dup > 0) label += "#" + std::to_string(dup + 1);
    labels.push_back(label);
  }
  return labels;
}

SweepResult run_sweep(const SweepPlan& plan, int threads) {
  plan.validate();
  const Environment env = make_environment(plan.env);
  const std::vector<std::string> labels = algorithm_labels(plan);

  struct Task {
    std::size_t point;
    std::size_t algo;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  tasks.reserve(plan.grid.size() * plan.algorithms.size() * plan.seeds.size());
  for (std::size_t p = 0; p < plan.grid.size(); ++p) {
    for (std::size_t a = 0; a < plan.algorithms.size(); ++a) {
      for (std::size_t s = 0; s < plan.seeds.size(); ++s) {
        tasks.push_back({p, a, s});
      }
    }
  }

  SweepResult result;
  result.kind = plan.kind;
  result.rows.resize(tasks.size());

  int workers = threads;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 0) workers = 1;
    workers = std::min(workers, 8);
  }
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));

  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      result.rows[i] = execute_run(plan, env, t.point, t.algo, labels[t.algo],
                                   plan.seeds[t.seed_index]);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return result;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out =
      "kind,point,algorithm,seed,gap,final_loss,wall_time_s,err_dpo,rdpo_bound,"
      "mlrdpo_bound,beta1_prescribed,error\n";
  for (const auto& r : result.rows) {
    out += to_string(result.kind);
    out += ',' + format_double(r.point);
    out += ',' + csv_quote(r.algorithm);
    out += ',' + std::to_string(r.seed);
    out += ',' + format_double(r.gap);
    out += ',' + format_double(r.final_loss);
    out += ',' + format_double(r.wall_time_s);
    out += ',' + format_double(r.bounds.err_dpo);
    out += ',' + format_double(r.bounds.rdpo_bound);
    out += ',' + format_double(r.bounds.mlrdpo_bound);
    out += ',' + format_double(r.bounds.beta1_prescribed);
    out += ',' + csv_quote(r.error);
    out += '\n';
  }
  return out;
}

std::string sweep_aggregates_json(const SweepResult& result) {
  struct Cell {
    double point = 0.0;
    std::string algorithm;
    std::vector<double> gaps;
    std::vector<double> losses;
    int errors = 0;
  };
  std::map<std::pair<std::size_t, std::string>, Cell> cells;
  for (const auto& r : result.rows) {
    auto& cell = cells[{r.point_index, r.algorithm}];
    cell.point = r.point;
    cell.algorithm = r.algorithm;
    if (r.ok) {
      cell.gaps.push_back(r.gap);
      cell.losses.push_back(r.final_loss);
    } else {
      ++cell.errors;
    }
  }
  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? kNan : s / static_cast<double>(v.size());
  };
  const auto std_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return v.empty() ? kNan : 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  const auto number_or_null = [](double v) {
    return std::isfinite(v) ? format_double(v) : std::string("null");
  };

  std::string out = "{\n\"kind\":\"" + std::string(to_string(result.kind)) + "\",\n";
  out += "\"cells\":[\n";
  bool first = true;
  for (const auto& [key, cell] : cells) {
    if (!first) out += ",\n";
    first = false;
    out += "{\"point\":" + format_double(cell.point);
    out += ",\"algorithm\":\"" + cell.algorithm + "\"";
    out += ",\"count\":" + std::to_string(cell.gaps.size());
    out += ",\"errors\":" + std::to_string(cell.errors);
    out += ",\"gap_mean\":" + number_or_null(mean_of(cell.gaps));
    out += ",\"gap_std\":" + number_or_null(std_of(cell.gaps));
    out += ",\"final_loss_mean\":" + number_or_null(mean_of(cell.losses));
    out += ",\"final_loss_std\":" + number_or_null(std_of(cell.losses));
    out += "}";
  }
  out += "\n]\n}\n";
  return out;
}

std::string sweep_plan_to_json(const SweepPlan& plan) {
  std::string out = "{\n";
  out += "\"kind\":\"" + std::string(to_string(plan.kind)) + "\",\n";
  out += "\"grid\":[";
  for (std::size_t i = 0; i < plan.grid.size(); ++i) {
    if (i) out += ',';
    out += format_double(plan.grid[i]);
  }
  out += "],\n\"algorithms\":[";
  for (std::size_t i = 0; i < plan.algorithms.size(); ++i) {
    if (i) out += ',';
    out += algorithm_spec_to_json(plan.algorithms[i]);
  }
  out += "],\n\"seeds\":[";
  for (std::size_t i = 0; i < plan.seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(plan.seeds[i]);
  }
  out += "],\n\"env\":{\"num_prompts\":" + std::to_string(plan.env.num_prompts);
  out += ",\"num_responses\":" + std::to_string(plan.env.num_responses);
  out += ",\"r_max\":" + format_double(plan.env.r_max);
  out += ",\"reward_seed\":" + std::to_string(plan.env.reward_seed) + "},\n";
  out += "\"n\":" + std::to_string(plan.dataset_size) + ",\n";
  out += "\"rating\":" + rating_model_to_json(plan.rating) + ",\n";
  out += "\"train\":" + train_config_to_json(plan.train) + ",\n";
  out += "\"bounds\":{\"c\":" + format_double(plan.bounds.c);
  out += ",\"delta\":" + format_double(plan.bounds.delta);
  out += ",\"policy_class_size\":" + format_double(plan.bounds.policy_class_size) + "}\n";
  out += "}\n";
  return out;
}

SweepPlan sweep_plan_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw SchemaError("sweep plan: malformed JSON");
  if (!j.is_object()) throw SchemaError("sweep plan: expected a JSON object");
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "kind" && k != "grid" && k != "algorithms" && k != "seeds" && k != "env" &&
        k != "n" && k != "rating" && k != "train" && k != "bounds") {
      throw SchemaError("sweep plan: unknown field '" + k + "'");
    }
  }
  SweepPlan plan;
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw SchemaError("sweep plan: missing string field 'kind'");
  }
  plan.kind = sweep_kind_from_string(j["kind"].get<std::string>());
  if (!j.contains("grid") || !j["grid"].is_array() || j["grid"].empty()) {
    throw SchemaError("sweep plan: missing non-empty array field 'grid'");
  }
  for (const auto& v : j["grid"]) {
    if (!v.is_number()) throw SchemaError("sweep plan: grid entries must be numbers");
    plan.grid.push_back(v.get<double>());
  }
  if (!j.contains("algorithms") || !j["algorithms"].is_array() || j["algorithms"].empty()) {
    throw SchemaError("sweep plan: missing non-empty array field 'algorithms'");
  }
  for (const auto& a : j["algorithms"]) {
    plan.algorithms.push_back(algorithm_spec_from_json(a.dump()));
  }
  if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty()) {
    throw SchemaError("sweep plan: missing non-empty array field 'seeds'");
  }
  for (const auto& s : j["seeds"]) {
    if (!s.is_number_integer()) throw SchemaError("sweep plan: seeds must be integers");
    plan.seeds.push_back(s.get<std::uint64_t>());
  }
  if (j.contains("env")) {
    const auto& e = j["env"];
    if (!e.is_object()) throw SchemaError("sweep plan: field 'env' must be an object");
    for (const auto& item : e.items()) {
      const std::string& k = item.key();
      if (k != "num_prompts" && k != "num_responses" && k != "r_max" && k != "reward_seed") {
        throw SchemaError("sweep plan env: unknown field '" + k + "'");
      }
    }
    if (e.contains("num_prompts")) plan.env.num_prompts = e["num_prompts"].get<int>();
    if (e.contains("num_responses")) plan.env.num_responses = e["num_responses"].get<int>();
    if (e.contains("r_max")) plan.env.r_max = e["r_max"].get<double>();
    if (e.contains("reward_seed")) plan.env.reward_seed = e["reward_seed"].get<std::uint64_t>();
  }
  if (j.contains("n")) plan.dataset_size = j["n"].get<std::size_t>();
  if (j.contains("rating")) plan.rating = rating_model_from_json(j["rating"].dump());
  if (j.contains("train")) plan.train = train_config_from_json(j["train"].dump());
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    if (!b.is_object()) throw SchemaError("sweep plan: field 'bounds' must be an object");
    for (const auto& item : b.items()) {
      const std::string& k = item.key();
      if (k != "c" && k != "delta" && k != "policy_class_size") {
        throw SchemaError("sweep plan bounds: unknown field '" + k + "'");
      }
    }
    if (b.contains("c")) plan.bounds.c = b["c"].get<double>();
    if (b.contains("delta")) plan.bounds.delta = b["delta"].get<double>();
    if (b.contains("policy_class_size")) {
      plan.bounds.policy_class_size = b["policy_class_size"].get<double>();
    }
  }
  plan.validate();
  return plan;
}

}  // namespace ratelab
