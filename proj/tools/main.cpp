#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "ratelab/env.hpp"
#include "ratelab/errors.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/oracle.hpp"
#include "ratelab/rng.hpp"
#include "ratelab/serialize.hpp"
#include "ratelab/sweep.hpp"
#include "ratelab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ratelab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ratelab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ratelab::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const ratelab::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

json parse_json_file(const fs::path& path, const char* ctx) {
  const std::string text = ratelab::read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ratelab::SchemaError(std::string(ctx) + ": malformed JSON in " + path.string());
  }
  return j;
}

ratelab::EnvSpec env_spec_from_json(const json& j) {
  ratelab::EnvSpec spec;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "num_prompts" && k != "num_responses" && k != "r_max" && k != "reward_seed") {
      throw ratelab::SchemaError("env spec: unknown field '" + k + "'");
    }
  }
  if (j.contains("num_prompts")) spec.num_prompts = j["num_prompts"].get<int>();
  if (j.contains("num_responses")) spec.num_responses = j["num_responses"].get<int>();
  if (j.contains("r_max")) spec.r_max = j["r_max"].get<double>();
  if (j.contains("reward_seed")) spec.reward_seed = j["reward_seed"].get<std::uint64_t>();
  return spec;
}

ratelab::CorruptionSpec corruption_from_json(const json& j) {
  ratelab::CorruptionSpec c;
  for (const auto& item : j.items()) {
    const std::string& k = item.key();
    if (k != "swap_fraction" && k != "noise_variance" && k != "rating_obs_prob") {
      throw ratelab::SchemaError("corruption: unknown field '" + k + "'");
    }
  }
  if (j.contains("swap_fraction")) c.swap_fraction = j["swap_fraction"].get<double>();
  if (j.contains("noise_variance")) c.noise_variance = j["noise_variance"].get<double>();
  if (j.contains("rating_obs_prob")) c.rating_obs_prob = j["rating_obs_prob"].get<double>();
  c.validate();
  return c;
}

struct GenerateArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
};

int cmd_generate(const GenerateArgs& args) {
  ratelab::EnvSpec env_spec;
  std::size_t n = 1000;
  ratelab::RatingModel rating;
  ratelab::CorruptionSpec corruption;
  std::uint64_t seed = 0;
  if (!args.config_path.empty()) {
    const json j = parse_json_file(args.config_path, "generate config");
    for (const auto& item : j.items()) {
      const std::string& k = item.key();
      if (k != "env" && k != "n" && k != "rating" && k != "corruption" && k != "seed") {
        throw ratelab::SchemaError("generate config: unknown field '" + k + "'");
      }
    }
    if (j.contains("env")) env_spec = env_spec_from_json(j["env"]);
    if (j.contains("n")) n = j["n"].get<std::size_t>();
    if (j.contains("rating")) rating = ratelab::rating_model_from_json(j["rating"].dump());
    if (j.contains("corruption")) corruption = corruption_from_json(j["corruption"]);
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
  }
  if (args.seed_override) seed = *args.seed_override;

  const ratelab::Environment env = ratelab::make_environment(env_spec);
  ratelab::Dataset ds = ratelab::sample_dataset(env, n, rating, seed);
  ds = ratelab::apply_corruption(ds, corruption, seed);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  ratelab::write_text_file(out / "env.json", ratelab::environment_to_json(env));
  ratelab::write_text_file(out / "dataset.jsonl", ratelab::dataset_to_jsonl(ds));

  const double rated_fraction =
      static_cast<double>(ds.rated_count()) / static_cast<double>(ds.size());
  const double err = ratelab::empirical_rating_error(ds, env);
  std::cout << "n=" << ds.size() << " rated_fraction=" << ratelab::format_double(rated_fraction)
            << " empirical_err_rating=" << ratelab::format_double(err) << "\n";
  std::cout << "wrote " << (out / "env.json").string() << " and "
            << (out / "dataset.jsonl").string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string env_path;
  std::string spec_path;
  std::string data_path;
  std::string rating_path;
  std::string config_path;
  std::string out_dir;
};

int cmd_train(const TrainArgs& args) {
  const ratelab::Environment env =
      ratelab::environment_from_json(ratelab::read_text_file(args.env_path));
  const ratelab::AlgorithmSpec spec =
      ratelab::algorithm_spec_from_json(ratelab::read_text_file(args.spec_path));
  ratelab::TrainConfig cfg;
  if (!args.config_path.empty()) {
    cfg = ratelab::train_config_from_json(ratelab::read_text_file(args.config_path));
  }

  ratelab::TrainResult result;
  if (cfg.mode == ratelab::TrainMode::kEmpirical) {
    if (args.data_path.empty()) {
      throw ratelab::SchemaError("train: EMPIRICAL mode needs --data");
    }
    const ratelab::Dataset ds =
        ratelab::dataset_from_jsonl(ratelab::read_text_file(args.data_path));
    result = ratelab::train(spec, env, ds, cfg);
  } else {
    ratelab::RatingModel rating;
    if (!args.rating_path.empty()) {
      rating = ratelab::rating_model_from_json(ratelab::read_text_file(args.rating_path));
    }
    result = ratelab::train(spec, env, rating, cfg);
  }

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  ratelab::write_text_file(out / "policy.json", ratelab::policy_to_json(result.policy));
  ratelab::write_text_file(out / "trace.csv", ratelab::trace_to_csv(result.trace));
  const auto& last = result.trace.records.back();
  std::cout << "final step=" << last.step << " loss=" << ratelab::format_double(last.loss)
            << " grad_norm=" << ratelab::format_double(last.grad_norm)
            << " subopt_gap=" << ratelab::format_double(last.subopt_gap)
            << " kl_to_ref=" << ratelab::format_double(last.kl_to_ref) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string env_path;
  std::string policy_path;
  std::string spec_path;
  std::string data_path;
  std::optional<double> beta_eff;
  std::string out_path;
};

int cmd_eval(const EvalArgs& args) {
  const ratelab::Environment env =
      ratelab::environment_from_json(ratelab::read_text_file(args.env_path));
  const ratelab::SoftmaxPolicy policy =
      ratelab::policy_from_json(ratelab::read_text_file(args.policy_path));

  std::optional<ratelab::AlgorithmSpec> spec;
  if (!args.spec_path.empty()) {
    spec = ratelab::algorithm_spec_from_json(ratelab::read_text_file(args.spec_path));
  }
  double beta_eff = 0.1;
  if (args.beta_eff) {
    beta_eff = *args.beta_eff;
  } else if (spec) {
    beta_eff = spec->beta_eff();
  }

  const double gap = ratelab::suboptimality_gap(policy, env, beta_eff);
  const double kl = ratelab::kl_divergence(policy, env.pi_ref, env.nu0);
  const double conc = ratelab::concentrability(policy, env);
  const ratelab::Table probs = policy.probs();
  double expected_reward = 0.0;
  for (int x = 0; x < env.prompts(); ++x) {
    double row = 0.0;
    for (int a = 0; a < env.responses(); ++a) {
      row += probs.at(x, a) * env.r_star.values.at(x, a);
    }
    expected_reward += env.nu0.weights[static_cast<std::size_t>(x)] * row;
  }

  std::string out = "{\n";
  out += "\"beta_eff\":" + ratelab::format_double(beta_eff) + ",\n";
  out += "\"subopt_gap\":" + ratelab::format_double(gap) + ",\n";
  out += "\"kl_to_ref\":" + ratelab::format_double(kl) + ",\n";
  out += "\"expected_reward\":" + ratelab::format_double(expected_reward) + ",\n";
  out += "\"concentrability\":" + ratelab::format_double(conc);
  if (spec && !args.data_path.empty()) {
    const ratelab::Dataset ds =
        ratelab::dataset_from_jsonl(ratelab::read_text_file(args.data_path));
    out += ",\n\"loss\":" + ratelab::format_double(ratelab::loss(*spec, policy, env, ds));
  }
  out += "\n}\n";
  if (!args.out_path.empty()) {
    ratelab::write_text_file(args.out_path, out);
  }
  std::cout << out;
  return kExitOk;
}

struct SweepArgs {
  std::string plan_path;
  std::string out_dir;
  int threads = 0;
};

int cmd_sweep(const SweepArgs& args) {
  const ratelab::SweepPlan plan =
      ratelab::sweep_plan_from_json(ratelab::read_text_file(args.plan_path));
  const ratelab::SweepResult result = ratelab::run_sweep(plan, args.threads);

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  ratelab::write_text_file(out / "results.csv", ratelab::sweep_csv(result));
  ratelab::write_text_file(out / "aggregates.json", ratelab::sweep_aggregates_json(result));

  // failed runs are recorded as rows; a completed sweep is a success
  std::size_t failures = 0;
  for (const auto& row : result.rows) failures += row.ok ? 0 : 1;
  std::cout << "rows=" << result.rows.size() << " failures=" << failures << "\n";
  std::cout << "wrote " << (out / "results.csv").string() << " and "
            << (out / "aggregates.json").string() << "\n";
  return kExitOk;
}

struct GradcheckArgs {
  std::string spec_path;
  std::uint64_t seed = 0;
  std::size_t n = 64;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const ratelab::AlgorithmSpec spec =
      ratelab::algorithm_spec_from_json(ratelab::read_text_file(args.spec_path));
  ratelab::EnvSpec env_spec;
  env_spec.reward_seed = args.seed;
  const ratelab::Environment env = ratelab::make_environment(env_spec);
  const ratelab::Dataset ds =
      ratelab::sample_dataset(env, args.n, ratelab::RatingModel::exact(), args.seed);

  ratelab::Rng rng = ratelab::Rng(args.seed).split(0x97AD);
  ratelab::Table logits(env.prompts(), env.responses());
  for (double& v : logits.data()) v = rng.normal();
  const ratelab::SoftmaxPolicy policy(std::move(logits));

  const auto report = ratelab::finite_diff_gradcheck(spec, policy, env, ds, 1e-5);
  const double threshold = (report.saturated || report.near_kink) ? 1e-3 : 1e-4;
  const bool pass = report.max_rel_err <= threshold;
  std::cout << "family=" << ratelab::to_string(spec.family)
            << " max_rel_err=" << ratelab::format_double(report.max_rel_err)
            << " threshold=" << ratelab::format_double(threshold)
            << " saturated=" << (report.saturated ? 1 : 0)
            << " near_kink=" << (report.near_kink ? 1 : 0) << " "
            << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kExitOk : kExitNumeric;
}

struct BoundsArgs {
  ratelab::BoundParams params;
  double err_rating = 0.0;
  double variance = 1.0;
  double c_conc = 1.0;
  double beta = 0.1;
  std::string out_path;
};

int cmd_bounds(const BoundsArgs& args) {
  const ratelab::RateBounds bounds =
      ratelab::rate_bounds(args.params, args.err_rating, args.variance, args.c_conc, args.beta);
  const double clamped = std::max(bounds.beta1_prescribed, 1e-6);
  std::string out = "{\n";
  out += "\"err_dpo\":" + ratelab::format_double(bounds.err_dpo) + ",\n";
  out += "\"rdpo_bound\":" + ratelab::format_double(bounds.rdpo_bound) + ",\n";
  out += "\"mlrdpo_bound\":" + ratelab::format_double(bounds.mlrdpo_bound) + ",\n";
  out += "\"beta1_prescribed\":" + ratelab::format_double(bounds.beta1_prescribed) + ",\n";
  out += "\"beta1_prescribed_clamped\":" + ratelab::format_double(clamped) + "\n";
  out += "}\n";
  if (!args.out_path.empty()) {
    ratelab::write_text_file(args.out_path, out);
  }
  std::cout << out;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ratelab: tabular preference-alignment laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> global_seed;
  std::string global_out;
  std::string global_config;
  app.add_option("--seed", global_seed, "Seed override for commands that sample");
  app.add_option("--out", global_out, "Output directory or file");
  app.add_option("--config", global_config, "JSON config file");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write an environment and a sampled dataset");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Minimize a loss over policy logits");
  train_cmd->add_option("--env", tr.env_path, "Environment JSON")->required();
  train_cmd->add_option("--spec", tr.spec_path, "AlgorithmSpec JSON")->required();
  train_cmd->add_option("--data", tr.data_path, "Dataset JSON-lines (EMPIRICAL mode)");
  train_cmd->add_option("--rating", tr.rating_path, "Rating model JSON (POPULATION mode)");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained policy against an environment");
  eval_cmd->add_option("--env", ev.env_path, "Environment JSON")->required();
  eval_cmd->add_option("--policy", ev.policy_path, "Policy JSON")->required();
  eval_cmd->add_option("--spec", ev.spec_path, "AlgorithmSpec JSON (for beta_eff and loss)");
  eval_cmd->add_option("--data", ev.data_path, "Dataset JSON-lines (adds a loss field)");
  eval_cmd->add_option("--beta-eff", ev.beta_eff, "Explicit gap regularization strength");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep plan and emit CSV + aggregates");
  sweep_cmd->add_option("--plan", sw.plan_path, "Sweep plan JSON")->required();
  sweep_cmd->add_option("--threads", sw.threads, "Worker threads (0 = auto)");

  GradcheckArgs gc;
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradient");
  gradcheck_cmd->add_option("--spec", gc.spec_path, "AlgorithmSpec JSON")->required();
  gradcheck_cmd->add_option("--n", gc.n, "Dataset size for the check");

  BoundsArgs bd;
  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate the rate-bound diagnostics");
  bounds_cmd->add_option("--c", bd.params.c, "Err_DPO constant");
  bounds_cmd->add_option("--delta", bd.params.delta, "Failure probability");
  bounds_cmd->add_option("--pi-size", bd.params.policy_class_size, "Policy class size surrogate");
  bounds_cmd->add_option("--r-max", bd.params.r_max, "Reward bound");
  bounds_cmd->add_option("--n", bd.params.n, "Sample count")->required();
  bounds_cmd->add_option("--err-rating", bd.err_rating, "Err(r_hat) value")->required();
  bounds_cmd->add_option("--variance", bd.variance, "Rating variance for the ML bound");
  bounds_cmd->add_option("--c-conc", bd.c_conc, "Concentrability coefficient");
  bounds_cmd->add_option("--beta", bd.beta, "Beta for the beta1 prescription");

  CLI11_PARSE(app, argc, argv);

  return run_guarded([&]() -> int {
    if (generate->parsed()) {
      gen.config_path = global_config;
      gen.out_dir = global_out.empty() ? "." : global_out;
      gen.seed_override = global_seed;
      return cmd_generate(gen);
    }
    if (train_cmd->parsed()) {
      tr.config_path = global_config;
      tr.out_dir = global_out.empty() ? "." : global_out;
      return cmd_train(tr);
    }
    if (eval_cmd->parsed()) {
      ev.out_path = global_out;
      return cmd_eval(ev);
    }
    if (sweep_cmd->parsed()) {
      sw.out_dir = global_out.empty() ? "." : global_out;
      return cmd_sweep(sw);
    }
    if (gradcheck_cmd->parsed()) {
      if (global_seed) gc.seed = *global_seed;
      return cmd_gradcheck(gc);
    }
    if (bounds_cmd->parsed()) {
      bd.out_path = global_out;
      return cmd_bounds(bd);
    }
    return kExitOk;
  });
}
