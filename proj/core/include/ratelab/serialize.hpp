#pragma once

#include <filesystem>
#include <string>

#include "ratelab/env.hpp"
#include "ratelab/losses.hpp"
#include "ratelab/trainer.hpp"

namespace ratelab {

// All writers emit floats with 17 significant digits (exact double
// round-trip) and are byte-deterministic. Parsers throw SchemaError naming
// the offending field; file helpers throw IoError with the path.

std::string format_double(double value);

std::string environment_to_json(const Environment& env);
Environment environment_from_json(const std::string& text);

/// JSON-lines: one {"seed":..,"count":..} header, then one record per line
/// with fields (prompt, chosen, rejected, z, rating_gap|null).
std::string dataset_to_jsonl(const Dataset& ds);
Dataset dataset_from_jsonl(const std::string& text);

std::string algorithm_spec_to_json(const AlgorithmSpec& spec);
/// Flat object, exact field names, unknown fields rejected.
AlgorithmSpec algorithm_spec_from_json(const std::string& text);

std::string policy_to_json(const SoftmaxPolicy& policy);
SoftmaxPolicy policy_from_json(const std::string& text);

std::string rating_model_to_json(const RatingModel& rating);
RatingModel rating_model_from_json(const std::string& text);

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

/// CSV with header step,loss,grad_norm,subopt_gap,kl_to_ref.
std::string trace_to_csv(const TrainTrace& trace);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ratelab
