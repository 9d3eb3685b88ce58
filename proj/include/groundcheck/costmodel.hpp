#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace groundcheck {

/// Unit prices for the deployment-cost estimates.
struct PricingConfig {
  double input_price_per_1m = 0.50;   // USD per 1M input tokens
  double output_price_per_1m = 1.50;  // USD per 1M output tokens
  double gpu_monthly = 700.0;         // USD per GPU instance per month
  double gpu_qps_capacity = 4.0;      // sustained queries/s per GPU
  long seconds_per_month = 2'592'000;

  void validate() const;
};

/// Shape of the query stream being priced.
struct WorkloadConfig {
  double qps = 10.0;
  long avg_input_tokens = 4000;
  long avg_output_tokens = 200;
  int calls_per_query = 1;
  double output_multiplier = 1.0;  // e.g. 3 sampled outputs per call

  void validate() const;
};

/// Self-hosted GPU serving: gpu_monthly * qps / capacity. The ratio is
/// fractional, not rounded up to whole instances.
double gpu_monthly_cost(const PricingConfig& pricing,
                        const WorkloadConfig& workload);

/// Cost of one query:
///   calls_per_query * (in_tokens * p_in + out_tokens * multiplier * p_out) / 1M
double api_per_query_cost(const PricingConfig& pricing,
                          const WorkloadConfig& workload);

/// Monthly API cost: qps * seconds_per_month * per-query cost. When
/// round_per_query is set the per-call cost is rounded to 4 decimals first
/// (display-style arithmetic); default keeps full precision.
double api_monthly_cost(const PricingConfig& pricing,
                        const WorkloadConfig& workload,
                        bool round_per_query = false);

/// A named serving strategy for the cost table.
struct CostPreset {
  enum class Kind { kGpu, kApi, kFlatPerQuery };
  std::string name;
  Kind kind = Kind::kApi;
  WorkloadConfig workload;       // qps is overridden by the caller
  double flat_per_query = 0.0;   // used by kFlatPerQuery
  bool round_per_query = false;
  std::string note;
};

/// The built-in presets: self-hosted, single-prompt, ensemble-3,
/// two-call-extractor, per-sentence-3.
std::vector<CostPreset> default_presets();

struct CostRow {
  std::string preset;
  double per_query_usd = 0.0;
  double monthly_usd = 0.0;
  std::string note;
};

/// Evaluates every preset at the given qps.
std::vector<CostRow> framework_cost_table(
    const PricingConfig& pricing, double qps,
    const std::vector<CostPreset>& presets = default_presets());

nlohmann::json to_json(const std::vector<CostRow>& rows);
std::string format_cost_table(const std::vector<CostRow>& rows);

}  // namespace groundcheck
