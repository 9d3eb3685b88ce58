#include "groundcheck/costmodel.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "groundcheck/errors.hpp"

namespace groundcheck {

void PricingConfig::validate() const {
  if (input_price_per_1m < 0 || output_price_per_1m < 0 || gpu_monthly < 0) {
    throw InvalidConfig("prices must be non-negative");
  }
  if (gpu_qps_capacity <= 0) {
    throw InvalidConfig("gpu_qps_capacity must be > 0");
  }
  if (seconds_per_month <= 0) {
    throw InvalidConfig("seconds_per_month must be > 0");
  }
}

void WorkloadConfig::validate() const {
  if (qps < 0) throw InvalidConfig("qps must be non-negative");
  if (avg_input_tokens < 0 || avg_output_tokens < 0) {
    throw InvalidConfig("token counts must be non-negative");
  }
  if (calls_per_query < 0 || output_multiplier < 0) {
    throw InvalidConfig("calls_per_query and output_multiplier must be >= 0");
  }
}

double gpu_monthly_cost(const PricingConfig& pricing,
                        const WorkloadConfig& workload) {
  pricing.validate();
  workload.validate();
  return pricing.gpu_monthly * workload.qps / pricing.gpu_qps_capacity;
}

namespace {

double per_call_cost(const PricingConfig& pricing, const WorkloadConfig& workload) {
  return (static_cast<double>(workload.avg_input_tokens) *
              pricing.input_price_per_1m +
          static_cast<double>(workload.avg_output_tokens) *
              workload.output_multiplier * pricing.output_price_per_1m) /
         1e6;
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

double api_per_query_cost(const PricingConfig& pricing,
                          const WorkloadConfig& workload) {
  pricing.validate();
  workload.validate();
  return workload.calls_per_query * per_call_cost(pricing, workload);
}

double api_monthly_cost(const PricingConfig& pricing,
                        const WorkloadConfig& workload, bool round_per_query) {
  pricing.validate();
  workload.validate();
  double call_cost = per_call_cost(pricing, workload);
  if (round_per_query) call_cost = round4(call_cost);
  return workload.qps * static_cast<double>(pricing.seconds_per_month) *
         workload.calls_per_query * call_cost;
}

std::vector<CostPreset> default_presets() {
  std::vector<CostPreset> presets;

  {
    CostPreset p;
    p.name = "self-hosted";
    p.kind = CostPreset::Kind::kGpu;
    p.note = "encoder on a dedicated GPU instance, fractional instances";
    presets.push_back(p);
  }
  {
    CostPreset p;
    p.name = "single-prompt";
    p.kind = CostPreset::Kind::kApi;
    p.workload.avg_input_tokens = 4000;
    p.workload.avg_output_tokens = 200;
    p.workload.calls_per_query = 1;
    p.workload.output_multiplier = 1.0;
    p.round_per_query = true;
    p.note = "one chat call per query";
    presets.push_back(p);
  }
  {
    CostPreset p;
    p.name = "ensemble-3";
    p.kind = CostPreset::Kind::kApi;
    p.workload.avg_input_tokens = 4000;
    p.workload.avg_output_tokens = 200;
    p.workload.calls_per_query = 1;
    p.workload.output_multiplier = 3.0;
    p.note = "one call, three sampled outputs per query";
    presets.push_back(p);
  }
  {
    CostPreset p;
    p.name = "two-call-extractor";
    p.kind = CostPreset::Kind::kFlatPerQuery;
    // Claim extraction then claim verification, priced per query:
    // ($380 + $2730) per 1M queries.
    p.flat_per_query = (380.0 + 2730.0) / 1e6;
    p.note = "exact arithmetic gives $80,611.20/month at 10 qps; the "
             "commonly cited figure $79,937 does not match its own formula";
    presets.push_back(p);
  }
  {
    CostPreset p;
    p.name = "per-sentence-3";
    p.kind = CostPreset::Kind::kApi;
    p.workload.avg_input_tokens = 4000;
    p.workload.avg_output_tokens = 75;  // one response sentence
    p.workload.calls_per_query = 3;     // one call per response sentence
    p.workload.output_multiplier = 2.0; // sentence echoed plus explanation
    p.note = "three calls per query, sentence + explanation outputs";
    presets.push_back(p);
  }
  return presets;
}

std::vector<CostRow> framework_cost_table(const PricingConfig& pricing,
                                          double qps,
                                          const std::vector<CostPreset>& presets) {
  if (qps < 0) throw InvalidConfig("qps must be non-negative");
  std::vector<CostRow> rows;
  rows.reserve(presets.size());
  for (const auto& preset : presets) {
    CostRow row;
    row.preset = preset.name;
    row.note = preset.note;
    WorkloadConfig workload = preset.workload;
    workload.qps = qps;
    switch (preset.kind) {
      case CostPreset::Kind::kGpu:
        row.per_query_usd = 0.0;
        row.monthly_usd = gpu_monthly_cost(pricing, workload);
        break;
      case CostPreset::Kind::kApi:
        row.per_query_usd = api_per_query_cost(pricing, workload);
        row.monthly_usd =
            api_monthly_cost(pricing, workload, preset.round_per_query);
        break;
      case CostPreset::Kind::kFlatPerQuery:
        row.per_query_usd = preset.flat_per_query;
        row.monthly_usd = qps * static_cast<double>(pricing.seconds_per_month) *
                          preset.flat_per_query;
        break;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const std::vector<CostRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& row : rows) {
    out.push_back({{"preset", row.preset},
                   {"per_query_usd", row.per_query_usd},
                   {"monthly_usd", row.monthly_usd},
                   {"note", row.note}});
  }
  return out;
}

std::string format_cost_table(const std::vector<CostRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "preset" << std::right << std::setw(14)
      << "per-query USD" << std::setw(16) << "monthly USD"
      << "  note\n";
  for (const auto& row : rows) {
    out << std::left << std::setw(20) << row.preset << std::right
        << std::setw(14) << std::fixed << std::setprecision(6)
        << row.per_query_usd << std::setw(16) << std::setprecision(2)
        << row.monthly_usd << "  " << row.note << "\n";
  }
  return out.str();
}

}  // namespace groundcheck
