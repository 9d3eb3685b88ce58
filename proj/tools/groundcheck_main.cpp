// groundcheck CLI: one-shot detection, serving, evaluation, cost reports,
// and dataset annotation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "groundcheck/annotator_http.hpp"
#include "groundcheck/costmodel.hpp"
#include "groundcheck/dataset.hpp"
#include "groundcheck/evaluation.hpp"
#include "groundcheck/service.hpp"

namespace {

using groundcheck::ServiceConfig;
using nlohmann::json;

ServiceConfig load_service_config(const std::string& config_path) {
  ServiceConfig config;
  if (!config_path.empty()) {
    config = ServiceConfig::from_file(config_path);
  }
  config.apply_env_overrides();
  return config;
}

int run_detect(const std::string& file, const std::string& config_path,
               const std::string& scorer_override) {
  ServiceConfig config = load_service_config(config_path);
  if (!scorer_override.empty()) config.scorer = scorer_override;

  std::ifstream in(file);
  if (!in) {
    std::cerr << "cannot open " << file << "\n";
    return 1;
  }
  json body;
  in >> body;

  groundcheck::RagExample example;
  example.id = body.value("id", "example");
  for (const auto& doc : body.at("context")) {
    example.context.push_back(
        {doc.value("id", std::to_string(example.context.size())),
         doc.value("text", "")});
  }
  example.question = body.at("question").get<std::string>();
  example.response = body.at("response").get<std::string>();

  const auto scorer = groundcheck::make_scorer(config);
  groundcheck::DetectionPipeline pipeline(config, scorer);
  const auto outcome = pipeline.run(example, nullptr, "cli");

  json out = groundcheck::to_json(outcome.result);
  out["hallucinated"] = outcome.hallucinated;
  out["window_count"] = outcome.window_count;
  out["latency_ms"] = static_cast<double>(outcome.latency.total_us) / 1000.0;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_serve(const std::string& config_path) {
  ServiceConfig config = load_service_config(config_path);
  groundcheck::DetectionServer server(config, groundcheck::make_scorer(config));
  server.start();
  std::cout << "groundcheck listening on " << config.bind_address << ":"
            << server.port() << " (scorer=" << config.scorer
            << ", mode=" << config.mode << ")\n";
  server.wait();
  return 0;
}

int run_eval(const std::string& dataset_path, const std::string& scorer_spec,
             const std::string& mode, const std::string& report_path,
             const std::string& curve_csv_path, int max_sequence_length,
             int stride, int batch_size, double overlap, double noise,
             std::uint64_t noise_seed) {
  const auto records = groundcheck::read_jsonl_file(dataset_path);

  std::shared_ptr<const groundcheck::SupportScorer> scorer;
  if (scorer_spec == "annotation") {
    std::map<std::string, std::vector<groundcheck::SupportAnnotation>> annotations;
    for (const auto& record : records) {
      if (record.annotations.has_value()) {
        annotations[record.example.id] = *record.annotations;
      }
    }
    scorer = std::make_shared<groundcheck::AnnotationScorer>(
        std::move(annotations), nullptr, max_sequence_length);
  } else {
    ServiceConfig config;
    config.scorer = scorer_spec;
    config.max_sequence_length = max_sequence_length;
    config.lexical_overlap_fraction = overlap;
    config.noise_amplitude = noise;
    config.noise_seed = noise_seed;
    scorer = groundcheck::make_scorer(config);
  }

  groundcheck::PipelineConfig config;
  config.window.max_sequence_length = max_sequence_length;
  config.window.stride = stride;
  config.mode = groundcheck::aggregation_mode_from_string(mode);
  config.batch_size = batch_size;

  const auto report = groundcheck::evaluate_pipeline(records, *scorer, config);
  const json out = groundcheck::to_json(report);
  if (report_path.empty() || report_path == "-") {
    std::cout << out.dump(2) << "\n";
  } else {
    std::ofstream file(report_path);
    file << out.dump(2) << "\n";
    std::cout << "report written to " << report_path << "\n";
  }
  if (!curve_csv_path.empty()) {
    std::ofstream file(curve_csv_path);
    file << groundcheck::curve_to_csv(report.threshold);
  }
  std::printf("examples=%zu auroc=%.4f best_f1=%.4f @ threshold=%.4f\n",
              report.examples, report.auroc, report.threshold.f1,
              report.threshold.best_threshold);
  return 0;
}

int run_cost(double qps, const std::string& preset, const std::string& format) {
  groundcheck::PricingConfig pricing;
  auto rows = groundcheck::framework_cost_table(pricing, qps);
  if (preset != "all") {
    std::erase_if(rows, [&](const auto& row) { return row.preset != preset; });
    if (rows.empty()) {
      std::cerr << "unknown preset '" << preset << "'\n";
      return 1;
    }
  }
  if (format == "json") {
    std::cout << groundcheck::to_json(rows).dump(2) << "\n";
  } else {
    std::cout << groundcheck::format_cost_table(rows);
  }
  return 0;
}

int run_annotate(const std::string& in_path, const std::string& out_path,
                 int max_attempts) {
  auto records = groundcheck::read_jsonl_file(in_path);
  groundcheck::HttpAnnotatorClient client(
      groundcheck::HttpAnnotatorConfig::from_env());
  auto results =
      groundcheck::reconcile_all(std::move(records), client, max_attempts);

  std::vector<groundcheck::RagRecord> annotated;
  std::map<std::string, int> by_status;
  annotated.reserve(results.size());
  for (auto& [record, report] : results) {
    ++by_status[groundcheck::to_string(report.status)];
    annotated.push_back(std::move(record));
  }
  groundcheck::write_jsonl_file(out_path, annotated);
  std::cout << "annotated " << annotated.size() << " records -> " << out_path
            << "\n";
  for (const auto& [status, count] : by_status) {
    std::cout << "  " << status << ": " << count << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAG hallucination detection over long contexts"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "score one example from a file");
  std::string detect_file, detect_config, detect_scorer;
  detect->add_option("--file", detect_file, "example JSON file")->required();
  detect->add_option("--config", detect_config, "service config (.toml/.json)");
  detect->add_option("--scorer", detect_scorer, "scorer override");

  // serve
  auto* serve = app.add_subcommand("serve", "run the detection HTTP service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "service config (.toml/.json)");

  // eval run
  auto* eval = app.add_subcommand("eval", "evaluation harness");
  auto* eval_run = eval->add_subcommand("run", "evaluate a dataset");
  std::string eval_dataset, eval_scorer = "lexical", eval_mode = "token";
  std::string eval_report, eval_curve;
  int eval_seq_len = 512, eval_stride = 0, eval_batch = 32;
  double eval_overlap = 0.6, eval_noise = 0.0;
  std::uint64_t eval_noise_seed = 0;
  eval_run->add_option("--dataset", eval_dataset, "annotated JSONL dataset")
      ->required();
  eval_run->add_option("--scorer", eval_scorer,
                       "lexical | annotation | model:<path>");
  eval_run->add_option("--mode", eval_mode, "token | example");
  eval_run->add_option("--report", eval_report, "report JSON output path");
  eval_run->add_option("--curve-csv", eval_curve, "threshold curve CSV path");
  eval_run->add_option("--max-seq-len", eval_seq_len, "window budget L");
  eval_run->add_option("--stride", eval_stride, "window stride (0 = l)");
  eval_run->add_option("--batch-size", eval_batch, "scoring batch size");
  eval_run->add_option("--overlap", eval_overlap, "lexical overlap fraction");
  eval_run->add_option("--noise", eval_noise, "scorer noise amplitude");
  eval_run->add_option("--noise-seed", eval_noise_seed, "scorer noise seed");

  // cost report
  auto* cost = app.add_subcommand("cost", "deployment cost model");
  auto* cost_report = cost->add_subcommand("report", "print the cost table");
  double cost_qps = 10.0;
  std::string cost_preset = "all", cost_format = "table";
  cost_report->add_option("--qps", cost_qps, "sustained queries per second");
  cost_report->add_option("--preset", cost_preset, "preset name or 'all'");
  cost_report->add_option("--format", cost_format, "table | json");

  // dataset annotate
  auto* dataset = app.add_subcommand("dataset", "dataset tooling");
  auto* annotate = dataset->add_subcommand("annotate", "annotate via LLM");
  std::string annotate_in, annotate_out;
  int annotate_attempts = 3;
  annotate->add_option("--in", annotate_in, "input JSONL")->required();
  annotate->add_option("--out", annotate_out, "output JSONL")->required();
  annotate->add_option("--max-attempts", annotate_attempts,
                       "re-annotation attempts per record");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*detect) return run_detect(detect_file, detect_config, detect_scorer);
    if (*serve) return run_serve(serve_config);
    if (*eval_run) {
      return run_eval(eval_dataset, eval_scorer, eval_mode, eval_report,
                      eval_curve, eval_seq_len, eval_stride, eval_batch,
                      eval_overlap, eval_noise, eval_noise_seed);
    }
    if (*cost_report) return run_cost(cost_qps, cost_preset, cost_format);
    if (*annotate) return run_annotate(annotate_in, annotate_out, annotate_attempts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "no subcommand action\n";
  return 1;
}
