#include "groundcheck/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "groundcheck/sentence.hpp"

namespace groundcheck {

using nlohmann::json;

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split '" + s + "'");
}

std::string to_string(ReconcileStatus status) {
  switch (status) {
    case ReconcileStatus::kClean: return "clean";
    case ReconcileStatus::kResolvedPartial: return "resolved_partial";
    case ReconcileStatus::kConflicting: return "conflicting";
  }
  return "clean";
}

namespace {

std::string kind_to_string(SupportKind kind) {
  switch (kind) {
    case SupportKind::kSupported: return "supported";
    case SupportKind::kGenerallySupported: return "generally_supported";
    case SupportKind::kUnsupported: return "unsupported";
  }
  return "unsupported";
}

SupportKind kind_from_string(const std::string& s) {
  if (s == "supported") return SupportKind::kSupported;
  if (s == "generally_supported") return SupportKind::kGenerallySupported;
  if (s == "unsupported") return SupportKind::kUnsupported;
  throw ParseError("unknown support kind '" + s + "'");
}

// Sentence strings for one source text.
std::vector<std::string> sentence_texts(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& span : segment_sentences(text)) {
    out.push_back(text.substr(span.char_span.begin, span.char_span.size()));
  }
  return out;
}

std::vector<SupportAnnotation> all_unsupported(const std::string& response) {
  std::vector<SupportAnnotation> annotations;
  const auto sentences = segment_sentences(response);
  annotations.reserve(sentences.size());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    annotations.push_back(
        {static_cast<int>(s), SupportKind::kUnsupported, {}});
  }
  return annotations;
}

}  // namespace

json record_to_json(const RagRecord& record) {
  json context = json::array();
  for (const auto& doc : record.example.context) {
    context.push_back({{"id", doc.id}, {"text", doc.text}});
  }
  json j{
      {"id", record.example.id},
      {"domain", record.domain},
      {"split", to_string(record.split)},
      {"context", std::move(context)},
      {"question", record.example.question},
      {"response", record.example.response},
  };
  if (!record.generator.empty()) j["generator"] = record.generator;
  if (record.response_level_supported.has_value()) {
    j["response_level_supported"] = *record.response_level_supported;
  }
  if (record.annotations.has_value()) {
    json annotations = json::array();
    for (const auto& a : *record.annotations) {
      json entry{{"sentence", a.response_sentence_index},
                 {"kind", kind_to_string(a.kind)}};
      if (a.kind == SupportKind::kSupported) {
        json refs = json::array();
        for (const auto& ref : a.refs) {
          refs.push_back({ref.doc_index, ref.sentence_index});
        }
        entry["refs"] = std::move(refs);
      }
      annotations.push_back(std::move(entry));
    }
    j["annotations"] = std::move(annotations);
  }
  return j;
}

RagRecord record_from_json(const json& j) {
  RagRecord record;
  record.example.id = j.at("id").get<std::string>();
  record.domain = j.value("domain", "");
  record.split = split_from_string(j.value("split", "train"));
  record.generator = j.value("generator", "");
  for (const auto& doc : j.at("context")) {
    record.example.context.push_back({doc.at("id").get<std::string>(),
                                      doc.at("text").get<std::string>()});
  }
  record.example.question = j.at("question").get<std::string>();
  record.example.response = j.at("response").get<std::string>();
  if (j.contains("response_level_supported")) {
    record.response_level_supported = j["response_level_supported"].get<bool>();
  }
  if (j.contains("annotations")) {
    std::vector<SupportAnnotation> annotations;
    for (const auto& entry : j["annotations"]) {
      SupportAnnotation a;
      a.response_sentence_index = entry.at("sentence").get<int>();
      a.kind = kind_from_string(entry.at("kind").get<std::string>());
      if (entry.contains("refs")) {
        for (const auto& ref : entry["refs"]) {
          a.refs.push_back({ref[0].get<int>(), ref[1].get<int>()});
        }
      }
      annotations.push_back(std::move(a));
    }
    record.annotations = std::move(annotations);
  }
  return record;
}

std::vector<RagRecord> read_jsonl(std::istream& in) {
  std::vector<RagRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw ParseError("invalid JSON on line " + std::to_string(line_no));
    }
    try {
      records.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      throw ParseError("bad record on line " + std::to_string(line_no) + ": " +
                       e.what());
    }
  }
  return records;
}

std::vector<RagRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_jsonl(in);
}

void write_jsonl(std::ostream& out, const std::vector<RagRecord>& records) {
  for (const auto& record : records) {
    out << record_to_json(record).dump() << '\n';
  }
}

void write_jsonl_file(const std::string& path,
                      const std::vector<RagRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_jsonl(out, records);
}

std::vector<Conflict> detect_conflicts(const RagRecord& record) {
  if (!record.annotations.has_value()) {
    throw MissingAnnotations("record '" + record.example.id +
                             "' has no annotations");
  }
  if (!record.response_level_supported.has_value()) {
    throw MissingAnnotations("record '" + record.example.id +
                             "' has no response-level verdict");
  }
  const std::size_t sentence_count =
      segment_sentences(record.example.response).size();
  std::vector<const SupportAnnotation*> by_sentence(sentence_count, nullptr);
  for (const auto& a : *record.annotations) {
    if (a.response_sentence_index >= 0 &&
        static_cast<std::size_t>(a.response_sentence_index) < sentence_count) {
      by_sentence[a.response_sentence_index] = &a;
    }
  }
  for (std::size_t s = 0; s < sentence_count; ++s) {
    if (by_sentence[s] == nullptr) {
      throw MissingAnnotations("record '" + record.example.id +
                               "' lacks an annotation for sentence " +
                               std::to_string(s));
    }
  }

  std::vector<Conflict> conflicts;
  const bool response_supported = *record.response_level_supported;
  bool any_unsupported = false;
  for (std::size_t s = 0; s < sentence_count; ++s) {
    if (by_sentence[s]->kind == SupportKind::kUnsupported) {
      any_unsupported = true;
      if (response_supported) {
        conflicts.push_back({static_cast<int>(s),
                             "response marked supported but sentence " +
                                 std::to_string(s) + " has no support"});
      }
    }
  }
  if (!response_supported && !any_unsupported) {
    conflicts.push_back(
        {-1, "response marked unsupported but every sentence is supported"});
  }
  return conflicts;
}

AnnotationRequest annotation_request_for(const RagRecord& record) {
  AnnotationRequest request;
  request.question = record.example.question;
  for (const auto& doc : record.example.context) {
    request.context_sentences.push_back(sentence_texts(doc.text));
  }
  request.response_sentences = sentence_texts(record.example.response);
  return request;
}

std::pair<RagRecord, ReconciliationReport> reconcile(RagRecord record,
                                                     AnnotatorClient& client,
                                                     int max_attempts) {
  if (max_attempts < 1) throw InvalidConfig("max_attempts must be >= 1");

  ReconciliationReport report;
  report.record_id = record.example.id;

  const AnnotationRequest request = annotation_request_for(record);
  const std::size_t sentence_count = request.response_sentences.size();

  bool have_annotation = false;
  std::string last_error;
  std::vector<Conflict> conflicts;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    ++report.attempts;
    try {
      AnnotationResult result = client.annotate(request);
      if (result.annotations.size() != sentence_count) {
        throw AnnotatorFailure(
            "annotator returned " + std::to_string(result.annotations.size()) +
            " annotations for " + std::to_string(sentence_count) + " sentences");
      }
      std::sort(result.annotations.begin(), result.annotations.end(),
                [](const SupportAnnotation& a, const SupportAnnotation& b) {
                  return a.response_sentence_index < b.response_sentence_index;
                });
      RagRecord candidate = record;
      candidate.annotations = std::move(result.annotations);
      candidate.response_level_supported = result.response_level_supported;
      conflicts = detect_conflicts(candidate);  // also validates coverage
      record = std::move(candidate);
      have_annotation = true;
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }

    if (conflicts.empty()) {
      report.status = ReconcileStatus::kClean;
      return {std::move(record), std::move(report)};
    }
  }

  if (!have_annotation) {
    throw AnnotatorFailure("record '" + record.example.id + "': all " +
                           std::to_string(max_attempts) +
                           " annotation attempts failed: " + last_error);
  }

  // Residual conflicts: resolve partially supported sentences to unsupported
  // on both the sentence and example level.
  report.status = ReconcileStatus::kResolvedPartial;
  report.conflicts = conflicts;
  auto& annotations = *record.annotations;
  for (const auto& conflict : conflicts) {
    if (conflict.sentence_index < 0) {
      for (auto& a : annotations) {
        a.kind = SupportKind::kUnsupported;
        a.refs.clear();
      }
    } else {
      for (auto& a : annotations) {
        if (a.response_sentence_index == conflict.sentence_index) {
          a.kind = SupportKind::kUnsupported;
          a.refs.clear();
        }
      }
    }
  }
  record.response_level_supported = false;
  return {std::move(record), std::move(report)};
}

std::vector<std::pair<RagRecord, ReconciliationReport>> reconcile_all(
    std::vector<RagRecord> records, AnnotatorClient& client, int max_attempts) {
  const std::size_t n = records.size();
  std::vector<std::pair<RagRecord, ReconciliationReport>> results(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};

  const int in_flight =
      std::max(1, std::min<int>(client.max_in_flight(), static_cast<int>(n)));
  std::vector<std::thread> workers;
  workers.reserve(in_flight);
  for (int w = 0; w < in_flight; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          results[i] = reconcile(std::move(records[i]), client, max_attempts);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return results;
}

std::vector<RagRecord> transform_drop_insert(const std::vector<RagRecord>& batch,
                                             std::uint64_t seed) {
  if (batch.size() < 2) {
    throw InvalidConfig("transform_drop_insert needs a batch of >= 2 records");
  }
  std::mt19937_64 rng(seed);
  std::vector<RagRecord> out = batch;

  for (std::size_t i = 0; i < out.size(); ++i) {
    RagRecord& record = out[i];

    // Drop one random document when the record can spare it.
    if (record.example.context.size() >= 2) {
      const int dropped = static_cast<int>(rng() % record.example.context.size());
      record.example.context.erase(record.example.context.begin() + dropped);
      if (record.annotations.has_value()) {
        for (auto& a : *record.annotations) {
          if (a.kind != SupportKind::kSupported) continue;
          std::vector<ContextSentenceRef> kept;
          for (auto ref : a.refs) {
            if (ref.doc_index == dropped) continue;
            if (ref.doc_index > dropped) --ref.doc_index;
            kept.push_back(ref);
          }
          a.refs = std::move(kept);
          if (a.refs.empty()) a.kind = SupportKind::kUnsupported;
        }
      }
    }

    // Insert one document from another record. Appending keeps every
    // existing doc_index valid; the new document supports nothing.
    std::size_t donor = rng() % (batch.size() - 1);
    if (donor >= i) ++donor;
    const auto& donor_docs = batch[donor].example.context;
    Document inserted = donor_docs[rng() % donor_docs.size()];
    inserted.id = batch[donor].example.id + "/" + inserted.id;
    record.example.context.push_back(std::move(inserted));

    if (record.annotations.has_value()) {
      bool any_unsupported = false;
      for (const auto& a : *record.annotations) {
        if (a.kind == SupportKind::kUnsupported) any_unsupported = true;
      }
      if (record.response_level_supported.has_value()) {
        record.response_level_supported = !any_unsupported;
      }
    }
  }
  return out;
}

std::vector<RagRecord> transform_shuffle_qr(const std::vector<RagRecord>& batch,
                                            std::uint64_t seed) {
  if (batch.size() < 2) {
    throw InvalidConfig("transform_shuffle_qr needs a batch of >= 2 records");
  }
  std::mt19937_64 rng(seed);
  const std::size_t n = batch.size();

  // Sattolo's algorithm: a uniform cyclic permutation, hence a derangement.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng() % i]);
  }

  std::vector<RagRecord> out = batch;
  for (std::size_t i = 0; i < n; ++i) {
    const RagRecord& source = batch[perm[i]];
    out[i].example.question = source.example.question;
    out[i].example.response = source.example.response;
    // A response answering a different question over different context has
    // no license to claim support.
    out[i].annotations = all_unsupported(out[i].example.response);
    out[i].response_level_supported = false;
  }
  return out;
}

}  // namespace groundcheck
