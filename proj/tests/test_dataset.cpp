#include "groundcheck/dataset.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

using namespace groundcheck;

namespace {

RagRecord make_record(std::string id, int docs = 2) {
  RagRecord record;
  record.example.id = std::move(id);
  for (int d = 0; d < docs; ++d) {
    record.example.context.push_back(
        {"doc" + std::to_string(d),
         "fact" + std::to_string(d) + " alpha beta. gamma delta epsilon."});
  }
  record.example.question = "what is the fact?";
  record.example.response = "Claim one. Claim two.";
  record.domain = "general knowledge";
  record.split = Split::kTrain;
  record.generator = "synthetic";
  return record;
}

RagRecord annotated_record(bool response_supported,
                           std::vector<SupportKind> kinds) {
  RagRecord record = make_record("annotated");
  std::vector<SupportAnnotation> annotations;
  for (std::size_t s = 0; s < kinds.size(); ++s) {
    SupportAnnotation a;
    a.response_sentence_index = static_cast<int>(s);
    a.kind = kinds[s];
    if (a.kind == SupportKind::kSupported) a.refs = {{0, 0}};
    annotations.push_back(a);
  }
  record.annotations = std::move(annotations);
  record.response_level_supported = response_supported;
  return record;
}

}  // namespace

TEST_CASE("conflict rule table over response-level x sentence kind") {
  struct Case {
    bool response_supported;
    SupportKind kind;
    std::size_t conflicts;
    int sentence_index;  // of the single conflict; ignored when none
  };
  // Single-sentence record; full 2x3 enumeration of the label combinations.
  const Case cases[] = {
      {true, SupportKind::kSupported, 0, 0},
      {true, SupportKind::kGenerallySupported, 0, 0},
      {true, SupportKind::kUnsupported, 1, 0},
      {false, SupportKind::kSupported, 1, -1},
      {false, SupportKind::kGenerallySupported, 1, -1},
      {false, SupportKind::kUnsupported, 0, 0},
  };
  for (const auto& c : cases) {
    RagRecord record = make_record("single");
    record.example.response = "Only claim.";
    SupportAnnotation a;
    a.response_sentence_index = 0;
    a.kind = c.kind;
    if (a.kind == SupportKind::kSupported) a.refs = {{0, 0}};
    record.annotations = std::vector<SupportAnnotation>{a};
    record.response_level_supported = c.response_supported;

    const auto conflicts = detect_conflicts(record);
    CHECK(conflicts.size() == c.conflicts);
    if (c.conflicts == 1) {
      CHECK(conflicts[0].sentence_index == c.sentence_index);
    }
  }
}

TEST_CASE("one conflict per unsupported sentence under a supported verdict") {
  const auto record = annotated_record(
      true, {SupportKind::kUnsupported, SupportKind::kUnsupported});
  const auto conflicts = detect_conflicts(record);
  REQUIRE(conflicts.size() == 2);
  CHECK(conflicts[0].sentence_index == 0);
  CHECK(conflicts[1].sentence_index == 1);
}

TEST_CASE("agreement produces no conflicts") {
  CHECK(detect_conflicts(annotated_record(
            true, {SupportKind::kSupported, SupportKind::kGenerallySupported}))
            .empty());
  CHECK(detect_conflicts(annotated_record(
            false, {SupportKind::kUnsupported, SupportKind::kSupported}))
            .empty());
}

TEST_CASE("conflict detection needs annotations and a verdict") {
  RagRecord bare = make_record("bare");
  CHECK_THROWS_AS(detect_conflicts(bare), MissingAnnotations);

  RagRecord no_verdict = annotated_record(
      true, {SupportKind::kSupported, SupportKind::kSupported});
  no_verdict.response_level_supported.reset();
  CHECK_THROWS_AS(detect_conflicts(no_verdict), MissingAnnotations);

  RagRecord partial = annotated_record(
      true, {SupportKind::kSupported, SupportKind::kSupported});
  partial.annotations->pop_back();
  CHECK_THROWS_AS(detect_conflicts(partial), MissingAnnotations);
}

namespace {

// Scripted annotator: emits conflicting results for the first
// `conflicts_before_clean` calls, then consistent ones; throws for the
// first `throws` calls.
class ScriptedAnnotator final : public AnnotatorClient {
 public:
  explicit ScriptedAnnotator(int conflicts_before_clean, int throws = 0)
      : conflicts_left_(conflicts_before_clean), throws_left_(throws) {}

  AnnotationResult annotate(const AnnotationRequest& request) override {
    ++calls_;
    if (throws_left_ > 0) {
      --throws_left_;
      throw std::runtime_error("transport glitch");
    }
    AnnotationResult result;
    const bool conflicting = conflicts_left_ > 0;
    if (conflicting) --conflicts_left_;
    // Conflicting shape: response-level supported while sentence 1 is not.
    result.response_level_supported = true;
    for (std::size_t s = 0; s < request.response_sentences.size(); ++s) {
      SupportAnnotation a;
      a.response_sentence_index = static_cast<int>(s);
      if (conflicting && s == 1) {
        a.kind = SupportKind::kUnsupported;
      } else {
        a.kind = SupportKind::kSupported;
        a.refs = {{0, 0}};
      }
      result.annotations.push_back(a);
    }
    return result;
  }

  int calls() const { return calls_; }

 private:
  int conflicts_left_;
  int throws_left_;
  int calls_ = 0;
};

}  // namespace

TEST_CASE("clean on the first attempt") {
  ScriptedAnnotator client(0);
  const auto [record, report] = reconcile(make_record("r"), client, 3);
  CHECK(report.attempts == 1);
  CHECK(report.status == ReconcileStatus::kClean);
  CHECK(record.annotations->size() == 2);
  CHECK(*record.response_level_supported);
}

TEST_CASE("conflicts twice then agreement resolves within three attempts") {
  ScriptedAnnotator client(2);
  const auto [record, report] = reconcile(make_record("r"), client, 3);
  CHECK(report.attempts == 3);
  CHECK(report.status == ReconcileStatus::kClean);
  CHECK(detect_conflicts(record).empty());
}

TEST_CASE("persistent conflicts resolve to unsupported on both levels") {
  ScriptedAnnotator client(100);
  const auto [record, report] = reconcile(make_record("r"), client, 3);
  CHECK(report.attempts == 3);
  CHECK(report.status == ReconcileStatus::kResolvedPartial);
  REQUIRE(report.conflicts.size() == 1);
  CHECK(report.conflicts[0].sentence_index == 1);

  // The conflicted sentence is forced unsupported; the example level too.
  CHECK((*record.annotations)[1].kind == SupportKind::kUnsupported);
  CHECK((*record.annotations)[0].kind == SupportKind::kSupported);
  CHECK_FALSE(*record.response_level_supported);
  CHECK(detect_conflicts(record).empty());
}

TEST_CASE("transport glitches are retried within the attempt budget") {
  ScriptedAnnotator client(0, 1);
  const auto [record, report] = reconcile(make_record("r"), client, 3);
  CHECK(report.attempts == 2);
  CHECK(report.status == ReconcileStatus::kClean);
}

TEST_CASE("all attempts failing raises AnnotatorFailure") {
  ScriptedAnnotator client(0, 99);
  CHECK_THROWS_AS(reconcile(make_record("r"), client, 3), AnnotatorFailure);
  CHECK(client.calls() == 3);
}

TEST_CASE("reconcile_all preserves order under concurrency") {
  std::vector<RagRecord> records;
  for (int i = 0; i < 12; ++i) {
    records.push_back(make_record("r" + std::to_string(i)));
  }
  ScriptedAnnotator client(0);
  const auto results = reconcile_all(std::move(records), client, 3);
  REQUIRE(results.size() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK(results[i].first.example.id == "r" + std::to_string(i));
    CHECK(results[i].second.status == ReconcileStatus::kClean);
  }
  CHECK(client.calls() == 12);
}

TEST_CASE("drop rule: annotations lose dropped evidence, never gain any") {
  std::vector<RagRecord> batch;
  // Record 0: sentence 0 supported only by doc0, sentence 1 only by doc1.
  RagRecord sole = make_record("sole");
  sole.annotations = std::vector<SupportAnnotation>{
      {0, SupportKind::kSupported, {{0, 0}}},
      {1, SupportKind::kSupported, {{1, 0}}},
  };
  sole.response_level_supported = true;
  // Record 1: sentence 0 has dual evidence in both docs; sentence 1 none.
  RagRecord dual = make_record("dual");
  dual.annotations = std::vector<SupportAnnotation>{
      {0, SupportKind::kSupported, {{0, 0}, {1, 1}}},
      {1, SupportKind::kUnsupported, {}},
  };
  dual.response_level_supported = false;
  batch.push_back(sole);
  batch.push_back(dual);

  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto out = transform_drop_insert(batch, seed);
    REQUIRE(out.size() == 2);

    for (std::size_t r = 0; r < 2; ++r) {
      REQUIRE(out[r].example.context.size() == 2);  // dropped 1, gained 1
      const bool dropped_doc0 = out[r].example.context[0].id == "doc1";
      const auto& annotations = *out[r].annotations;

      if (r == 0) {
        // Sole evidence: the sentence whose only doc was dropped flips.
        const int dropped_sentence = dropped_doc0 ? 0 : 1;
        const int surviving_sentence = 1 - dropped_sentence;
        CHECK(annotations[dropped_sentence].kind == SupportKind::kUnsupported);
        CHECK(annotations[dropped_sentence].refs.empty());
        CHECK(annotations[surviving_sentence].kind == SupportKind::kSupported);
        // The surviving ref points at the surviving doc, reindexed to 0.
        REQUIRE(annotations[surviving_sentence].refs.size() == 1);
        CHECK(annotations[surviving_sentence].refs[0].doc_index == 0);
        CHECK_FALSE(*out[r].response_level_supported);
      } else {
        // Dual evidence survives any single drop.
        CHECK(annotations[0].kind == SupportKind::kSupported);
        REQUIRE(annotations[0].refs.size() == 1);
        CHECK(annotations[0].refs[0].doc_index == 0);
        // Unsupported never becomes supported.
        CHECK(annotations[1].kind == SupportKind::kUnsupported);
      }
    }

    // Determinism: same seed, same output.
    const auto again = transform_drop_insert(batch, seed);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(record_to_json(out[r]).dump() == record_to_json(again[r]).dump());
    }
  }
}

TEST_CASE("insertion alone never changes annotations") {
  std::vector<RagRecord> batch;
  for (int i = 0; i < 3; ++i) {
    RagRecord record = make_record("single" + std::to_string(i), 1);
    record.annotations = std::vector<SupportAnnotation>{
        {0, SupportKind::kSupported, {{0, 0}}},
        {1, SupportKind::kGenerallySupported, {}},
    };
    record.response_level_supported = true;
    batch.push_back(record);
  }
  const auto out = transform_drop_insert(batch, 7);
  for (const auto& record : out) {
    REQUIRE(record.example.context.size() == 2);  // only the insertion
    CHECK((*record.annotations)[0].kind == SupportKind::kSupported);
    CHECK((*record.annotations)[0].refs ==
          std::vector<ContextSentenceRef>{{0, 0}});
    CHECK((*record.annotations)[1].kind == SupportKind::kGenerallySupported);
    CHECK(*record.response_level_supported);
  }
}

TEST_CASE("shuffle deranges questions and voids support") {
  for (std::size_t n : {std::size_t{2}, std::size_t{3}, std::size_t{5}}) {
    std::vector<RagRecord> batch;
    for (std::size_t i = 0; i < n; ++i) {
      RagRecord record = make_record("rec" + std::to_string(i));
      record.example.question = "question " + std::to_string(i) + "?";
      record.example.response =
          "Response " + std::to_string(i) + " one. And two.";
      record.annotations = std::vector<SupportAnnotation>{
          {0, SupportKind::kSupported, {{0, 0}}},
          {1, SupportKind::kGenerallySupported, {}},
      };
      record.response_level_supported = true;
      batch.push_back(record);
    }

    for (std::uint64_t seed : {1ULL, 42ULL, 999ULL}) {
      const auto out = transform_shuffle_qr(batch, seed);
      REQUIRE(out.size() == n);

      std::multiset<std::string> questions_in, questions_out;
      for (std::size_t i = 0; i < n; ++i) {
        questions_in.insert(batch[i].example.question);
        questions_out.insert(out[i].example.question);
        // Derangement: nobody keeps their own question/response.
        CHECK(out[i].example.question != batch[i].example.question);
        CHECK(out[i].example.response != batch[i].example.response);
        // Context stays home; support is voided.
        CHECK(out[i].example.context[0].id == batch[i].example.context[0].id);
        CHECK_FALSE(*out[i].response_level_supported);
        REQUIRE(out[i].annotations.has_value());
        CHECK(out[i].annotations->size() == 2);  // sentences of new response
        for (const auto& a : *out[i].annotations) {
          CHECK(a.kind == SupportKind::kUnsupported);
        }
      }
      CHECK(questions_in == questions_out);  // a permutation, nothing lost

      const auto again = transform_shuffle_qr(batch, seed);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(record_to_json(out[i]).dump() == record_to_json(again[i]).dump());
      }
    }
  }
}

TEST_CASE("transforms require a usable batch") {
  CHECK_THROWS_AS(transform_drop_insert({make_record("only")}, 1),
                  InvalidConfig);
  CHECK_THROWS_AS(transform_shuffle_qr({make_record("only")}, 1),
                  InvalidConfig);
}

TEST_CASE("JSONL round-trip preserves records structurally") {
  std::vector<RagRecord> records;
  records.push_back(make_record("plain"));
  records.push_back(annotated_record(
      true, {SupportKind::kSupported, SupportKind::kGenerallySupported}));
  RagRecord with_split = make_record("test-split");
  with_split.split = Split::kTest;
  with_split.domain = "legal";
  with_split.generator = "";
  records.push_back(with_split);

  std::stringstream buffer;
  write_jsonl(buffer, records);
  const auto back = read_jsonl(buffer);

  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(record_to_json(back[i]).dump() == record_to_json(records[i]).dump());
  }
}

TEST_CASE("invalid JSONL lines are reported with positions") {
  std::stringstream buffer("{\"id\": \"a\"}\nnot json\n");
  CHECK_THROWS_AS(read_jsonl(buffer), ParseError);
}

TEST_CASE("annotation requests expose sentence views") {
  const auto request = annotation_request_for(make_record("r"));
  CHECK(request.question == "what is the fact?");
  REQUIRE(request.context_sentences.size() == 2);
  CHECK(request.context_sentences[0].size() == 2);
  CHECK(request.context_sentences[0][0] == "fact0 alpha beta.");
  REQUIRE(request.response_sentences.size() == 2);
  CHECK(request.response_sentences[0] == "Claim one.");
  CHECK(request.response_sentences[1] == "Claim two.");
}
