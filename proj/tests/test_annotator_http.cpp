#include "groundcheck/annotator_http.hpp"

#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

using namespace groundcheck;
using nlohmann::json;

namespace {

// Chat-completions stub capturing the last request.
class StubEndpoint {
 public:
  explicit StubEndpoint(std::string reply_content)
      : reply_content_(std::move(reply_content)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   last_body = req.body;
                   last_auth = req.get_header_value("Authorization");
                   const json reply{
                       {"choices",
                        json::array({{{"message",
                                       {{"role", "assistant"},
                                        {"content", reply_content_}}}}})}};
                   res.set_content(reply.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    while (!server_.is_running()) std::this_thread::yield();
  }

  ~StubEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

  std::string last_body;
  std::string last_auth;

 private:
  std::string reply_content_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

AnnotationRequest sample_request() {
  AnnotationRequest request;
  request.question = "who founded it?";
  request.context_sentences = {{"The firm was founded by Ada.",
                                "It is based in Lisbon."},
                               {"Revenue grew last year."}};
  request.response_sentences = {"Ada founded the firm.",
                                "It is headquartered in Lisbon."};
  return request;
}

}  // namespace

TEST_CASE("annotate round-trips through a chat endpoint") {
  const std::string content =
      "Let me check each claim against the context.\n"
      "Claim 0 matches document 0 sentence 0; claim 1 matches sentence 1.\n"
      "```json\n"
      "{\"response_supported\": true, \"sentences\": ["
      "{\"index\": 0, \"kind\": \"supported\", \"refs\": [[0, 0]]},"
      "{\"index\": 1, \"kind\": \"supported\", \"refs\": [[0, 1]]}]}\n"
      "```";
  StubEndpoint endpoint(content);

  HttpAnnotatorConfig config;
  config.base_url = endpoint.base_url();
  config.api_key = "test-key";
  HttpAnnotatorClient client(config);

  const auto result = client.annotate(sample_request());
  CHECK(result.response_level_supported);
  REQUIRE(result.annotations.size() == 2);
  CHECK(result.annotations[0].kind == SupportKind::kSupported);
  CHECK(result.annotations[0].refs ==
        std::vector<ContextSentenceRef>{{0, 0}});
  CHECK(result.annotations[1].refs ==
        std::vector<ContextSentenceRef>{{0, 1}});

  // The endpoint saw the key, the model, and the numbered sentences.
  CHECK(endpoint.last_auth == "Bearer test-key");
  const json body = json::parse(endpoint.last_body);
  CHECK(body.at("model") == "gpt-4-turbo");
  const std::string prompt = body.at("messages")[0].at("content");
  CHECK(prompt.find("who founded it?") != std::string::npos);
  CHECK(prompt.find("[0,0] The firm was founded by Ada.") != std::string::npos);
  CHECK(prompt.find("[1,0] Revenue grew last year.") != std::string::npos);
  CHECK(prompt.find("[1] It is headquartered in Lisbon.") != std::string::npos);
}

TEST_CASE("partially supported maps to unsupported") {
  const std::string content =
      "{\"response_supported\": true, \"sentences\": ["
      "{\"index\": 0, \"kind\": \"partially_supported\"},"
      "{\"index\": 1, \"kind\": \"generally_supported\"}]}";
  StubEndpoint endpoint(content);

  HttpAnnotatorConfig config;
  config.base_url = endpoint.base_url();
  HttpAnnotatorClient client(config);

  const auto result = client.annotate(sample_request());
  CHECK(result.annotations[0].kind == SupportKind::kUnsupported);
  CHECK(result.annotations[1].kind == SupportKind::kGenerallySupported);
}

TEST_CASE("malformed payloads raise AnnotatorFailure") {
  SUBCASE("no JSON at all") {
    StubEndpoint endpoint("I cannot help with that.");
    HttpAnnotatorConfig config;
    config.base_url = endpoint.base_url();
    HttpAnnotatorClient client(config);
    CHECK_THROWS_AS(client.annotate(sample_request()), AnnotatorFailure);
  }
  SUBCASE("missing sentences") {
    StubEndpoint endpoint(
        "{\"response_supported\": true, \"sentences\": ["
        "{\"index\": 0, \"kind\": \"supported\", \"refs\": [[0, 0]]}]}");
    HttpAnnotatorConfig config;
    config.base_url = endpoint.base_url();
    HttpAnnotatorClient client(config);
    CHECK_THROWS_AS(client.annotate(sample_request()), AnnotatorFailure);
  }
  SUBCASE("supported without refs") {
    StubEndpoint endpoint(
        "{\"response_supported\": true, \"sentences\": ["
        "{\"index\": 0, \"kind\": \"supported\"},"
        "{\"index\": 1, \"kind\": \"unsupported\"}]}");
    HttpAnnotatorConfig config;
    config.base_url = endpoint.base_url();
    HttpAnnotatorClient client(config);
    CHECK_THROWS_AS(client.annotate(sample_request()), AnnotatorFailure);
  }
}

TEST_CASE("unreachable endpoints raise AnnotatorFailure") {
  HttpAnnotatorConfig config;
  config.base_url = "http://127.0.0.1:1";  // nothing listens here
  config.timeout_seconds = 1;
  HttpAnnotatorClient client(config);
  CHECK_THROWS_AS(client.annotate(sample_request()), AnnotatorFailure);
}

TEST_CASE("generation prompt uses the stock template") {
  HttpAnnotatorConfig config;
  config.base_url = "http://127.0.0.1:9";  // never contacted
  HttpAnnotatorClient client(config);

  const std::vector<Document> docs = {{"a", "First doc text."},
                                      {"b", "Second doc text."}};
  const auto prompt = client.render_generation_prompt("what happened?", docs);
  CHECK(prompt ==
        "Use the following pieces of context to answer the question.\n"
        "\n"
        "First doc text.\nSecond doc text.\n"
        "\n"
        "Question: what happened?");
}

TEST_CASE("templates can be overridden via config") {
  HttpAnnotatorConfig config;
  config.base_url = "http://127.0.0.1:9";
  config.generation_template = "CTX:{documents} Q:{question}";
  HttpAnnotatorClient client(config);
  CHECK(client.render_generation_prompt("q?", {{"a", "text"}}) ==
        "CTX:text Q:q?");
}

TEST_CASE("environment variables feed the default config") {
  setenv("GROUNDCHECK_ANNOTATOR_BASE_URL", "http://127.0.0.1:9", 1);
  setenv("GROUNDCHECK_ANNOTATOR_API_KEY", "env-key", 1);
  const auto config = HttpAnnotatorConfig::from_env();
  CHECK(config.base_url == "http://127.0.0.1:9");
  CHECK(config.api_key == "env-key");
  unsetenv("GROUNDCHECK_ANNOTATOR_BASE_URL");
  unsetenv("GROUNDCHECK_ANNOTATOR_API_KEY");
}

TEST_CASE("missing base URL is rejected up front") {
  unsetenv("GROUNDCHECK_ANNOTATOR_BASE_URL");
  HttpAnnotatorConfig config;
  CHECK_THROWS_AS(HttpAnnotatorClient{config}, InvalidConfig);
}
