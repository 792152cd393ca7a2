#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>

#include "chartpot/chat_template.hpp"
#include "chartpot/error.hpp"
#include "chartpot/llm_client.hpp"
#include "chartpot/mock_model.hpp"
#include "test_support.hpp"

using namespace chartpot;
using json = nlohmann::json;

namespace {

ModelEndpoint endpoint(bool images = true) {
  ModelEndpoint e;
  e.base_url = "http://127.0.0.1:9/v1";
  e.model_id = "m";
  e.api_key_env.clear();
  e.supports_images = images;
  e.max_retries = 3;
  return e;
}

LlmClient client_for(std::shared_ptr<Transport> t) {
  return LlmClient(std::move(t), BackoffPolicy{}, [](std::chrono::milliseconds) {});
}

std::shared_ptr<ScriptedModel> answering(std::vector<int> statuses, std::string text = "ok") {
  ScriptRule rule;
  rule.contains = {"model: m"};
  rule.statuses = std::move(statuses);
  rule.responses.assign(rule.statuses.size(), text);
  return std::make_shared<ScriptedModel>(std::vector<ScriptRule>{rule});
}

}  // namespace

TEST(ChatTemplate, RendersImStartTurns) {
  const std::vector<ChatTurn> turns{ChatTurn::system("sys"), ChatTurn::user("hi")};
  EXPECT_EQ(render_chat(kImStartTemplate, turns),
            "<|im_start|>system\nsys<|im_end|>\n<|im_start|>user\nhi<|im_end|>\n<|im_start|>assistant\n");
}

TEST(ChatTemplate, PrefillStaysOpen) {
  const std::vector<ChatTurn> turns{ChatTurn::user("hi"), ChatTurn::assistant("```python\n")};
  EXPECT_EQ(render_chat(kImStartTemplate, turns), "<|im_start|>user\nhi<|im_end|>\n<|im_start|>assistant\n```python\n");
  EXPECT_EQ(render_chat(kPassthroughTemplate, turns), "hi\n```python\n");
}

TEST(ChatTemplate, Errors) {
  EXPECT_THROW(render_chat("no-such-template", {ChatTurn::user("x")}), Error);
  ChatTurn bad = ChatTurn::assistant("x");
  bad.image_ref = "a.png";
  try {
    render_chat(kImStartTemplate, {bad});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImageOnNonUserTurn);
  }
}

TEST(ChatTemplate, CustomTemplatesRegister) {
  register_chat_template("test-brackets", ChatTemplate{"<s>", "[S]", "[U]", "[A]", "[/]\n", false});
  EXPECT_EQ(render_chat("test-brackets", {ChatTurn::user("q")}), "<s>[U]q[/]\n[A]");
}

TEST(RequestBody, CarriesDecodeParameters) {
  DecodeParams p = summary_decode_params();
  const json body = json::parse(build_request_body(endpoint(), {ChatTurn::user("hi")}, p));
  EXPECT_EQ(body["model"], "m");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.2);
  EXPECT_DOUBLE_EQ(body["repetition_penalty"].get<double>(), 1.2);
  EXPECT_EQ(body["max_tokens"], 512);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_FALSE(body.contains("continue_final_message"));
}

TEST(RequestBody, DefaultsMatchRunParameters) {
  for (const DecodeParams& p : {dict_decode_params(), code_decode_params(), summary_decode_params()}) {
    EXPECT_DOUBLE_EQ(p.temperature, 0.2);
    EXPECT_DOUBLE_EQ(p.repetition_penalty, 1.2);
  }
  EXPECT_EQ(code_decode_params().banned_substrings, std::vector<std::string>{"#"});
}

TEST(RequestBody, PrefillContinuesFinalMessage) {
  const json body = json::parse(
      build_request_body(endpoint(), {ChatTurn::user("hi"), ChatTurn::assistant("pre")}, dict_decode_params()));
  EXPECT_EQ(body["continue_final_message"], true);
  EXPECT_EQ(body["add_generation_prompt"], false);
  EXPECT_EQ(body["messages"][1]["content"], "pre");
}

TEST(RequestBody, ImageTakesPlaceholderPosition) {
  const json body = json::parse(build_request_body(
      endpoint(), {ChatTurn::user("<img_placeholder>\nDescribe.", "https://x.invalid/c.png")}, dict_decode_params()));
  const json& parts = body["messages"][0]["content"];
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0]["type"], "image_url");
  EXPECT_EQ(parts[0]["image_url"]["url"], "https://x.invalid/c.png");
  EXPECT_EQ(parts[1]["text"], "Describe.");
}

TEST(RequestBody, LocalImagesBecomeDataUrls) {
  const std::string png = chartpot::testing::data_path("images/p001.png").string();
  const json body = json::parse(build_request_body(endpoint(), {ChatTurn::user("x", png)}, dict_decode_params()));
  const std::string url = body["messages"][0]["content"][0]["image_url"]["url"];
  EXPECT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
}

TEST(RequestBody, TextOnlyEndpointRejectsImages) {
  try {
    build_request_body(endpoint(false), {ChatTurn::user("x", "https://x.invalid/c.png")}, dict_decode_params());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kImageUnsupported);
  }
}

TEST(ResponseBody, Parses) {
  EXPECT_EQ(parse_response_body(R"({"choices": [{"message": {"content": "hey"}}]})"), "hey");
  EXPECT_EQ(parse_response_body(R"({"choices": [{"text": "raw"}]})"), "raw");
  EXPECT_THROW(parse_response_body("{}"), Error);
  EXPECT_THROW(parse_response_body("not json"), Error);
}

TEST(LlmClient, RetriesServerErrors) {
  auto model = answering({500, 500, 200});
  auto transport = std::make_shared<MockTransport>(model);
  LlmClient client = client_for(transport);
  const Completion c = client.complete(endpoint(), {ChatTurn::user("hi")}, dict_decode_params());
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(c.attempts, 3);
  EXPECT_EQ(transport->requests().size(), 3u);
  EXPECT_EQ(transport->requests()[0].url, "http://127.0.0.1:9/v1/chat/completions");
}

TEST(LlmClient, RetriesRateLimits) {
  auto transport = std::make_shared<MockTransport>(answering({429, 200}));
  LlmClient client = client_for(transport);
  EXPECT_EQ(client.complete(endpoint(), {ChatTurn::user("hi")}, dict_decode_params()).attempts, 2);
}

TEST(LlmClient, GivesUpAfterMaxRetries) {
  auto transport = std::make_shared<MockTransport>(answering({503}));
  LlmClient client = client_for(transport);
  ModelEndpoint e = endpoint();
  e.max_retries = 1;
  try {
    client.complete(e, {ChatTurn::user("hi")}, dict_decode_params());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kTransport);
  }
  EXPECT_EQ(transport->requests().size(), 2u);
}

TEST(LlmClient, ClientErrorsAreNotRetried) {
  auto transport = std::make_shared<MockTransport>(answering({400}));
  LlmClient client = client_for(transport);
  EXPECT_THROW(client.complete(endpoint(), {ChatTurn::user("hi")}, dict_decode_params()), Error);
  EXPECT_EQ(transport->requests().size(), 1u);
}

TEST(LlmClient, MissingCredentialNamesVariable) {
  ::unsetenv("CHARTPOT_API_KEY");
  auto transport = std::make_shared<MockTransport>(answering({200}));
  LlmClient client = client_for(transport);
  ModelEndpoint e = endpoint();
  e.api_key_env = "CHARTPOT_API_KEY";
  try {
    client.complete(e, {ChatTurn::user("hi")}, dict_decode_params());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kAuthMissing);
    EXPECT_NE(std::string(err.what()).find("CHARTPOT_API_KEY"), std::string::npos);
  }
  EXPECT_TRUE(transport->requests().empty());
}

TEST(LlmClient, SendsBearerToken) {
  ::setenv("CHARTPOT_TEST_KEY", "sekret", 1);
  auto transport = std::make_shared<MockTransport>(answering({200}));
  LlmClient client = client_for(transport);
  ModelEndpoint e = endpoint();
  e.api_key_env = "CHARTPOT_TEST_KEY";
  client.complete(e, {ChatTurn::user("hi")}, dict_decode_params());
  const auto requests = transport->requests();
  bool found = false;
  for (const auto& [k, v] : requests[0].headers) found = found || (k == "Authorization" && v == "Bearer sekret");
  EXPECT_TRUE(found);
}

TEST(LlmClient, FlagsCommentDominatedCode) {
  auto transport = std::make_shared<MockTransport>(answering({200}, "# step one\n# step two\nx = 1"));
  LlmClient client = client_for(transport);
  const Completion c = client.complete(endpoint(), {ChatTurn::user("hi")}, code_decode_params());
  EXPECT_TRUE(c.flagged);
  EXPECT_EQ(c.text, "# step one\n# step two\nx = 1");
}

TEST(BannedShare, CountsFromOccurrenceToLineEnd) {
  EXPECT_DOUBLE_EQ(banned_share("ab#cd", {"#"}), 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(banned_share("abc", {"#"}), 0.0);
  EXPECT_DOUBLE_EQ(banned_share("", {"#"}), 0.0);
  EXPECT_DOUBLE_EQ(banned_share("#a\nbb", {"#"}), 2.0 / 5.0);
}

TEST(MockServer, ServesOverHttp) {
  MockModelServer server(answering({200}, "over http"));
  server.start(0);
  LlmClient client(make_http_transport(), BackoffPolicy{}, [](std::chrono::milliseconds) {});
  ModelEndpoint e = endpoint();
  e.base_url = server.base_url();
  EXPECT_EQ(client.complete(e, {ChatTurn::user("hi")}, dict_decode_params()).text, "over http");
  server.stop();
}

TEST(MockServer, TransportErrorWhenNothingListens) {
  MockModelServer server(answering({200}));
  server.start(0);
  const std::string url = server.base_url();
  server.stop();
  LlmClient client(make_http_transport(), BackoffPolicy{}, [](std::chrono::milliseconds) {});
  ModelEndpoint e = endpoint();
  e.base_url = url;
  e.max_retries = 0;
  try {
    client.complete(e, {ChatTurn::user("hi")}, dict_decode_params());
    FAIL();
  } catch (const Error& err) {
    EXPECT_TRUE(err.code() == ErrorCode::kTransport || err.code() == ErrorCode::kTimeout);
  }
}

TEST(MockModel, TranscriptIncludesImages) {
  const std::string body = build_request_body(endpoint(), {ChatTurn::user("hi", "https://x.invalid/a.png")},
                                              dict_decode_params());
  const std::string t = request_transcript(body);
  EXPECT_NE(t.find("model: m"), std::string::npos);
  EXPECT_NE(t.find("[image https://x.invalid/a.png]"), std::string::npos);
}
