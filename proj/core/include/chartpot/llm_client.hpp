#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "chartpot/chat_template.hpp"

namespace chartpot {

struct ModelEndpoint {
  std::string base_url;  // e.g. http://127.0.0.1:8000/v1
  std::string model_id;
  /// Environment variable holding the bearer token; empty means no auth.
  std::string api_key_env = "CHARTPOT_API_KEY";
  bool supports_images = false;
  std::int64_t request_timeout_ms = 120'000;
  int max_retries = 2;
  /// Template used to render transcripts for run records.
  std::string chat_template = std::string(kImStartTemplate);
  int max_concurrency = 4;

  /// Throws Error(kConfig) naming the first bad field.
  void validate() const;
  friend bool operator==(const ModelEndpoint&, const ModelEndpoint&) = default;
};

inline constexpr std::string_view kDefaultApiKeyEnv = "CHARTPOT_API_KEY";

struct DecodeParams {
  double temperature = 0.2;
  double repetition_penalty = 1.2;
  int max_new_tokens = 1024;
  std::vector<std::string> stop_sequences;
  /// Substrings the response should not lean on; see Completion::flagged.
  std::vector<std::string> banned_substrings;
  /// Share of response characters governed by banned substrings (from each
  /// occurrence to the end of its line) above which a response is flagged.
  double banned_fraction = 0.5;

  void validate() const;
  friend bool operator==(const DecodeParams&, const DecodeParams&) = default;
};

/// Defaults for the dictionary and code stages (1024 tokens, '#' banned for
/// code) and for summaries (512 tokens).
DecodeParams code_decode_params();
DecodeParams dict_decode_params();
DecodeParams summary_decode_params();

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::int64_t timeout_ms = 0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Blocking HTTP POST. Implementations throw Error(kTransport) for connection
/// failures and Error(kTimeout) when the deadline passes.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport (http, and https when built with OpenSSL).
std::shared_ptr<Transport> make_http_transport();

struct Completion {
  std::string text;
  int attempts = 0;
  /// Set when banned substrings govern more than DecodeParams::banned_fraction
  /// of the text. The text is returned unchanged.
  bool flagged = false;
};

struct BackoffPolicy {
  std::chrono::milliseconds base{250};
  double factor = 2.0;
  bool jitter = true;
};

/// Share of `text` governed by the banned substrings (see DecodeParams).
double banned_share(std::string_view text, const std::vector<std::string>& banned);

/// OpenAI-compatible chat-completions request body for one call.
/// Throws Error(kImageUnsupported) or Error(kIo) for unreadable images.
std::string build_request_body(const ModelEndpoint& endpoint, const std::vector<ChatTurn>& turns,
                               const DecodeParams& params);

/// Text of the first choice. Throws Error(kTransport) for malformed bodies.
std::string parse_response_body(std::string_view body);

/// Shareable chat-completions client with retries and a per-endpoint
/// admission gate.
class LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit LlmClient(std::shared_ptr<Transport> transport, BackoffPolicy backoff = {}, Sleeper sleeper = {});
  ~LlmClient();
  LlmClient(const LlmClient&) = delete;
  LlmClient& operator=(const LlmClient&) = delete;

  /// Sends one request, retrying transport errors, 429 and 5xx up to
  /// endpoint.max_retries times.
  ///
  /// Throws Error with kTransport, kTimeout, kAuthMissing (message: the
  /// variable name) or kImageUnsupported.
  Completion complete(const ModelEndpoint& endpoint, const std::vector<ChatTurn>& turns,
                      const DecodeParams& params);

 private:
  class Gate;
  Gate& gate_for(const ModelEndpoint& endpoint);
  std::chrono::milliseconds backoff_delay(int attempt);

  std::shared_ptr<Transport> transport_;
  BackoffPolicy backoff_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::mt19937_64 rng_{0x5eed};
  std::map<std::string, std::unique_ptr<Gate>> gates_;
};

}  // namespace chartpot
