#include "chartpot/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "chartpot/error.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kImagePlaceholder = "<img_placeholder>";

std::string image_url(const std::string& ref) {
  if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0 || ref.rfind("data:", 0) == 0) return ref;
  std::ifstream in(ref, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read image '" + ref + "'");
  std::ostringstream bytes;
  bytes << in.rdbuf();
  std::string ext = std::filesystem::path(ref).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string mime = "image/png";
  if (ext == ".jpg" || ext == ".jpeg") mime = "image/jpeg";
  else if (ext == ".gif") mime = "image/gif";
  else if (ext == ".webp") mime = "image/webp";
  return "data:" + mime + ";base64," + httplib::detail::base64_encode(bytes.str());
}

json message_content(const ChatTurn& turn) {
  if (!turn.image_ref) return turn.text;
  // The image part takes the placeholder's position; without one it leads.
  std::string before;
  std::string after = turn.text;
  if (auto at = turn.text.find(kImagePlaceholder); at != std::string::npos) {
    before = turn.text.substr(0, at);
    after = turn.text.substr(at + kImagePlaceholder.size());
    if (!after.empty() && after.front() == '\n') after.erase(0, 1);
  }
  json parts = json::array();
  if (!before.empty()) parts.push_back({{"type", "text"}, {"text", before}});
  parts.push_back({{"type", "image_url"}, {"image_url", {{"url", image_url(*turn.image_ref)}}}});
  if (!after.empty()) parts.push_back({{"type", "text"}, {"text", after}});
  return parts;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void ModelEndpoint::validate() const {
  const bool scheme = base_url.rfind("http://", 0) == 0 || base_url.rfind("https://", 0) == 0;
  const auto host_start = base_url.find("://");
  if (!scheme || host_start == std::string::npos || host_start + 3 >= base_url.size() ||
      base_url[host_start + 3] == '/') {
    throw Error(ErrorCode::kConfig, "endpoint base_url must be an http(s) URL, got '" + base_url + "'");
  }
  if (model_id.empty()) throw Error(ErrorCode::kConfig, "endpoint model_id is empty");
  if (max_retries < 0) throw Error(ErrorCode::kConfig, "endpoint max_retries must be >= 0");
  if (request_timeout_ms <= 0) throw Error(ErrorCode::kConfig, "endpoint request_timeout_ms must be positive");
  if (max_concurrency <= 0) throw Error(ErrorCode::kConfig, "endpoint max_concurrency must be positive");
  if (!find_chat_template(chat_template)) {
    throw Error(ErrorCode::kConfig, "endpoint chat_template '" + chat_template + "' is not registered");
  }
}

void DecodeParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kConfig, "temperature must be >= 0");
  if (!(repetition_penalty > 0.0)) throw Error(ErrorCode::kConfig, "repetition_penalty must be > 0");
  if (max_new_tokens <= 0) throw Error(ErrorCode::kConfig, "max_new_tokens must be positive");
  if (!(banned_fraction >= 0.0 && banned_fraction <= 1.0)) {
    throw Error(ErrorCode::kConfig, "banned_fraction must be within [0, 1]");
  }
}

DecodeParams dict_decode_params() { return {}; }

DecodeParams code_decode_params() {
  DecodeParams p;
  p.banned_substrings = {"#"};
  return p;
}

DecodeParams summary_decode_params() {
  DecodeParams p;
  p.max_new_tokens = 512;
  return p;
}

double banned_share(std::string_view text, const std::vector<std::string>& banned) {
  if (text.empty() || banned.empty()) return 0.0;
  std::vector<bool> governed(text.size(), false);
  for (const auto& b : banned) {
    if (b.empty()) continue;
    for (auto at = text.find(b); at != std::string_view::npos; at = text.find(b, at + 1)) {
      auto end = text.find('\n', at);
      if (end == std::string_view::npos) end = text.size();
      for (auto k = at; k < end; ++k) governed[k] = true;
    }
  }
  std::size_t count = 0;
  for (bool g : governed) count += g ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(text.size());
}

std::string build_request_body(const ModelEndpoint& endpoint, const std::vector<ChatTurn>& turns,
                               const DecodeParams& params) {
  json messages = json::array();
  for (const auto& t : turns) {
    if (t.image_ref && t.role != Role::kUser) {
      throw Error(ErrorCode::kImageOnNonUserTurn, "image attached to a " + std::string(to_string(t.role)) + " turn");
    }
    if (t.image_ref && !endpoint.supports_images) {
      throw Error(ErrorCode::kImageUnsupported, "endpoint model '" + endpoint.model_id + "' does not accept images");
    }
    messages.push_back({{"role", to_string(t.role)}, {"content", message_content(t)}});
  }
  json body = {
      {"model", endpoint.model_id},
      {"messages", std::move(messages)},
      {"temperature", params.temperature},
      {"repetition_penalty", params.repetition_penalty},
      {"max_tokens", params.max_new_tokens},
      {"stop", params.stop_sequences},
  };
  if (!turns.empty() && turns.back().role == Role::kAssistant) {
    body["continue_final_message"] = true;
    body["add_generation_prompt"] = false;
  }
  return body.dump();
}

std::string parse_response_body(std::string_view body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kTransport, "response is not JSON");
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::kTransport, "response has no choices");
  }
  const json& first = (*choices)[0];
  if (auto msg = first.find("message"); msg != first.end() && msg->is_object()) {
    if (auto content = msg->find("content"); content != msg->end()) {
      if (content->is_string()) return content->get<std::string>();
      if (content->is_null()) return {};
    }
  }
  if (auto text = first.find("text"); text != first.end() && text->is_string()) return text->get<std::string>();
  throw Error(ErrorCode::kTransport, "response choice has no text content");
}

class LlmClient::Gate {
 public:
  explicit Gate(int slots) : free_(slots) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int free_;
};

LlmClient::LlmClient(std::shared_ptr<Transport> transport, BackoffPolicy backoff, Sleeper sleeper)
    : transport_(std::move(transport)), backoff_(backoff), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

LlmClient::~LlmClient() = default;

LlmClient::Gate& LlmClient::gate_for(const ModelEndpoint& endpoint) {
  std::lock_guard lock(mu_);
  auto& slot = gates_[endpoint.base_url + "|" + endpoint.model_id];
  if (!slot) slot = std::make_unique<Gate>(endpoint.max_concurrency);
  return *slot;
}

std::chrono::milliseconds LlmClient::backoff_delay(int attempt) {
  double cap = static_cast<double>(backoff_.base.count());
  for (int k = 1; k < attempt; ++k) cap *= backoff_.factor;
  if (!backoff_.jitter) return std::chrono::milliseconds(static_cast<std::int64_t>(cap));
  std::lock_guard lock(mu_);
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::milliseconds(static_cast<std::int64_t>(dist(rng_)));
}

Completion LlmClient::complete(const ModelEndpoint& endpoint, const std::vector<ChatTurn>& turns,
                               const DecodeParams& params) {
  HttpRequest request;
  std::string url = endpoint.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  request.url = url + "/chat/completions";
  request.timeout_ms = endpoint.request_timeout_ms;
  request.headers.emplace_back("Content-Type", "application/json");
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (key == nullptr || *key == '\0') throw Error(ErrorCode::kAuthMissing, endpoint.api_key_env);
    request.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  request.body = build_request_body(endpoint, turns, params);

  Gate& gate = gate_for(endpoint);
  struct Slot {
    explicit Slot(Gate& g) : gate(g) { gate.acquire(); }
    ~Slot() { gate.release(); }
    Gate& gate;
  } slot(gate);

  Completion out;
  for (int attempt = 1;; ++attempt) {
    out.attempts = attempt;
    const bool last = attempt > endpoint.max_retries;
    std::optional<HttpResponse> resp;
    try {
      resp = transport_->post(request);
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::kTransport || e.code() == ErrorCode::kTimeout;
      if (!transient || last) throw;
    }
    if (resp) {
      if (resp->status >= 200 && resp->status < 300) {
        out.text = parse_response_body(resp->body);
        break;
      }
      if (!retryable_status(resp->status) || last) {
        throw Error(ErrorCode::kTransport, "HTTP " + std::to_string(resp->status) + " from " + request.url);
      }
    }
    sleeper_(backoff_delay(attempt));
  }
  out.flagged = banned_share(out.text, params.banned_substrings) > params.banned_fraction;
  return out;
}

}  // namespace chartpot
