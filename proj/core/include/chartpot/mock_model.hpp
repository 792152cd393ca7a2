#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "chartpot/llm_client.hpp"

namespace chartpot {

/// One scripted behaviour. A request matches when every `contains` string
/// occurs in its transcript ("model: <id>" followed by the message texts;
/// image parts appear as "[image URL]").
/// The n-th identical request (counted per transcript) gets
/// responses[min(n, size - 1)] and statuses[min(n, size - 1)] (200 when empty).
struct ScriptRule {
  std::vector<std::string> contains;
  std::vector<std::string> responses;
  std::vector<int> statuses;
};

/// Deterministic stand-in for a chat-completions service. Responses depend
/// only on request content and how often that content was seen, so
/// concurrent callers get reproducible answers. Thread-safe.
class ScriptedModel {
 public:
  explicit ScriptedModel(std::vector<ScriptRule> rules, std::string fallback = {});

  /// {"rules": [{"contains": [...], "responses": [...], "statuses": [...]}], "fallback": "..."}
  /// Throws Error(kConfig) on malformed scripts, Error(kIo) for unreadable files.
  static std::shared_ptr<ScriptedModel> from_json(std::string_view text);
  static std::shared_ptr<ScriptedModel> load(const std::filesystem::path& path);

  /// Answers one chat-completions request body.
  HttpResponse handle(std::string_view request_body);

  std::vector<std::string> request_bodies() const;
  std::size_t request_count() const;

 private:
  std::vector<ScriptRule> rules_;
  std::string fallback_;
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> seen_;
  std::vector<std::string> bodies_;
};

/// Transcript used for rule matching.
std::string request_transcript(std::string_view request_body);

/// In-process transport answering every POST from a ScriptedModel.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(std::shared_ptr<ScriptedModel> model) : model_(std::move(model)) {}
  HttpResponse post(const HttpRequest& request) override;
  std::vector<HttpRequest> requests() const;

 private:
  std::shared_ptr<ScriptedModel> model_;
  mutable std::mutex mu_;
  std::vector<HttpRequest> requests_;
};

/// Localhost HTTP server exposing a ScriptedModel at any path ending in
/// /chat/completions.
class MockModelServer {
 public:
  explicit MockModelServer(std::shared_ptr<ScriptedModel> model);
  ~MockModelServer();
  MockModelServer(const MockModelServer&) = delete;
  MockModelServer& operator=(const MockModelServer&) = delete;

  /// Binds 127.0.0.1 (port 0 picks a free port) and serves on a background
  /// thread. Returns the bound port. Throws Error(kIo) when binding fails.
  int start(int port = 0);
  void stop();
  /// http://127.0.0.1:PORT/v1
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chartpot
