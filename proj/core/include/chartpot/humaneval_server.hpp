#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "chartpot/humaneval.hpp"

namespace chartpot {

struct HumanEvalOptions {
  std::vector<PreferencePair> pairs;
  std::filesystem::path choice_log;  // append-only; replayed on start
  std::filesystem::path image_dir;   // served under /images/
  std::string admin_token;           // required by GET /scores
  /// Divisor for the scores; 0 uses the number of evaluators with choices.
  int evaluators = 0;
};

/// Blinded pairwise-preference service:
///
///   POST /session                  {"evaluator_id"?} -> {"session_id", "total"}
///   GET  /session/{id}/next        next pair (texts and image URL only) or {"complete": true}
///   POST /session/{id}/choice      {"pair_id", "side": "left"|"right"}
///   GET  /scores                   Authorization: Bearer <admin token>
///   GET  /images/...               static chart images
///
/// System labels never appear in evaluator-facing responses.
class HumanEvalServer {
 public:
  explicit HumanEvalServer(HumanEvalOptions options);
  ~HumanEvalServer();
  HumanEvalServer(const HumanEvalServer&) = delete;
  HumanEvalServer& operator=(const HumanEvalServer&) = delete;

  /// Binds `host` (port 0 picks a free port) and serves on a background
  /// thread. Returns the port. Throws Error(kIo) when binding fails.
  int start(int port = 0, const std::string& host = "127.0.0.1");
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(int port, const std::string& host = "127.0.0.1");
  void stop();
  std::string base_url() const;

  ChoiceStore& store();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace chartpot
