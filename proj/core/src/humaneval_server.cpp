#include "chartpot/humaneval_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fmt/format.h>

#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "chartpot/error.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, json{{"error", code}, {"message", message}});
}

std::string image_url(const std::string& path) {
  if (path.rfind("http://", 0) == 0 || path.rfind("https://", 0) == 0 || path.rfind("data:", 0) == 0) return path;
  // Only the file name is exposed; images live flat in the served directory.
  return "/images/" + std::filesystem::path(path).filename().string();
}

std::string new_token() {
  std::random_device rd;
  return fmt::format("{:016x}{:016x}", (std::uint64_t{rd()} << 32) | rd(), (std::uint64_t{rd()} << 32) | rd());
}

}  // namespace

struct HumanEvalServer::Impl {
  HumanEvalOptions options;
  std::unique_ptr<ChoiceStore> store;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string host;
  std::mutex mu;
  std::map<std::string, std::string> sessions;  // session id -> evaluator id

  std::optional<std::string> evaluator_of(const std::string& session) {
    std::lock_guard lock(mu);
    auto it = sessions.find(session);
    if (it == sessions.end()) return std::nullopt;
    return it->second;
  }

  json progress(const std::string& evaluator) const {
    return json{{"done", store->choices_by(evaluator)}, {"total", store->pairs().size()}};
  }

  void routes() {
    server.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
      std::string evaluator;
      if (!req.body.empty()) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "BadRequest", "body is not JSON");
        if (auto it = body.find("evaluator_id"); it != body.end()) {
          if (!it->is_string() || it->get<std::string>().empty()) {
            return send_error(res, 400, "BadRequest", "evaluator_id must be a non-empty string");
          }
          evaluator = it->get<std::string>();
        }
      }
      const std::string session = new_token();
      if (evaluator.empty()) evaluator = session;
      {
        std::lock_guard lock(mu);
        sessions[session] = evaluator;
      }
      send_json(res, 200, json{{"session_id", session}, {"total", store->pairs().size()}});
    });

    server.Get(R"(/session/([0-9a-f]+)/next)", [this](const httplib::Request& req, httplib::Response& res) {
      auto evaluator = evaluator_of(req.matches[1]);
      if (!evaluator) return send_error(res, 404, "UnknownSession", "no such session");
      for (const auto& p : store->pairs()) {
        if (store->has_choice(p.pair_id, *evaluator)) continue;
        return send_json(res, 200,
                         json{{"complete", false},
                              {"pair_id", p.pair_id},
                              {"image_url", image_url(p.image_path)},
                              {"left", {{"text", p.left_text}}},
                              {"right", {{"text", p.right_text}}},
                              {"progress", progress(*evaluator)}});
      }
      send_json(res, 200, json{{"complete", true}, {"progress", progress(*evaluator)}});
    });

    server.Post(R"(/session/([0-9a-f]+)/choice)", [this](const httplib::Request& req, httplib::Response& res) {
      auto evaluator = evaluator_of(req.matches[1]);
      if (!evaluator) return send_error(res, 404, "UnknownSession", "no such session");
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("pair_id") || !body["pair_id"].is_string() ||
          !body.contains("side") || !body["side"].is_string()) {
        return send_error(res, 400, "BadRequest", "expected {\"pair_id\": str, \"side\": \"left\"|\"right\"}");
      }
      const std::string pair_id = body["pair_id"].get<std::string>();
      const std::string side = body["side"].get<std::string>();
      const PreferencePair* p = store->find_pair(pair_id);
      if (p == nullptr) return send_error(res, 404, "UnknownPair", pair_id);
      if (side != "left" && side != "right") return send_error(res, 400, "InvalidChoice", "side must be left or right");
      try {
        store->record_choice(
            ChoiceRecord{pair_id, *evaluator, side == "left" ? p->left_system : p->right_system, utc_timestamp()});
      } catch (const Error& e) {
        const int status = e.code() == ErrorCode::kDuplicateChoice ? 409 : 500;
        return send_error(res, status, to_string(e.code()), e.code() == ErrorCode::kDuplicateChoice
                                                                 ? "choice already recorded for " + pair_id
                                                                 : std::string(e.what()));
      }
      send_json(res, 200, json{{"recorded", true}, {"progress", progress(*evaluator)}});
    });

    server.Get("/scores", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string expected = "Bearer " + options.admin_token;
      if (options.admin_token.empty() || req.get_header_value("Authorization") != expected) {
        return send_error(res, 401, "Unauthorized", "admin token required");
      }
      const auto choices = store->choices();
      std::vector<std::string> systems;
      for (const auto& p : store->pairs()) {
        for (const auto* s : {&p.left_system, &p.right_system}) {
          if (std::find(systems.begin(), systems.end(), *s) == systems.end()) systems.push_back(*s);
        }
      }
      const int evaluators =
          options.evaluators > 0 ? options.evaluators : std::max<int>(1, static_cast<int>(store->evaluator_count()));
      json scores = json::object();
      for (const auto& [system, score] : aggregate_scores(choices, evaluators, systems)) scores[system] = score;
      send_json(res, 200,
                json{{"evaluators", evaluators},
                     {"pairs", store->pairs().size()},
                     {"choices", choices.size()},
                     {"scores", std::move(scores)}});
    });

    if (!options.image_dir.empty()) server.set_mount_point("/images", options.image_dir.string());
  }
};

HumanEvalServer::HumanEvalServer(HumanEvalOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->store = std::make_unique<ChoiceStore>(options.pairs, options.choice_log);
  impl_->options = std::move(options);
  impl_->routes();
}

HumanEvalServer::~HumanEvalServer() { stop(); }

int HumanEvalServer::start(int port, const std::string& host) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port <= 0) throw Error(ErrorCode::kIo, fmt::format("cannot bind {}:{}", host, port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void HumanEvalServer::run(int port, const std::string& host) {
  impl_->host = host;
  impl_->port = port;
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::kIo, fmt::format("cannot listen on {}:{}", host, port));
}

void HumanEvalServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string HumanEvalServer::base_url() const { return fmt::format("http://{}:{}", impl_->host, impl_->port); }

ChoiceStore& HumanEvalServer::store() { return *impl_->store; }

}  // namespace chartpot
