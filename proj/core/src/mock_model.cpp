#include "chartpot/mock_model.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

#include "chartpot/error.hpp"

namespace chartpot {

using json = nlohmann::ordered_json;

namespace {

std::string completion_body(const std::string& model, const std::string& text) {
  json body = {
      {"object", "chat.completion"},
      {"model", model},
      {"choices", json::array({{{"index", 0},
                                {"message", {{"role", "assistant"}, {"content", text}}},
                                {"finish_reason", "stop"}}})},
  };
  return body.dump();
}

std::vector<std::string> string_list(const json& v, const char* field) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array()) throw Error(ErrorCode::kConfig, std::string("script field '") + field + "' must be a list");
  for (const auto& item : v) {
    if (!item.is_string()) throw Error(ErrorCode::kConfig, std::string("script field '") + field + "' holds a non-string");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

namespace {

// Data URLs are abbreviated to their media type and payload size.
std::string image_label(const std::string& url) {
  if (url.rfind("data:", 0) != 0) return url;
  const auto comma = url.find(',');
  if (comma == std::string::npos) return "data:";
  return url.substr(0, comma) + " (" + std::to_string(url.size() - comma - 1) + " chars)";
}

}  // namespace

std::string request_transcript(std::string_view request_body) {
  const json doc = json::parse(request_body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::string(request_body);
  std::string out = "model: " + doc.value("model", std::string()) + "\n";
  if (auto msgs = doc.find("messages"); msgs != doc.end() && msgs->is_array()) {
    for (const auto& m : *msgs) {
      const json& content = m.contains("content") ? m["content"] : json();
      if (content.is_string()) {
        out += content.get<std::string>();
      } else if (content.is_array()) {
        for (const auto& part : content) {
          if (part.value("type", "") == "text") out += part.value("text", "");
          if (part.value("type", "") == "image_url" && part.contains("image_url")) {
            out += "[image " + image_label(part["image_url"].value("url", std::string())) + "]";
          }
        }
      }
      out += '\n';
    }
  }
  return out;
}

ScriptedModel::ScriptedModel(std::vector<ScriptRule> rules, std::string fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

std::shared_ptr<ScriptedModel> ScriptedModel::from_json(std::string_view text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::kConfig, "mock script is not a JSON object");
  std::vector<ScriptRule> rules;
  if (auto rs = doc.find("rules"); rs != doc.end()) {
    if (!rs->is_array()) throw Error(ErrorCode::kConfig, "mock script 'rules' must be a list");
    for (const auto& r : *rs) {
      ScriptRule rule;
      if (r.contains("contains")) rule.contains = string_list(r["contains"], "contains");
      if (r.contains("responses")) rule.responses = string_list(r["responses"], "responses");
      if (r.contains("statuses")) {
        for (const auto& s : r["statuses"]) {
          if (!s.is_number_integer()) throw Error(ErrorCode::kConfig, "mock script statuses must be integers");
          rule.statuses.push_back(s.get<int>());
        }
      }
      if (rule.responses.empty() && rule.statuses.empty()) {
        throw Error(ErrorCode::kConfig, "mock script rule needs responses or statuses");
      }
      rules.push_back(std::move(rule));
    }
  }
  std::string fallback = doc.value("fallback", std::string());
  return std::make_shared<ScriptedModel>(std::move(rules), std::move(fallback));
}

std::shared_ptr<ScriptedModel> ScriptedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read mock script " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_json(text.str());
}

HttpResponse ScriptedModel::handle(std::string_view request_body) {
  const std::string transcript = request_transcript(request_body);
  const json doc = json::parse(request_body, nullptr, false);
  const std::string model = doc.is_object() ? doc.value("model", std::string()) : std::string();

  std::size_t nth = 0;
  {
    std::lock_guard lock(mu_);
    bodies_.emplace_back(request_body);
    nth = seen_[transcript]++;
  }
  for (const auto& rule : rules_) {
    bool match = true;
    for (const auto& needle : rule.contains) match = match && transcript.find(needle) != std::string::npos;
    if (!match) continue;
    const int status = rule.statuses.empty() ? 200 : rule.statuses[std::min(nth, rule.statuses.size() - 1)];
    if (status < 200 || status >= 300) return {status, R"({"error":{"message":"scripted failure"}})"};
    const std::string text = rule.responses.empty() ? std::string()
                                                    : rule.responses[std::min(nth, rule.responses.size() - 1)];
    return {status, completion_body(model, text)};
  }
  return {200, completion_body(model, fallback_)};
}

std::vector<std::string> ScriptedModel::request_bodies() const {
  std::lock_guard lock(mu_);
  return bodies_;
}

std::size_t ScriptedModel::request_count() const {
  std::lock_guard lock(mu_);
  return bodies_.size();
}

HttpResponse MockTransport::post(const HttpRequest& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  return model_->handle(request.body);
}

std::vector<HttpRequest> MockTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

struct MockModelServer::Impl {
  std::shared_ptr<ScriptedModel> model;
  httplib::Server server;
  std::thread thread;
  int port = 0;
};

MockModelServer::MockModelServer(std::shared_ptr<ScriptedModel> model) : impl_(std::make_unique<Impl>()) {
  impl_->model = std::move(model);
  impl_->server.Post(R"(.*/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse out = impl_->model->handle(req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  });
}

MockModelServer::~MockModelServer() { stop(); }

int MockModelServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  } else if (impl_->server.bind_to_port("127.0.0.1", port)) {
    impl_->port = port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port <= 0) throw Error(ErrorCode::kIo, "mock model server could not bind a port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void MockModelServer::stop() {
  if (impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

std::string MockModelServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1"; }

}  // namespace chartpot
