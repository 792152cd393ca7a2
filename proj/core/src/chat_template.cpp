#include "chartpot/chat_template.hpp"

#include <map>
#include <mutex>

#include "chartpot/error.hpp"

namespace chartpot {

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, ChatTemplate, std::less<>> templates;

  Registry() {
    templates.emplace(std::string(kImStartTemplate),
                      ChatTemplate{"", "<|im_start|>system\n", "<|im_start|>user\n", "<|im_start|>assistant\n",
                                   "<|im_end|>\n", false});
    ChatTemplate pass;
    pass.passthrough = true;
    templates.emplace(std::string(kPassthroughTemplate), pass);
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "user";
}

void register_chat_template(std::string id, ChatTemplate tmpl) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  r.templates.insert_or_assign(std::move(id), std::move(tmpl));
}

std::optional<ChatTemplate> find_chat_template(std::string_view id) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  if (auto it = r.templates.find(id); it != r.templates.end()) return it->second;
  return std::nullopt;
}

std::string render_chat(std::string_view template_id, const std::vector<ChatTurn>& turns) {
  const auto tmpl = find_chat_template(template_id);
  if (!tmpl) throw Error(ErrorCode::kUnknownTemplate, "unknown chat template '" + std::string(template_id) + "'");
  for (const auto& t : turns) {
    if (t.image_ref && t.role != Role::kUser) {
      throw Error(ErrorCode::kImageOnNonUserTurn, "image attached to a " + std::string(to_string(t.role)) + " turn");
    }
  }

  std::string out;
  if (tmpl->passthrough) {
    for (std::size_t k = 0; k < turns.size(); ++k) {
      if (k > 0) out += '\n';
      out += turns[k].text;
    }
    return out;
  }

  out = tmpl->bos;
  const bool prefill = !turns.empty() && turns.back().role == Role::kAssistant;
  for (std::size_t k = 0; k < turns.size(); ++k) {
    const ChatTurn& t = turns[k];
    switch (t.role) {
      case Role::kSystem: out += tmpl->system_open; break;
      case Role::kUser: out += tmpl->user_open; break;
      case Role::kAssistant: out += tmpl->assistant_open; break;
    }
    out += t.text;
    if (!(prefill && k + 1 == turns.size())) out += tmpl->close;
  }
  if (!prefill) out += tmpl->assistant_open;
  return out;
}

}  // namespace chartpot
