#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartpot {

enum class Role { kSystem, kUser, kAssistant };
std::string_view to_string(Role r);  // "system", "user", "assistant"

struct ChatTurn {
  Role role = Role::kUser;
  std::string text;
  /// Image attachment (file path, http(s) URL or data URL); user turns only.
  std::optional<std::string> image_ref;

  static ChatTurn system(std::string text) { return {Role::kSystem, std::move(text), std::nullopt}; }
  static ChatTurn user(std::string text, std::optional<std::string> image = std::nullopt) {
    return {Role::kUser, std::move(text), std::move(image)};
  }
  /// A final assistant turn is a prefill: generation continues from its text.
  static ChatTurn assistant(std::string text) { return {Role::kAssistant, std::move(text), std::nullopt}; }

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

/// Role-marker template. A template with `passthrough` set joins turn texts
/// with newlines (for servers that apply their own template).
struct ChatTemplate {
  std::string bos;
  std::string system_open;
  std::string user_open;
  std::string assistant_open;
  std::string close;
  bool passthrough = false;
};

inline constexpr std::string_view kImStartTemplate = "im_start";
inline constexpr std::string_view kPassthroughTemplate = "passthrough";

/// Adds or replaces a template. Thread-safe.
void register_chat_template(std::string id, ChatTemplate tmpl);
std::optional<ChatTemplate> find_chat_template(std::string_view id);

/// Renders a conversation. Every turn is wrapped in its role markers; when the
/// last turn is an assistant prefill it is left open (no close marker),
/// otherwise an open assistant marker is appended.
///
/// Throws Error(kUnknownTemplate) or Error(kImageOnNonUserTurn).
std::string render_chat(std::string_view template_id, const std::vector<ChatTurn>& turns);

}  // namespace chartpot
