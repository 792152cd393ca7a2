#include <httplib.h>

#include "chartpot/error.hpp"
#include "chartpot/llm_client.hpp"

namespace chartpot {

namespace {

// Splits "http://host:port/prefix/path" into the origin and the path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kTransport, "malformed URL '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public Transport {
 public:
  HttpResponse post(const HttpRequest& request) override {
    const auto [origin, path] = split_url(request.url);
    httplib::Client client(origin);
    if (!client.is_valid()) throw Error(ErrorCode::kTransport, "unsupported URL '" + request.url + "'");
    const auto timeout = std::chrono::milliseconds(request.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    if (!result) {
      const auto err = result.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout) {
        throw Error(ErrorCode::kTimeout, "request to " + request.url + " failed: " + httplib::to_string(err));
      }
      throw Error(ErrorCode::kTransport, "request to " + request.url + " failed: " + httplib::to_string(err));
    }
    return {result->status, result->body};
  }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpTransport>(); }

}  // namespace chartpot
