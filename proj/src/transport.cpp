#include "mitra/transport.hpp"

#include <algorithm>
#include <charconv>

#include "httplib.h"
#include "mitra/error.hpp"

namespace mitra {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Url parse_url(std::string_view text) {
  Url url;
  const auto sep = text.find("://");
  if (sep == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "url without scheme: " + std::string(text));
  }
  url.scheme = std::string(text.substr(0, sep));
  if (url.scheme != "http" && url.scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported url scheme: " + url.scheme);
  }
  url.port = url.scheme == "https" ? 443 : 80;
  auto rest = text.substr(sep + 3);
  const auto slash_it = std::find(rest.begin(), rest.end(), '/');
  const auto slash = slash_it == rest.end() ? std::string_view::npos
                                            : static_cast<std::size_t>(slash_it - rest.begin());
  auto authority = rest.substr(0, slash);
  url.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (const auto colon = authority.rfind(':'); colon != std::string_view::npos &&
                                               authority.find(']', colon) == std::string_view::npos) {
    auto port_text = authority.substr(colon + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535) {
      throw Error(ErrorCode::InvalidArgument, "bad port in url: " + std::string(text));
    }
    url.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw Error(ErrorCode::InvalidArgument, "url without host: " + std::string(text));
  url.host = std::string(authority);
  return url;
}

HttpReply HttpTransport::post_json(const Url& url, const std::string& body,
                                   std::chrono::milliseconds timeout) {
  if (url.scheme != "http") {
    throw Error(ErrorCode::TransportUnavailable, "only plain http is supported: " + url.origin());
  }
  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto result = client.Post(url.path, body, "application/json");
  if (!result) {
    const auto err = result.error();
    const auto what = url.origin() + url.path + ": " + httplib::to_string(err);
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::TransportTimeout, what);
    }
    throw Error(ErrorCode::TransportUnavailable, what);
  }
  return {result->status, result->body};
}

GuardedTransport::GuardedTransport(std::shared_ptr<Transport> inner,
                                   std::set<std::string> allowed_origins)
    : inner_(std::move(inner)), allowed_(std::move(allowed_origins)) {}

HttpReply GuardedTransport::post_json(const Url& url, const std::string& body,
                                      std::chrono::milliseconds timeout) {
  if (!allowed_.contains(url.origin())) {
    throw Error(ErrorCode::ForbiddenEndpoint,
                "destination " + url.origin() + " is not in the allowed endpoint list");
  }
  return inner_->post_json(url, body, timeout);
}

LimitedTransport::LimitedTransport(std::shared_ptr<Transport> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, kMaxLimit)) {}

HttpReply LimitedTransport::post_json(const Url& url, const std::string& body,
                                      std::chrono::milliseconds timeout) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<kMaxLimit>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->post_json(url, body, timeout);
}

}  // namespace mitra
