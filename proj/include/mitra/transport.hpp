#pragma once

// Outbound HTTP boundary shared by the remote embedder, reranker and
// generator clients. Every network call made by the engine goes through a
// Transport, so the destination set can be restricted and observed.

#include <chrono>
#include <memory>
#include <semaphore>
#include <set>
#include <string>
#include <string_view>

namespace mitra {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;
  int port = 80;
  std::string path;  // starts with '/'

  /// "scheme://host:port" with the port always spelled out.
  std::string origin() const;
};

/// Throws InvalidArgument on anything that is not http(s)://host[:port][/path].
Url parse_url(std::string_view url);

struct HttpReply {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;

  /// POST a JSON body. Throws TransportUnavailable or TransportTimeout on
  /// network failure; HTTP error statuses are returned, not thrown.
  virtual HttpReply post_json(const Url& url, const std::string& body,
                              std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport; one connection per call.
class HttpTransport final : public Transport {
 public:
  HttpReply post_json(const Url& url, const std::string& body,
                      std::chrono::milliseconds timeout) override;
};

/// Rejects any destination whose origin is not in the allowed set.
class GuardedTransport final : public Transport {
 public:
  GuardedTransport(std::shared_ptr<Transport> inner, std::set<std::string> allowed_origins);

  HttpReply post_json(const Url& url, const std::string& body,
                      std::chrono::milliseconds timeout) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::set<std::string> allowed_;
};

/// Bounds the number of concurrent in-flight requests across all clients
/// sharing this transport.
class LimitedTransport final : public Transport {
 public:
  static constexpr std::ptrdiff_t kMaxLimit = 256;

  LimitedTransport(std::shared_ptr<Transport> inner, std::ptrdiff_t max_in_flight);

  HttpReply post_json(const Url& url, const std::string& body,
                      std::chrono::milliseconds timeout) override;

 private:
  std::shared_ptr<Transport> inner_;
  std::counting_semaphore<kMaxLimit> slots_;
};

}  // namespace mitra
