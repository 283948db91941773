#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "authfeed/provider.hpp"

namespace authfeed {

struct ProviderServerOptions {
    bool responder = true;
    std::chrono::milliseconds poll_interval{200};
};

/// HTTP front of a Provider:
///   GET  /manifest              entry 0 bytes, verbatim
///   GET  /entries/<index>       {"content":..., "proofs":[...]}
///   GET  /entries?id=<value>    same, selected by the entry's "id" field
///   GET  /root                  {size, root, timestamp}
///   POST /admin/publish         JSON array of documents (Bearer token)
///   POST /admin/lock            (Bearer token)
///   POST /admin/respond         one responder pass (Bearer token)
/// With the responder enabled a background thread answers on-ledger queries
/// every poll interval.
class ProviderServer {
public:
    ProviderServer(Provider &provider, ProviderServerOptions options = {});
    ~ProviderServer();

    ProviderServer(const ProviderServer &) = delete;
    ProviderServer &operator=(const ProviderServer &) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    int start(const std::string &host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string &host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace authfeed
