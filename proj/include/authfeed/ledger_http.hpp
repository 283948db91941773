#pragma once

#include <memory>
#include <string>

#include "authfeed/ledger_client.hpp"

namespace authfeed {

/// Exposes a Ledger over HTTP/JSON:
///   POST /tx                 signed transaction -> receipt
///   POST /view               {caller, target, function, args_hex, value}
///   GET  /accounts/<address> {balance, nonce}
///   GET  /trace?from=N       JSON Lines
///   GET  /trace.txt          human-readable trace
///   GET  /contracts/<address> {code_id, state}
///   GET  /digest             {digest}
class LedgerServer {
public:
    explicit LedgerServer(Ledger &ledger);
    ~LedgerServer();

    LedgerServer(const LedgerServer &) = delete;
    LedgerServer &operator=(const LedgerServer &) = delete;

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// the bound port is returned.
    int start(const std::string &host, int port);
    /// Serves on the calling thread until stop() is called elsewhere.
    void run(const std::string &host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class HttpLedgerClient final : public LedgerClient {
public:
    /// base_url like "http://127.0.0.1:8545"
    explicit HttpLedgerClient(std::string base_url);
    ~HttpLedgerClient() override;

    Receipt submit(const Transaction &tx) override;
    ViewResult view(const Address &caller, const Address &target, std::string_view function, ByteView args,
                    std::uint64_t value) override;
    AccountInfo account(const Address &address) override;
    std::vector<TraceRecord> trace(std::uint64_t from_position) override;

    std::string trace_text();
    nlohmann::json contract_state(const Address &address);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace authfeed
