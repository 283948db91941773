#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "authfeed/ledger.hpp"

namespace authfeed {

/// The remote end could not be reached or answered with garbage.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AccountInfo {
    std::uint64_t balance = 0;
    std::uint64_t nonce = 0;
};

/// How parties and providers reach the ledger: in-process or over HTTP.
class LedgerClient {
public:
    virtual ~LedgerClient() = default;

    virtual Receipt submit(const Transaction &tx) = 0;
    virtual ViewResult view(const Address &caller, const Address &target, std::string_view function, ByteView args,
                            std::uint64_t value = 0) = 0;
    virtual AccountInfo account(const Address &address) = 0;
    virtual std::vector<TraceRecord> trace(std::uint64_t from_position = 0) = 0;
};

class LocalLedgerClient final : public LedgerClient {
public:
    explicit LocalLedgerClient(Ledger &ledger) : ledger_{ledger} {}

    Receipt submit(const Transaction &tx) override { return ledger_.submit(tx); }
    ViewResult view(const Address &caller, const Address &target, std::string_view function, ByteView args,
                    std::uint64_t value) override {
        return ledger_.view(caller, target, function, args, value);
    }
    AccountInfo account(const Address &address) override {
        return {ledger_.balance(address), ledger_.nonce(address)};
    }
    std::vector<TraceRecord> trace(std::uint64_t from_position) override { return ledger_.trace(from_position); }

private:
    Ledger &ledger_;
};

/// Signs transactions with one key and tracks its nonce through the client.
class Wallet {
public:
    Wallet(KeyPair key, LedgerClient &client) : key_{std::move(key)}, client_{&client} {}

    const KeyPair &key() const { return key_; }
    Address address() const { return key_.address(); }
    LedgerClient &client() const { return *client_; }

    Receipt send(const Address &target, std::string_view function, Bytes args, std::uint64_t fee = 0);
    /// Throws std::runtime_error unless the deployment succeeds.
    Address deploy(std::string_view code_id, ByteView init, std::uint64_t value = 0, Receipt *receipt = nullptr);
    ViewResult view(const Address &target, std::string_view function, ByteView args, std::uint64_t value = 0);
    std::uint64_t balance();

private:
    KeyPair key_;
    LedgerClient *client_;
};

} // namespace authfeed
