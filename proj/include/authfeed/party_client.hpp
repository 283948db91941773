#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "authfeed/ledger_client.hpp"
#include "authfeed/manifest.hpp"
#include "authfeed/mini_json.hpp"
#include "authfeed/relying_contract.hpp"

namespace authfeed {

/// The provider key a party has agreed to trust, obtained out of band.
struct TrustAnchor {
    std::string domain;
    Bytes public_key;

    /// Accepts a provider certificate file ({subject, public_key, ...}) or a
    /// file holding just the hex public key.
    static TrustAnchor load(const std::filesystem::path &path);
};

class ClientError : public std::runtime_error {
public:
    enum class Kind {
        verification = 2,
        transport = 3,
        censorship_timeout = 4,
    };

    ClientError(Kind kind, const std::string &message) : std::runtime_error{message}, kind_{kind} {}
    Kind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    Kind kind_;
};

struct EntrySelector {
    std::optional<std::size_t> index;
    std::optional<std::string> id;

    static EntrySelector by_index(std::size_t i) { return {i, std::nullopt}; }
    static EntrySelector by_id(std::string id) { return {std::nullopt, std::move(id)}; }
    std::string describe() const;
};

struct SettlementReport {
    std::string result;         ///< relying contract result string
    std::uint64_t fee_spent = 0; ///< fee value the caller ended up paying
    std::optional<std::uint64_t> position;
    std::string content;
};

/// The public record of an unanswered query.
struct CensorshipEvidence {
    std::uint64_t query_id = 0;
    Address contract;
    std::uint64_t position = 0;  ///< ledger position of the query transaction
    std::uint64_t timestamp = 0; ///< its ledger timestamp
    std::string tx_id;
    std::string filter;
    std::uint64_t ledger_clock_at_timeout = 0;
    std::chrono::milliseconds waited{0};

    std::string report() const;
};

struct AwaitResult {
    std::string payload; ///< raw on-ledger response bytes
    std::optional<EntryResponse> entry;
};

/// A contract party: trusts one provider key, talks HTTP to the provider and
/// sends transactions through its wallet.
class PartyClient {
public:
    PartyClient(std::string provider_url, TrustAnchor anchor, Wallet wallet);

    /// Fetches GET /manifest, checks the signature under the pinned key, then
    /// checks entry 0 is committed under a retained contract root. Caches the
    /// result.
    const Manifest &fetch_and_verify_manifest();
    /// Fetches an entry and its proof; no verification.
    EntryResponse fetch_entry(const EntrySelector &selector);
    /// Free membership check through a ledger view.
    bool verify_entry(const EntryResponse &entry);

    Address deploy_relying(const std::string &match_id, const Address &party_b, std::uint64_t deposit,
                           Prediction mine, Prediction theirs);
    void join(const Address &bet, std::uint64_t deposit);

    /// Fetches, verifies and submits the entry to the relying contract.
    SettlementReport settle(const Address &bet, const EntrySelector &selector);
    /// Settles from the provider's on-ledger answer to query `id`.
    SettlementReport settle_from_query(const Address &bet, std::uint64_t id);

    /// Sends a paid query; returns its id.
    std::uint64_t censor_query(std::string_view filter, Receipt *receipt = nullptr);
    /// Polls get_response until answered. Throws ClientError(censorship_timeout)
    /// carrying CensorshipEvidence::report() when the timeout elapses.
    AwaitResult await_response(std::uint64_t id, std::chrono::milliseconds timeout,
                               std::chrono::milliseconds poll = std::chrono::milliseconds{100},
                               CensorshipEvidence *evidence = nullptr);
    /// Locates the query transaction in the ledger trace.
    CensorshipEvidence evidence_for(std::uint64_t id);

    std::uint64_t fee_membership();
    std::uint64_t fee_query();
    const Address &contract();
    Wallet &wallet() { return wallet_; }
    void set_http_timeout(std::chrono::milliseconds t) { http_timeout_ = t; }

private:
    std::string http_get(const std::string &path);
    std::uint64_t interface_fee(std::string_view function);

    std::string provider_url_;
    TrustAnchor anchor_;
    Wallet wallet_;
    std::optional<Manifest> manifest_;
    std::chrono::milliseconds http_timeout_{5000};
};

} // namespace authfeed
