#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "authfeed/authoritative_contract.hpp"
#include "authfeed/ledger_client.hpp"
#include "authfeed/manifest.hpp"
#include "authfeed/merkle_log.hpp"
#include "authfeed/mini_json.hpp"

namespace authfeed {

class ProviderError : public std::runtime_error {
public:
    enum class Kind {
        not_found,   ///< unknown entry
        uncommitted, ///< staged, no retained root covers it yet
        locked,      ///< contract locked, no further updates
        rejected,    ///< the ledger declined the update
        invalid,     ///< malformed input
        state,       ///< state directory problem
    };

    ProviderError(Kind kind, const std::string &message) : std::runtime_error{message}, kind_{kind} {}
    Kind kind() const { return kind_; }
    /// HTTP status the server maps this error to.
    int http_status() const;

private:
    Kind kind_;
};

struct ProviderConfig {
    std::string url = "http://127.0.0.1:8080";
    std::string data_structure =
        "{id:string, date:string, local:string, visitor:string, localGoals:int, visitorGoals:int}";
    AuthoritativeConfig contract;
};

struct PublishResult {
    std::size_t size = 0;
    Digest root;
    std::optional<Receipt> receipt; ///< empty for a no-op publish
};

struct RootInfo {
    std::size_t size = 0;
    Digest root;
    std::uint64_t timestamp = 0;
};

/// The content provider. Owns the entry log (entry 0 is the signed
/// manifest), keeps the authoritative contract's roots in step with it, and
/// serves entries with membership proofs.
///
/// State directory layout:
///   provider.json     config, contract address, committed size and root
///   entries.jsonl     committed entries, one {"index","content"} per line
///   staging.jsonl     appended entries whose update has not been accepted
///   identity.key(.cert), wallet.key, admin.token
///
/// Reads may run concurrently with each other and with one writer duty
/// (publish, respond, lock), which are serialized among themselves.
class Provider {
public:
    /// Deploys the contract, signs the manifest, commits it as entry 0.
    /// Refuses a directory that already holds provider state.
    static std::unique_ptr<Provider> init(const std::filesystem::path &dir, ProviderConfig config,
                                          IdentityCredential identity, KeyPair wallet, LedgerClient &ledger);
    /// Reopens a state directory and rebuilds the tree; throws
    /// ProviderError(state) if files disagree with each other or the ledger.
    static std::unique_ptr<Provider> open(const std::filesystem::path &dir, LedgerClient &ledger);

    /// Appends a batch and submits an update with a consistency proof. Empty
    /// batch: no-op. Entries must be JSON documents. On rejection the batch
    /// stays staged and is resubmitted with the next publish.
    PublishResult publish_entries(const std::vector<std::string> &batch);

    EntryResponse serve_entry(std::size_t index) const;
    /// Matches the "id" string field of committed entries.
    EntryResponse serve_entry_by_id(std::string_view id) const;
    std::string manifest_bytes() const;
    RootInfo root_info() const;

    /// One responder pass: answers every query not yet answered. Returns the
    /// number of store_response transactions sent.
    std::size_t respond_to_queries();
    /// Resolves a query filter to the on-ledger response payload.
    std::string resolve_filter(std::string_view filter) const;

    /// Idempotent.
    void lock_service();

    const Manifest &manifest() const { return manifest_; }
    const Address &contract_address() const { return manifest_.sc_address; }
    const IdentityCredential &identity() const { return identity_; }
    const std::string &admin_token() const { return admin_token_; }
    const std::filesystem::path &directory() const { return dir_; }
    std::size_t committed_size() const;
    std::size_t staged_size() const;
    bool locked() const;

private:
    Provider(std::filesystem::path dir, ProviderConfig config, IdentityCredential identity, KeyPair wallet,
             LedgerClient &ledger);

    void persist_meta() const;
    void persist_staging() const;
    void append_committed(std::size_t from, std::size_t to) const;
    void index_entry(std::size_t index);
    std::optional<std::size_t> find_by_id(std::string_view id) const;
    EntryResponse response_for(std::size_t index) const;

    std::filesystem::path dir_;
    ProviderConfig config_;
    IdentityCredential identity_;
    Wallet wallet_;
    LedgerClient &ledger_;
    Manifest manifest_;
    std::string admin_token_;

    mutable std::shared_mutex state_mutex_; // guards the fields below
    MerkleLog log_;
    std::size_t committed_ = 0;
    std::map<std::string, std::size_t, std::less<>> by_id_;
    bool locked_ = false;
    std::uint64_t answered_through_ = 0;
    std::uint64_t committed_time_ = 0;

    std::mutex writer_mutex_;
};

} // namespace authfeed
