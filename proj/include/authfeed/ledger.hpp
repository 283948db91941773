#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "authfeed/abi.hpp"
#include "authfeed/bytes.hpp"
#include "authfeed/hash.hpp"
#include "authfeed/identity.hpp"

namespace authfeed {

/// A signed call. The signature covers every field before it, in the order
/// declared here. `fee` is the value moved from sender to target.
struct Transaction {
    Address sender;
    Bytes public_key;
    Address target;
    std::string function;
    Bytes args;
    std::uint64_t fee = 0;
    std::uint64_t nonce = 0;
    Bytes signature;

    static Transaction make(const KeyPair &key, const Address &target, std::string function, Bytes args,
                            std::uint64_t fee, std::uint64_t nonce);

    Bytes signing_bytes() const;
    /// Sender matches the public key and the signature verifies.
    bool signature_valid() const;
    Digest id() const;

    nlohmann::json to_json() const;
    static Transaction from_json(const nlohmann::json &j);
};

enum class TxStatus {
    ok,
    failed,   ///< included in the ledger, handler reverted or declined
    rejected, ///< never included
};

std::string_view to_string(TxStatus status);
TxStatus parse_tx_status(std::string_view text);

struct Receipt {
    TxStatus status = TxStatus::rejected;
    std::optional<std::uint64_t> position;
    std::uint64_t timestamp = 0;
    Bytes return_value;
    std::string error;
    std::uint64_t hash_ops = 0;
    std::uint64_t parse_tokens = 0;

    bool ok() const { return status == TxStatus::ok; }

    nlohmann::json to_json() const;
    static Receipt from_json(const nlohmann::json &j);
};

/// One committed transaction as it appears in the public history.
struct TraceRecord {
    std::uint64_t position = 0;
    std::uint64_t timestamp = 0;
    Transaction tx;
    TxStatus status = TxStatus::ok;
    Bytes return_value;
    std::string error;

    /// Single JSON line: position, timestamp, sender, public_key, target,
    /// function, args_hex, fee, nonce, signature, status, return_hex, error.
    std::string to_jsonl() const;
    static TraceRecord from_json(const nlohmann::json &j);
    /// Human-readable line with arguments decoded.
    std::string to_text() const;
};

/// A contract handler assertion failed; the whole transaction reverts.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void contract_assert(bool condition, const char *message) {
    if (!condition) {
        throw ContractError{message};
    }
}

/// Result of a handler that did not assert. `success = false` still reverts
/// state but signals a declined call rather than a broken one.
struct CallOutcome {
    bool success = true;
    Bytes ret;
    std::string error;

    static CallOutcome ok(Bytes ret = {}) { return {true, std::move(ret), {}}; }
    static CallOutcome declined(std::string why) { return {false, {}, std::move(why)}; }
};

class CallContext;

class Contract {
public:
    virtual ~Contract() = default;

    virtual std::string_view code_id() const = 0;
    virtual std::unique_ptr<Contract> clone() const = 0;
    virtual CallOutcome call(CallContext &ctx, std::string_view function, ArgReader &args) = 0;
    /// Canonical bytes of the full state, folded into the ledger digest.
    virtual Bytes encode_state() const = 0;
    virtual nlohmann::json state_json() const = 0;
};

using ContractFactory = std::function<std::unique_ptr<Contract>(CallContext &ctx, ArgReader &init)>;

class ContractRegistry {
public:
    void add(std::string code_id, ContractFactory factory);
    const ContractFactory *find(std::string_view code_id) const;

private:
    std::map<std::string, ContractFactory, std::less<>> factories_;
};

struct Execution;

/// Handler view of the executing call frame.
class CallContext {
public:
    const Address &self() const { return self_; }
    const Address &sender() const { return sender_; }
    std::uint64_t value() const { return value_; }
    std::uint64_t timestamp() const;

    std::uint64_t balance(const Address &account) const;
    /// Moves value out of this contract; asserts on insufficient balance.
    void transfer(const Address &to, std::uint64_t amount);
    /// Contract-to-contract call carrying `value` from this contract.
    /// Assertion failures and declined outcomes in the callee revert the
    /// whole transaction.
    Bytes call(const Address &target, std::string_view function, ByteView args, std::uint64_t value = 0);

private:
    friend class Ledger;
    CallContext(Execution &exec, Address self, Address sender, std::uint64_t value)
        : exec_{exec}, self_{self}, sender_{sender}, value_{value} {}

    Execution &exec_;
    Address self_;
    Address sender_;
    std::uint64_t value_;
};

enum class TimeMode {
    logical,    ///< 1 tick per included transaction, starting at 1
    wall_clock, ///< unix seconds, non-decreasing
};

struct GenesisAllocation {
    Address account;
    std::uint64_t balance = 0;
};

struct ViewResult {
    bool ok = false;
    Bytes ret;
    std::string error;
    std::uint64_t hash_ops = 0;
};

/// Deterministic single-chain ledger. All mutation goes through submit(),
/// which is serialized; const accessors take a shared lock and return copies
/// or immutable snapshots.
class Ledger {
public:
    static constexpr std::string_view kDeployFunction = "deploy";
    static constexpr std::string_view kTransferFunction = "transfer";

    Ledger(std::vector<GenesisAllocation> genesis, ContractRegistry registry, TimeMode mode = TimeMode::logical);

    Ledger(const Ledger &) = delete;
    Ledger &operator=(const Ledger &) = delete;

    Receipt submit(const Transaction &tx);

    /// Runs a handler against current state and discards every effect.
    /// The value is credited to the target for the duration of the call.
    ViewResult view(const Address &caller, const Address &target, std::string_view function, ByteView args,
                    std::uint64_t value = 0) const;

    /// Signs and submits a deploy transaction; throws std::runtime_error if
    /// the deployment does not succeed.
    Address deploy(const KeyPair &owner, std::string_view code_id, ByteView init, std::uint64_t value = 0,
                   Receipt *receipt = nullptr);

    std::uint64_t balance(const Address &account) const;
    std::uint64_t nonce(const Address &account) const;
    std::uint64_t clock() const;
    std::uint64_t total_supply() const;

    /// Immutable snapshot of a contract; null if none lives at `address`.
    std::shared_ptr<const Contract> contract(const Address &address) const;
    std::vector<Address> contracts() const;

    std::vector<TraceRecord> trace(std::uint64_t from_position = 0) const;
    std::size_t trace_size() const;
    /// JSON Lines, one transaction per line.
    std::string dump_jsonl() const;
    std::string dump_text() const;

    /// keccak256 over balances, nonces and every contract's encoded state.
    Digest state_digest() const;

    const std::vector<GenesisAllocation> &genesis() const { return genesis_; }

    /// Rebuilds a ledger by re-applying recorded transactions at their
    /// recorded timestamps. Throws std::runtime_error if any record's status
    /// or return value diverges.
    static std::unique_ptr<Ledger> replay(std::vector<GenesisAllocation> genesis, ContractRegistry registry,
                                          std::span<const TraceRecord> records, TimeMode mode = TimeMode::logical);

private:
    friend class CallContext;

    struct World {
        std::map<Address, std::uint64_t> balances;
        std::map<Address, std::uint64_t> nonces;
        std::map<Address, std::shared_ptr<const Contract>> contracts;
    };

    Receipt apply(const Transaction &tx, std::optional<std::uint64_t> forced_timestamp);
    std::uint64_t next_timestamp() const;
    Bytes dispatch(Execution &exec, const Address &sender, const Address &target, std::string_view function,
                   ByteView args, std::uint64_t value, std::uint64_t sender_nonce) const;
    static Bytes invoke(Execution &exec, const Address &sender, const Address &target, std::string_view function,
                        ByteView args, std::uint64_t value);

    std::vector<GenesisAllocation> genesis_;
    ContractRegistry registry_;
    TimeMode mode_;

    mutable std::shared_mutex mutex_;
    World world_;
    std::vector<TraceRecord> trace_;
    std::uint64_t clock_ = 1;
    std::uint64_t last_timestamp_ = 0;
};

} // namespace authfeed
