#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "authfeed/ledger.hpp"
#include "authfeed/merkle_log.hpp"

namespace authfeed {

struct AuthoritativeConfig {
    std::uint64_t fee_membership = 10;
    std::uint64_t fee_query = 25;
    std::uint64_t retention = 16; ///< K: number of most recent roots kept
    HashAlgorithm hash = HashAlgorithm::keccak256;

    Bytes encode() const;
    static AuthoritativeConfig decode(ArgReader &reader);

    bool operator==(const AuthoritativeConfig &) const = default;
};

/// The provider-owned contract: stores consistency-checked log roots,
/// verifies membership for a fee, and carries censorship-evident queries.
///
/// Ledger functions (arguments in call order):
///   update(root: digest, proof_cons: proof)        owner only
///   lock()                                         owner only
///   membership(data: bytes, proof_mem: proof)      value == fee_membership -> u64 0|1
///   query(filter: bytes)                           value == fee_query -> u64 id
///   store_response(id: u64, data: bytes)           owner only
///   get_response(id: u64)                          -> bytes (empty if unanswered)
///   consistency(root: digest, proof_cons: proof)   -> u64 0|1
///   latest_root()                                  -> u64 time, digest (time 0: no root)
///   query_count()                                  -> u64
///   get_query(id: u64)                             -> bytes
/// Any value attached to a successful call is forwarded to the owner.
class AuthoritativeContract final : public Contract {
public:
    static constexpr std::string_view kCodeId = "authoritative-v1";

    AuthoritativeContract(Address owner, AuthoritativeConfig config);

    /// Accepts iff sender is the owner (asserted), the contract is unlocked
    /// (asserted) and the proof shows `root` extends the latest stored root.
    /// A failed consistency check returns false and changes nothing.
    bool update(const Address &sender, std::uint64_t now, const Digest &root, std::span<const ProofElement> proof);
    void lock(const Address &sender);
    bool consistency(const Digest &root, std::span<const ProofElement> proof) const;
    bool membership(ByteView data, std::span<const ProofElement> proof, std::uint64_t fee) const;
    std::uint64_t query(ByteView filter, std::uint64_t fee);
    void store_response(const Address &sender, std::uint64_t id, ByteView data);
    Bytes get_response(std::uint64_t id) const;

    const Address &owner() const { return owner_; }
    const AuthoritativeConfig &config() const { return config_; }
    bool locked() const { return locked_; }
    std::uint64_t time() const { return time_; }
    const std::map<std::uint64_t, Digest> &roots() const { return roots_; }
    std::uint64_t counter() const { return counter_; }
    const std::map<std::uint64_t, Bytes> &queries() const { return queries_; }
    const std::map<std::uint64_t, Bytes> &responses() const { return responses_; }

    /// Function list with argument types and fees; published in the manifest
    /// as sc_interface.
    static nlohmann::json interface_descriptor(const AuthoritativeConfig &config);
    static ContractFactory factory();
    static Bytes encode_init(const AuthoritativeConfig &config) { return config.encode(); }

    std::string_view code_id() const override { return kCodeId; }
    std::unique_ptr<Contract> clone() const override { return std::make_unique<AuthoritativeContract>(*this); }
    CallOutcome call(CallContext &ctx, std::string_view function, ArgReader &args) override;
    Bytes encode_state() const override;
    nlohmann::json state_json() const override;

private:
    Address owner_;
    AuthoritativeConfig config_;
    Hasher hasher_;
    bool locked_ = false;
    std::map<std::uint64_t, Digest> roots_;
    std::uint64_t time_ = 0;
    std::uint64_t counter_ = 0;
    std::map<std::uint64_t, Bytes> queries_;
    std::map<std::uint64_t, Bytes> responses_;
};

/// Encoders for calling the contract through a ledger.
namespace authoritative_args {
Bytes update(const Digest &root, std::span<const ProofElement> proof);
Bytes membership(ByteView data, std::span<const ProofElement> proof);
Bytes query(ByteView filter);
Bytes store_response(std::uint64_t id, ByteView data);
Bytes id(std::uint64_t id);
} // namespace authoritative_args

/// Decodes a u64 0/1 return value.
bool decode_bool(ByteView ret);
std::uint64_t decode_u64(ByteView ret);

} // namespace authfeed
