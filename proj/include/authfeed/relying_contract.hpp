#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "authfeed/ledger.hpp"
#include "authfeed/merkle_log.hpp"

namespace authfeed {

/// One football result as published in the feed.
struct MatchRecord {
    std::string id;
    std::string date;
    std::string local;
    std::string visitor;
    std::int64_t local_goals = 0;
    std::int64_t visitor_goals = 0;

    bool operator==(const MatchRecord &) const = default;
};

/// Parses an entry's content. Extra fields are ignored; throws
/// minijson::ParseError on missing fields, wrong types or negative goals.
MatchRecord parse_match(std::string_view content);

enum class Prediction { local, visitor };
enum class Outcome { local, visitor, draw };

std::string_view to_string(Prediction p);
std::string_view to_string(Outcome o);
Prediction parse_prediction(std::string_view text);
Outcome outcome_of(const MatchRecord &record);

struct BetTerms {
    Address authoritative;
    std::string match_id;
    Address party_b;
    std::uint64_t deposit = 0;
    Prediction prediction_a = Prediction::local;
    Prediction prediction_b = Prediction::visitor;

    Bytes encode() const;
    static BetTerms decode(ArgReader &reader);
};

/// A two-party bet settled from authenticated feed data.
///
/// Party A deploys with value == deposit; party B escrows the same amount
/// with join(). Ledger functions:
///   join()                                   value == deposit, party B only
///   cancel()                                 party A only, before join
///   submit_data(data: bytes, proof: proof)   value forwarded as the membership fee -> str result
///   if_censorship(id: u64)                   value forwarded as the membership fee -> str result
///   status()                                 -> str result of the settlement so far
/// Results: "unverified", "ignored", "unanswered", "malformed", "local",
/// "visitor", "draw". Unused fee value is returned to the caller.
class RelyingContract final : public Contract {
public:
    static constexpr std::string_view kCodeId = "relying-bet-v1";

    RelyingContract(Address party_a, BetTerms terms);

    const Address &party_a() const { return party_a_; }
    const BetTerms &terms() const { return terms_; }
    bool joined() const { return joined_; }
    bool settled() const { return settled_; }
    bool cancelled() const { return cancelled_; }
    const std::optional<Outcome> &outcome() const { return outcome_; }

    static ContractFactory factory();

    std::string_view code_id() const override { return kCodeId; }
    std::unique_ptr<Contract> clone() const override { return std::make_unique<RelyingContract>(*this); }
    CallOutcome call(CallContext &ctx, std::string_view function, ArgReader &args) override;
    Bytes encode_state() const override;
    nlohmann::json state_json() const override;

private:
    std::string submit_data(CallContext &ctx, ByteView data, const SidedProof &proof, std::uint64_t fee);
    std::string if_censorship(CallContext &ctx, std::uint64_t id);
    void pay_out(CallContext &ctx, Outcome outcome);

    Address party_a_;
    BetTerms terms_;
    bool joined_ = false;
    bool settled_ = false;
    bool cancelled_ = false;
    std::optional<Outcome> outcome_;
};

namespace relying_args {
Bytes submit_data(ByteView data, std::span<const ProofElement> proof);
Bytes if_censorship(std::uint64_t id);
} // namespace relying_args

/// Decodes the str result of submit_data / if_censorship / status.
std::string decode_result(ByteView ret);

/// Registry with every contract this project ships.
ContractRegistry standard_registry();

} // namespace authfeed
