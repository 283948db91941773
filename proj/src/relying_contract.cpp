#include "authfeed/relying_contract.hpp"

#include "authfeed/authoritative_contract.hpp"
#include "authfeed/mini_json.hpp"

namespace authfeed {

namespace {

const minijson::Value &field(const minijson::Value &obj, std::string_view name, minijson::Kind kind) {
    const auto *v = obj.find(name);
    if (v == nullptr) {
        throw minijson::ParseError{"missing field " + std::string{name}};
    }
    if (v->kind != kind) {
        throw minijson::ParseError{"wrong type for field " + std::string{name}};
    }
    return *v;
}

std::int64_t goals(const minijson::Value &obj, std::string_view name) {
    auto n = field(obj, name, minijson::Kind::integer).integer;
    if (n < 0) {
        throw minijson::ParseError{"negative " + std::string{name}};
    }
    return n;
}

} // namespace

MatchRecord parse_match(std::string_view content) {
    using minijson::Kind;
    auto doc = minijson::parse(content);
    if (doc.root.kind != Kind::object) {
        throw minijson::ParseError{"match entry must be an object"};
    }
    MatchRecord r;
    r.id = field(doc.root, "id", Kind::string).text;
    r.date = field(doc.root, "date", Kind::string).text;
    r.local = field(doc.root, "local", Kind::string).text;
    r.visitor = field(doc.root, "visitor", Kind::string).text;
    r.local_goals = goals(doc.root, "localGoals");
    r.visitor_goals = goals(doc.root, "visitorGoals");
    return r;
}

std::string_view to_string(Prediction p) {
    return p == Prediction::local ? "local" : "visitor";
}

std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::local:
        return "local";
    case Outcome::visitor:
        return "visitor";
    case Outcome::draw:
        return "draw";
    }
    return "?";
}

Prediction parse_prediction(std::string_view text) {
    if (text == "local") {
        return Prediction::local;
    }
    if (text == "visitor") {
        return Prediction::visitor;
    }
    throw std::invalid_argument{"prediction must be local or visitor"};
}

Outcome outcome_of(const MatchRecord &record) {
    if (record.local_goals > record.visitor_goals) {
        return Outcome::local;
    }
    if (record.local_goals < record.visitor_goals) {
        return Outcome::visitor;
    }
    return Outcome::draw;
}

Bytes BetTerms::encode() const {
    ArgWriter w;
    w.address(authoritative).str(match_id).address(party_b).u64(deposit);
    w.str(to_string(prediction_a)).str(to_string(prediction_b));
    return std::move(w).take();
}

BetTerms BetTerms::decode(ArgReader &reader) {
    BetTerms t;
    t.authoritative = reader.address();
    t.match_id = reader.str();
    t.party_b = reader.address();
    t.deposit = reader.u64();
    try {
        t.prediction_a = parse_prediction(reader.str());
        t.prediction_b = parse_prediction(reader.str());
    } catch (const std::invalid_argument &e) {
        throw AbiError{e.what()};
    }
    return t;
}

RelyingContract::RelyingContract(Address party_a, BetTerms terms) : party_a_{party_a}, terms_{std::move(terms)} {}

CallOutcome RelyingContract::call(CallContext &ctx, std::string_view function, ArgReader &args) {
    ArgWriter ret;
    if (function == "join") {
        args.expect_end();
        contract_assert(ctx.sender() == terms_.party_b, "only the counterparty can join");
        contract_assert(!joined_ && !cancelled_, "bet is not open");
        contract_assert(ctx.value() == terms_.deposit, "join requires the deposit");
        joined_ = true;
    } else if (function == "cancel") {
        args.expect_end();
        contract_assert(ctx.sender() == party_a_, "only the creator can cancel");
        contract_assert(!joined_ && !cancelled_, "bet cannot be cancelled");
        contract_assert(ctx.value() == 0, "cancel takes no value");
        cancelled_ = true;
        ctx.transfer(party_a_, terms_.deposit);
    } else if (function == "submit_data") {
        auto data = args.bytes();
        auto proof = args.proof();
        args.expect_end();
        ret.str(submit_data(ctx, data, proof, ctx.value()));
    } else if (function == "if_censorship") {
        auto id = args.u64();
        args.expect_end();
        ret.str(if_censorship(ctx, id));
    } else if (function == "status") {
        args.expect_end();
        ret.str(outcome_ ? to_string(*outcome_) : (cancelled_ ? "cancelled" : "open"));
    } else {
        throw ContractError{"unknown function " + std::string{function}};
    }
    return CallOutcome::ok(std::move(ret).take());
}

std::string RelyingContract::submit_data(CallContext &ctx, ByteView data, const SidedProof &proof,
                                         std::uint64_t fee) {
    contract_assert(!settled_, "already settled");
    contract_assert(joined_ && !cancelled_, "bet is not active");
    contract_assert(ctx.sender() == party_a_ || ctx.sender() == terms_.party_b, "sender is not a party");

    auto verified = decode_bool(ctx.call(terms_.authoritative, "membership", authoritative_args::membership(data, proof), fee));
    if (!verified) {
        return "unverified";
    }
    MatchRecord record;
    try {
        record = parse_match(to_string(data));
    } catch (const minijson::ParseError &e) {
        throw ContractError{std::string{"verified entry is not a match record: "} + e.what()};
    }
    if (record.id != terms_.match_id) {
        return "ignored";
    }
    auto outcome = outcome_of(record);
    pay_out(ctx, outcome);
    return std::string{to_string(outcome)};
}

std::string RelyingContract::if_censorship(CallContext &ctx, std::uint64_t id) {
    contract_assert(!settled_, "already settled");
    contract_assert(joined_ && !cancelled_, "bet is not active");
    contract_assert(ctx.sender() == party_a_ || ctx.sender() == terms_.party_b, "sender is not a party");

    auto raw = ctx.call(terms_.authoritative, "get_response", authoritative_args::id(id));
    ArgReader reply{raw};
    auto payload = reply.bytes();
    reply.expect_end();
    if (payload.empty()) {
        ctx.transfer(ctx.sender(), ctx.value());
        return "unanswered";
    }
    EntryResponse response;
    try {
        response = EntryResponse::parse(to_string(payload));
    } catch (const minijson::ParseError &) {
        ctx.transfer(ctx.sender(), ctx.value());
        return "malformed";
    }
    return submit_data(ctx, as_bytes(response.content), response.proofs, ctx.value());
}

void RelyingContract::pay_out(CallContext &ctx, Outcome outcome) {
    settled_ = true;
    outcome_ = outcome;
    auto pot = terms_.deposit * 2;
    if (outcome == Outcome::draw) {
        ctx.transfer(party_a_, terms_.deposit);
        ctx.transfer(terms_.party_b, terms_.deposit);
        return;
    }
    bool a_wins = (outcome == Outcome::local) == (terms_.prediction_a == Prediction::local);
    ctx.transfer(a_wins ? party_a_ : terms_.party_b, pot);
}

Bytes RelyingContract::encode_state() const {
    ArgWriter w;
    w.address(party_a_).bytes(terms_.encode());
    w.u64(joined_ ? 1 : 0).u64(settled_ ? 1 : 0).u64(cancelled_ ? 1 : 0);
    w.str(outcome_ ? to_string(*outcome_) : "");
    return std::move(w).take();
}

nlohmann::json RelyingContract::state_json() const {
    return {{"authoritative", terms_.authoritative.str()},
            {"match_id", terms_.match_id},
            {"party_a", party_a_.str()},
            {"party_b", terms_.party_b.str()},
            {"deposit", terms_.deposit},
            {"prediction_a", std::string{to_string(terms_.prediction_a)}},
            {"prediction_b", std::string{to_string(terms_.prediction_b)}},
            {"joined", joined_},
            {"settled", settled_},
            {"cancelled", cancelled_},
            {"outcome", outcome_ ? std::string{to_string(*outcome_)} : std::string{}}};
}

ContractFactory RelyingContract::factory() {
    return [](CallContext &ctx, ArgReader &init) -> std::unique_ptr<Contract> {
        auto terms = BetTerms::decode(init);
        init.expect_end();
        contract_assert(terms.deposit > 0, "deposit must be positive");
        contract_assert(ctx.value() == terms.deposit, "creator must escrow the deposit");
        contract_assert(terms.prediction_a != terms.prediction_b, "predictions must differ");
        contract_assert(terms.party_b != ctx.sender(), "counterparty must differ from creator");
        contract_assert(!terms.match_id.empty(), "match id required");
        return std::make_unique<RelyingContract>(ctx.sender(), std::move(terms));
    };
}

namespace relying_args {

Bytes submit_data(ByteView data, std::span<const ProofElement> proof) {
    ArgWriter w;
    w.bytes(data).proof(proof);
    return std::move(w).take();
}

Bytes if_censorship(std::uint64_t id) {
    ArgWriter w;
    w.u64(id);
    return std::move(w).take();
}

} // namespace relying_args

std::string decode_result(ByteView ret) {
    ArgReader r{ret};
    auto s = r.str();
    r.expect_end();
    return s;
}

ContractRegistry standard_registry() {
    ContractRegistry registry;
    registry.add(std::string{AuthoritativeContract::kCodeId}, AuthoritativeContract::factory());
    registry.add(std::string{RelyingContract::kCodeId}, RelyingContract::factory());
    return registry;
}

} // namespace authfeed
