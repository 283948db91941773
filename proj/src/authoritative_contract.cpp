#include "authfeed/authoritative_contract.hpp"

namespace authfeed {

Bytes AuthoritativeConfig::encode() const {
    ArgWriter w;
    w.u64(fee_membership).u64(fee_query).u64(retention).u64(static_cast<std::uint64_t>(hash));
    return std::move(w).take();
}

AuthoritativeConfig AuthoritativeConfig::decode(ArgReader &reader) {
    AuthoritativeConfig c;
    c.fee_membership = reader.u64();
    c.fee_query = reader.u64();
    c.retention = reader.u64();
    auto algo = reader.u64();
    if (algo > static_cast<std::uint64_t>(HashAlgorithm::sha256)) {
        throw AbiError{"unknown hash algorithm id"};
    }
    c.hash = static_cast<HashAlgorithm>(algo);
    return c;
}

AuthoritativeContract::AuthoritativeContract(Address owner, AuthoritativeConfig config)
    : owner_{owner}, config_{config}, hasher_{config.hash} {}

bool AuthoritativeContract::update(const Address &sender, std::uint64_t now, const Digest &root,
                                   std::span<const ProofElement> proof) {
    contract_assert(sender == owner_, "sender is not the owner");
    contract_assert(!locked_, "contract is locked");
    if (!consistency(root, proof)) {
        return false;
    }
    // roots keys must stay strictly increasing; only reachable with wall-clock time
    if (time_ != 0 && now <= time_) {
        return false;
    }
    time_ = now;
    roots_[time_] = root;
    while (roots_.size() > config_.retention) {
        roots_.erase(roots_.begin());
    }
    return true;
}

void AuthoritativeContract::lock(const Address &sender) {
    contract_assert(sender == owner_, "sender is not the owner");
    locked_ = true;
}

bool AuthoritativeContract::consistency(const Digest &root, std::span<const ProofElement> proof) const {
    if (time_ == 0) {
        return true;
    }
    if (proof.empty()) {
        return false;
    }
    auto [root_new, root_old] = mth_dual(hasher_, proof, std::nullopt);
    auto stored = roots_.find(time_);
    return stored != roots_.end() && root_new == root && root_old == stored->second;
}

bool AuthoritativeContract::membership(ByteView data, std::span<const ProofElement> proof, std::uint64_t fee) const {
    contract_assert(fee == config_.fee_membership, "fee must equal FEE_mem");
    auto leaf = hasher_(data);
    auto root_mem = mth_dual(hasher_, proof, leaf).hash_x;
    for (const auto &[_, r] : roots_) {
        if (r == root_mem) {
            return true;
        }
    }
    return false;
}

std::uint64_t AuthoritativeContract::query(ByteView filter, std::uint64_t fee) {
    contract_assert(fee == config_.fee_query, "fee must equal FEE_query");
    ++counter_;
    queries_[counter_] = Bytes{filter.begin(), filter.end()};
    return counter_;
}

void AuthoritativeContract::store_response(const Address &sender, std::uint64_t id, ByteView data) {
    contract_assert(sender == owner_, "sender is not the owner");
    contract_assert(id >= 1 && id <= counter_, "unknown query id");
    responses_[id] = Bytes{data.begin(), data.end()};
}

Bytes AuthoritativeContract::get_response(std::uint64_t id) const {
    contract_assert(id <= counter_, "unknown query id");
    auto it = responses_.find(id);
    return it == responses_.end() ? Bytes{} : it->second;
}

CallOutcome AuthoritativeContract::call(CallContext &ctx, std::string_view function, ArgReader &args) {
    ArgWriter ret;
    if (function == "update") {
        auto root = args.digest();
        auto proof = args.proof();
        args.expect_end();
        if (!update(ctx.sender(), ctx.timestamp(), root, proof)) {
            return CallOutcome::declined("consistency check failed");
        }
    } else if (function == "lock") {
        args.expect_end();
        lock(ctx.sender());
    } else if (function == "membership") {
        auto data = args.bytes();
        auto proof = args.proof();
        args.expect_end();
        ret.u64(membership(data, proof, ctx.value()) ? 1 : 0);
    } else if (function == "query") {
        auto filter = args.bytes();
        args.expect_end();
        ret.u64(query(filter, ctx.value()));
    } else if (function == "store_response") {
        auto id = args.u64();
        auto data = args.bytes();
        args.expect_end();
        store_response(ctx.sender(), id, data);
    } else if (function == "get_response") {
        auto id = args.u64();
        args.expect_end();
        ret.bytes(get_response(id));
    } else if (function == "consistency") {
        auto root = args.digest();
        auto proof = args.proof();
        args.expect_end();
        ret.u64(consistency(root, proof) ? 1 : 0);
    } else if (function == "latest_root") {
        args.expect_end();
        ret.u64(time_);
        ret.digest(time_ == 0 ? Digest{} : roots_.rbegin()->second);
    } else if (function == "query_count") {
        args.expect_end();
        ret.u64(counter_);
    } else if (function == "get_query") {
        auto id = args.u64();
        args.expect_end();
        auto it = queries_.find(id);
        contract_assert(it != queries_.end(), "unknown query id");
        ret.bytes(it->second);
    } else {
        throw ContractError{"unknown function " + std::string{function}};
    }
    ctx.transfer(owner_, ctx.value());
    return CallOutcome::ok(std::move(ret).take());
}

Bytes AuthoritativeContract::encode_state() const {
    ArgWriter w;
    w.address(owner_).bytes(config_.encode()).u64(locked_ ? 1 : 0).u64(time_);
    w.u64(roots_.size());
    for (const auto &[t, r] : roots_) {
        w.u64(t).digest(r);
    }
    w.u64(counter_);
    w.u64(queries_.size());
    for (const auto &[id, q] : queries_) {
        w.u64(id).bytes(q);
    }
    w.u64(responses_.size());
    for (const auto &[id, r] : responses_) {
        w.u64(id).bytes(r);
    }
    return std::move(w).take();
}

nlohmann::json AuthoritativeContract::state_json() const {
    nlohmann::json roots = nlohmann::json::array();
    for (const auto &[t, r] : roots_) {
        roots.push_back({{"time", t}, {"root", r.hex()}});
    }
    nlohmann::json queries = nlohmann::json::object();
    for (const auto &[id, q] : queries_) {
        queries[std::to_string(id)] = to_hex(q);
    }
    nlohmann::json responses = nlohmann::json::object();
    for (const auto &[id, r] : responses_) {
        responses[std::to_string(id)] = to_hex(r);
    }
    return {{"owner", owner_.str()},
            {"locked", locked_},
            {"time", time_},
            {"retention", config_.retention},
            {"fee_membership", config_.fee_membership},
            {"fee_query", config_.fee_query},
            {"hash", std::string{to_string(config_.hash)}},
            {"roots", roots},
            {"counter", counter_},
            {"queries_hex", queries},
            {"responses_hex", responses}};
}

nlohmann::json AuthoritativeContract::interface_descriptor(const AuthoritativeConfig &config) {
    auto fn = [](std::string name, nlohmann::json inputs, nlohmann::json outputs, std::uint64_t fee,
                 std::string access) {
        return nlohmann::json{{"name", std::move(name)},
                              {"inputs", std::move(inputs)},
                              {"outputs", std::move(outputs)},
                              {"fee", fee},
                              {"access", std::move(access)}};
    };
    auto arg = [](std::string name, std::string type) { return nlohmann::json{{"name", name}, {"type", type}}; };
    using J = nlohmann::json;
    J functions = J::array({
        fn("update", J::array({arg("root", "digest"), arg("proof_cons", "proof")}), J::array(), 0, "owner"),
        fn("lock", J::array(), J::array(), 0, "owner"),
        fn("membership", J::array({arg("data", "bytes"), arg("proof_mem", "proof")}), J::array({arg("", "bool")}),
           config.fee_membership, "any"),
        fn("query", J::array({arg("filter", "bytes")}), J::array({arg("id", "u64")}), config.fee_query, "any"),
        fn("store_response", J::array({arg("id", "u64"), arg("data", "bytes")}), J::array(), 0, "owner"),
        fn("get_response", J::array({arg("id", "u64")}), J::array({arg("data", "bytes")}), 0, "any"),
    });
    return {{"code_id", std::string{kCodeId}},
            {"hash", std::string{to_string(config.hash)}},
            {"retention", config.retention},
            {"argument_encoding", "tagged-v1"},
            {"functions", functions}};
}

ContractFactory AuthoritativeContract::factory() {
    return [](CallContext &ctx, ArgReader &init) -> std::unique_ptr<Contract> {
        auto config = AuthoritativeConfig::decode(init);
        init.expect_end();
        contract_assert(config.retention >= 1, "retention must be at least 1");
        contract_assert(ctx.value() == 0, "authoritative deployment takes no value");
        return std::make_unique<AuthoritativeContract>(ctx.sender(), config);
    };
}

namespace authoritative_args {

Bytes update(const Digest &root, std::span<const ProofElement> proof) {
    ArgWriter w;
    w.digest(root).proof(proof);
    return std::move(w).take();
}

Bytes membership(ByteView data, std::span<const ProofElement> proof) {
    ArgWriter w;
    w.bytes(data).proof(proof);
    return std::move(w).take();
}

Bytes query(ByteView filter) {
    ArgWriter w;
    w.bytes(filter);
    return std::move(w).take();
}

Bytes store_response(std::uint64_t id, ByteView data) {
    ArgWriter w;
    w.u64(id).bytes(data);
    return std::move(w).take();
}

Bytes id(std::uint64_t id) {
    ArgWriter w;
    w.u64(id);
    return std::move(w).take();
}

} // namespace authoritative_args

bool decode_bool(ByteView ret) {
    return decode_u64(ret) != 0;
}

std::uint64_t decode_u64(ByteView ret) {
    ArgReader r{ret};
    auto v = r.u64();
    r.expect_end();
    return v;
}

} // namespace authfeed
