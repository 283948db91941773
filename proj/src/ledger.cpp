#include "authfeed/ledger.hpp"

#include <chrono>
#include <mutex>
#include <sstream>

namespace authfeed {

namespace {

constexpr std::string_view kTxDomain = "authfeed-tx-v1";
constexpr int kMaxCallDepth = 16;

std::uint64_t unix_seconds() {
    using namespace std::chrono;
    return static_cast<std::uint64_t>(duration_cast<seconds>(system_clock::now().time_since_epoch()).count());
}

bool printable(ByteView b) {
    for (auto c : b) {
        if (c < 0x20 && c != '\n' && c != '\t' && c != '\r') {
            return false;
        }
        if (c == 0x7f) {
            return false;
        }
    }
    return true;
}

// Renders tagged call arguments without knowing the callee's signature.
std::string describe_args(ByteView args) {
    std::ostringstream out;
    std::size_t pos = 0;
    bool first = true;
    while (pos < args.size()) {
        if (!first) {
            out << ", ";
        }
        first = false;
        auto tag = args[pos++];
        if (tag == 0x01 && args.size() - pos >= 8) {
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i) {
                v = (v << 8) | args[pos++];
            }
            out << v;
        } else if (tag == 0x02 && args.size() - pos >= 4) {
            std::size_t n = 0;
            for (int i = 0; i < 4; ++i) {
                n = (n << 8) | args[pos++];
            }
            if (args.size() - pos < n) {
                return "0x" + to_hex(args);
            }
            auto v = args.subspan(pos, n);
            pos += n;
            if (printable(v)) {
                out << '"' << to_string(v) << '"';
            } else {
                out << "0x" << to_hex(v);
            }
        } else {
            return "0x" + to_hex(args);
        }
    }
    return out.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Transaction, receipt and trace encodings

Transaction Transaction::make(const KeyPair &key, const Address &target, std::string function, Bytes args,
                              std::uint64_t fee, std::uint64_t nonce) {
    Transaction tx;
    tx.sender = key.address();
    tx.public_key = key.public_key();
    tx.target = target;
    tx.function = std::move(function);
    tx.args = std::move(args);
    tx.fee = fee;
    tx.nonce = nonce;
    tx.signature = key.sign(tx.signing_bytes());
    return tx;
}

Bytes Transaction::signing_bytes() const {
    ArgWriter w;
    w.str(kTxDomain).address(sender).bytes(public_key).address(target).str(function).bytes(args).u64(fee).u64(nonce);
    return std::move(w).take();
}

bool Transaction::signature_valid() const {
    if (public_key.size() != KeyPair::kPublicKeySize || Address::from_public_key(public_key) != sender) {
        return false;
    }
    return verify_signature(public_key, signing_bytes(), signature);
}

Digest Transaction::id() const {
    auto bytes = signing_bytes();
    bytes.insert(bytes.end(), signature.begin(), signature.end());
    return keccak256(bytes);
}

nlohmann::json Transaction::to_json() const {
    nlohmann::ordered_json j;
    j["sender"] = sender.str();
    j["public_key"] = to_hex(public_key);
    j["target"] = target.str();
    j["function"] = function;
    j["args_hex"] = to_hex(args);
    j["fee"] = fee;
    j["nonce"] = nonce;
    j["signature"] = to_hex(signature);
    return nlohmann::json(j);
}

Transaction Transaction::from_json(const nlohmann::json &j) {
    Transaction tx;
    tx.sender = Address::parse(j.at("sender").get<std::string>());
    tx.public_key = from_hex(j.at("public_key").get<std::string>());
    tx.target = Address::parse(j.at("target").get<std::string>());
    tx.function = j.at("function").get<std::string>();
    tx.args = from_hex(j.at("args_hex").get<std::string>());
    tx.fee = j.at("fee").get<std::uint64_t>();
    tx.nonce = j.at("nonce").get<std::uint64_t>();
    tx.signature = from_hex(j.at("signature").get<std::string>());
    return tx;
}

std::string_view to_string(TxStatus status) {
    switch (status) {
    case TxStatus::ok:
        return "ok";
    case TxStatus::failed:
        return "failed";
    case TxStatus::rejected:
        return "rejected";
    }
    return "unknown";
}

TxStatus parse_tx_status(std::string_view text) {
    if (text == "ok") {
        return TxStatus::ok;
    }
    if (text == "failed") {
        return TxStatus::failed;
    }
    if (text == "rejected") {
        return TxStatus::rejected;
    }
    throw std::invalid_argument{"unknown transaction status"};
}

nlohmann::json Receipt::to_json() const {
    nlohmann::json j;
    j["status"] = to_string(status);
    j["position"] = position ? nlohmann::json(*position) : nlohmann::json(nullptr);
    j["timestamp"] = timestamp;
    j["return_hex"] = to_hex(return_value);
    j["error"] = error;
    j["hash_ops"] = hash_ops;
    j["parse_tokens"] = parse_tokens;
    return j;
}

Receipt Receipt::from_json(const nlohmann::json &j) {
    Receipt r;
    r.status = parse_tx_status(j.at("status").get<std::string>());
    if (!j.at("position").is_null()) {
        r.position = j["position"].get<std::uint64_t>();
    }
    r.timestamp = j.at("timestamp").get<std::uint64_t>();
    r.return_value = from_hex(j.at("return_hex").get<std::string>());
    r.error = j.at("error").get<std::string>();
    r.hash_ops = j.at("hash_ops").get<std::uint64_t>();
    r.parse_tokens = j.at("parse_tokens").get<std::uint64_t>();
    return r;
}

std::string TraceRecord::to_jsonl() const {
    nlohmann::ordered_json j;
    j["position"] = position;
    j["timestamp"] = timestamp;
    j["sender"] = tx.sender.str();
    j["public_key"] = to_hex(tx.public_key);
    j["target"] = tx.target.str();
    j["function"] = tx.function;
    j["args_hex"] = to_hex(tx.args);
    j["fee"] = tx.fee;
    j["nonce"] = tx.nonce;
    j["signature"] = to_hex(tx.signature);
    j["status"] = to_string(status);
    j["return_hex"] = to_hex(return_value);
    j["error"] = error;
    return j.dump();
}

TraceRecord TraceRecord::from_json(const nlohmann::json &j) {
    TraceRecord r;
    r.position = j.at("position").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<std::uint64_t>();
    r.tx = Transaction::from_json(j);
    r.status = parse_tx_status(j.at("status").get<std::string>());
    r.return_value = from_hex(j.at("return_hex").get<std::string>());
    r.error = j.at("error").get<std::string>();
    return r;
}

std::string TraceRecord::to_text() const {
    std::ostringstream out;
    out << '#' << position << " t=" << timestamp << ' ' << tx.sender.str() << " -> " << tx.target.str() << ' '
        << tx.function << '(' << describe_args(tx.args) << ") fee=" << tx.fee << " status=" << to_string(status);
    if (!error.empty()) {
        out << " error=\"" << error << '"';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Registry

void ContractRegistry::add(std::string code_id, ContractFactory factory) {
    factories_[std::move(code_id)] = std::move(factory);
}

const ContractFactory *ContractRegistry::find(std::string_view code_id) const {
    auto it = factories_.find(code_id);
    return it == factories_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Execution: a copy-on-touch overlay of world state for one transaction.

struct Execution {
    const std::map<Address, std::shared_ptr<const Contract>> &committed;
    const ContractRegistry &registry;
    std::uint64_t timestamp;
    std::map<Address, std::uint64_t> balances;
    std::map<Address, std::unique_ptr<Contract>> touched;
    int depth = 0;

    bool has_contract(const Address &a) const { return touched.contains(a) || committed.contains(a); }

    Contract &contract(const Address &a) {
        auto it = touched.find(a);
        if (it != touched.end()) {
            return *it->second;
        }
        auto c = committed.find(a);
        if (c == committed.end()) {
            throw ContractError{"no contract at " + a.str()};
        }
        return *touched.emplace(a, c->second->clone()).first->second;
    }

    void move_value(const Address &from, const Address &to, std::uint64_t amount) {
        if (amount == 0) {
            return;
        }
        auto &src = balances[from];
        contract_assert(src >= amount, "insufficient balance");
        src -= amount;
        balances[to] += amount;
    }
};

std::uint64_t CallContext::timestamp() const {
    return exec_.timestamp;
}

std::uint64_t CallContext::balance(const Address &account) const {
    auto it = exec_.balances.find(account);
    return it == exec_.balances.end() ? 0 : it->second;
}

void CallContext::transfer(const Address &to, std::uint64_t amount) {
    exec_.move_value(self_, to, amount);
}

Bytes CallContext::call(const Address &target, std::string_view function, ByteView args, std::uint64_t value) {
    return Ledger::invoke(exec_, self_, target, function, args, value);
}

Bytes Ledger::invoke(Execution &exec, const Address &sender, const Address &target, std::string_view function,
                     ByteView args, std::uint64_t value) {
    contract_assert(exec.depth < kMaxCallDepth, "call depth exceeded");
    contract_assert(exec.has_contract(target), "call target is not a contract");
    exec.move_value(sender, target, value);
    auto &callee = exec.contract(target);
    ++exec.depth;
    CallContext ctx{exec, target, sender, value};
    ArgReader reader{args};
    CallOutcome outcome;
    try {
        outcome = callee.call(ctx, function, reader);
    } catch (const AbiError &e) {
        throw ContractError{std::string{"bad arguments: "} + e.what()};
    }
    --exec.depth;
    if (!outcome.success) {
        throw ContractError{"inner call declined: " + outcome.error};
    }
    return outcome.ret;
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(std::vector<GenesisAllocation> genesis, ContractRegistry registry, TimeMode mode)
    : genesis_{std::move(genesis)}, registry_{std::move(registry)}, mode_{mode} {
    for (const auto &g : genesis_) {
        world_.balances[g.account] += g.balance;
    }
}

std::uint64_t Ledger::next_timestamp() const {
    if (mode_ == TimeMode::logical) {
        return clock_;
    }
    return std::max(unix_seconds(), last_timestamp_);
}

Bytes Ledger::dispatch(Execution &exec, const Address &sender, const Address &target, std::string_view function,
                       ByteView args, std::uint64_t value, std::uint64_t sender_nonce) const {
    if (target.is_zero()) {
        contract_assert(function == kDeployFunction, "zero address only accepts deploy");
        ArgReader reader{args};
        std::string code_id;
        Bytes init;
        try {
            code_id = reader.str();
            init = reader.bytes();
            reader.expect_end();
        } catch (const AbiError &e) {
            throw ContractError{std::string{"malformed deploy: "} + e.what()};
        }
        const auto *factory = registry_.find(code_id);
        contract_assert(factory != nullptr, "unknown contract code");

        ArgWriter seed;
        seed.address(sender).u64(sender_nonce);
        auto digest = keccak256(seed.data());
        auto address = Address::from_bytes(ByteView{digest.bytes()}.subspan(Digest::kSize - Address::kSize));
        contract_assert(!exec.has_contract(address), "address collision");

        exec.move_value(sender, address, value);
        CallContext ctx{exec, address, sender, value};
        ArgReader init_reader{init};
        std::unique_ptr<Contract> contract;
        try {
            contract = (*factory)(ctx, init_reader);
        } catch (const AbiError &e) {
            throw ContractError{std::string{"malformed init params: "} + e.what()};
        }
        exec.touched[address] = std::move(contract);
        return {address.bytes().begin(), address.bytes().end()};
    }

    if (!exec.has_contract(target)) {
        contract_assert(function == kTransferFunction && args.empty(), "target is not a contract");
        exec.move_value(sender, target, value);
        return {};
    }
    return invoke(exec, sender, target, function, args, value);
}

Receipt Ledger::apply(const Transaction &tx, std::optional<std::uint64_t> forced_timestamp) {
    Receipt receipt;
    if (!tx.signature_valid()) {
        receipt.error = "bad signature";
        return receipt;
    }
    std::uint64_t expected_nonce = world_.nonces.contains(tx.sender) ? world_.nonces.at(tx.sender) : 0;
    if (tx.nonce != expected_nonce) {
        receipt.error = "bad nonce: expected " + std::to_string(expected_nonce);
        return receipt;
    }
    std::uint64_t sender_balance = world_.balances.contains(tx.sender) ? world_.balances.at(tx.sender) : 0;
    if (sender_balance < tx.fee) {
        receipt.error = "insufficient balance";
        return receipt;
    }

    std::uint64_t timestamp = forced_timestamp ? *forced_timestamp : next_timestamp();
    Execution exec{world_.contracts, registry_, timestamp, world_.balances, {}, 0};

    auto before = meter::read();
    TxStatus status = TxStatus::ok;
    Bytes ret;
    std::string error;
    try {
        ret = dispatch(exec, tx.sender, tx.target, tx.function, tx.args, tx.fee, expected_nonce);
    } catch (const ContractError &e) {
        status = TxStatus::failed;
        error = e.what();
    } catch (const std::exception &e) {
        status = TxStatus::failed;
        error = std::string{"handler error: "} + e.what();
    }
    auto after = meter::read();

    world_.nonces[tx.sender] = expected_nonce + 1;
    if (status == TxStatus::ok) {
        world_.balances = std::move(exec.balances);
        for (auto &[address, contract] : exec.touched) {
            world_.contracts[address] = std::shared_ptr<const Contract>{std::move(contract)};
        }
    } else {
        ret.clear();
    }

    TraceRecord record;
    record.position = trace_.size();
    record.timestamp = timestamp;
    record.tx = tx;
    record.status = status;
    record.return_value = ret;
    record.error = error;
    trace_.push_back(std::move(record));

    last_timestamp_ = timestamp;
    if (mode_ == TimeMode::logical) {
        clock_ = timestamp + 1;
    }

    receipt.status = status;
    receipt.position = trace_.size() - 1;
    receipt.timestamp = timestamp;
    receipt.return_value = std::move(ret);
    receipt.error = std::move(error);
    receipt.hash_ops = after.hash_ops - before.hash_ops;
    receipt.parse_tokens = after.parse_tokens - before.parse_tokens;
    return receipt;
}

Receipt Ledger::submit(const Transaction &tx) {
    std::unique_lock lock{mutex_};
    return apply(tx, std::nullopt);
}

ViewResult Ledger::view(const Address &caller, const Address &target, std::string_view function, ByteView args,
                        std::uint64_t value) const {
    std::shared_lock lock{mutex_};
    Execution exec{world_.contracts, registry_, next_timestamp(), world_.balances, {}, 0};
    exec.balances[caller] += value;
    ViewResult result;
    auto before = meter::read();
    try {
        result.ret = invoke(exec, caller, target, function, args, value);
        result.ok = true;
    } catch (const std::exception &e) {
        result.error = e.what();
    }
    result.hash_ops = meter::read().hash_ops - before.hash_ops;
    return result;
}

Address Ledger::deploy(const KeyPair &owner, std::string_view code_id, ByteView init, std::uint64_t value,
                       Receipt *receipt) {
    ArgWriter args;
    args.str(code_id).bytes(init);
    auto tx = Transaction::make(owner, Address{}, std::string{kDeployFunction}, std::move(args).take(), value,
                                nonce(owner.address()));
    auto r = submit(tx);
    if (receipt) {
        *receipt = r;
    }
    if (!r.ok()) {
        throw std::runtime_error{"deploy failed: " + r.error};
    }
    return Address::from_bytes(r.return_value);
}

std::uint64_t Ledger::balance(const Address &account) const {
    std::shared_lock lock{mutex_};
    auto it = world_.balances.find(account);
    return it == world_.balances.end() ? 0 : it->second;
}

std::uint64_t Ledger::nonce(const Address &account) const {
    std::shared_lock lock{mutex_};
    auto it = world_.nonces.find(account);
    return it == world_.nonces.end() ? 0 : it->second;
}

std::uint64_t Ledger::clock() const {
    std::shared_lock lock{mutex_};
    return next_timestamp();
}

std::uint64_t Ledger::total_supply() const {
    std::shared_lock lock{mutex_};
    std::uint64_t total = 0;
    for (const auto &[_, b] : world_.balances) {
        total += b;
    }
    return total;
}

std::shared_ptr<const Contract> Ledger::contract(const Address &address) const {
    std::shared_lock lock{mutex_};
    auto it = world_.contracts.find(address);
    return it == world_.contracts.end() ? nullptr : it->second;
}

std::vector<Address> Ledger::contracts() const {
    std::shared_lock lock{mutex_};
    std::vector<Address> out;
    for (const auto &[a, _] : world_.contracts) {
        out.push_back(a);
    }
    return out;
}

std::vector<TraceRecord> Ledger::trace(std::uint64_t from_position) const {
    std::shared_lock lock{mutex_};
    if (from_position >= trace_.size()) {
        return {};
    }
    return {trace_.begin() + static_cast<std::ptrdiff_t>(from_position), trace_.end()};
}

std::size_t Ledger::trace_size() const {
    std::shared_lock lock{mutex_};
    return trace_.size();
}

std::string Ledger::dump_jsonl() const {
    std::shared_lock lock{mutex_};
    std::string out;
    for (const auto &r : trace_) {
        out += r.to_jsonl();
        out += '\n';
    }
    return out;
}

std::string Ledger::dump_text() const {
    std::shared_lock lock{mutex_};
    std::string out;
    for (const auto &r : trace_) {
        out += r.to_text();
        out += '\n';
    }
    return out;
}

Digest Ledger::state_digest() const {
    std::shared_lock lock{mutex_};
    ArgWriter w;
    w.str("balances");
    for (const auto &[a, b] : world_.balances) {
        if (b != 0) {
            w.address(a).u64(b);
        }
    }
    w.str("nonces");
    for (const auto &[a, n] : world_.nonces) {
        w.address(a).u64(n);
    }
    w.str("contracts");
    for (const auto &[a, c] : world_.contracts) {
        w.address(a).str(c->code_id()).bytes(c->encode_state());
    }
    return keccak256(w.data());
}

std::unique_ptr<Ledger> Ledger::replay(std::vector<GenesisAllocation> genesis, ContractRegistry registry,
                                       std::span<const TraceRecord> records, TimeMode mode) {
    auto ledger = std::make_unique<Ledger>(std::move(genesis), std::move(registry), mode);
    for (const auto &record : records) {
        Receipt r;
        {
            std::unique_lock lock{ledger->mutex_};
            r = ledger->apply(record.tx, record.timestamp);
        }
        if (r.status != record.status || r.return_value != record.return_value) {
            throw std::runtime_error{"replay diverged at position " + std::to_string(record.position)};
        }
    }
    return ledger;
}

} // namespace authfeed
