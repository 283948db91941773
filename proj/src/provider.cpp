#include "authfeed/provider.hpp"

#include <fstream>
#include <iostream>

#include <sodium.h>

namespace authfeed {

namespace fs = std::filesystem;

namespace {

constexpr const char *kMetaFile = "provider.json";
constexpr const char *kEntriesFile = "entries.jsonl";
constexpr const char *kStagingFile = "staging.jsonl";
constexpr const char *kIdentityFile = "identity.key";
constexpr const char *kWalletFile = "wallet.key";
constexpr const char *kTokenFile = "admin.token";

void alarm(const std::string &message) {
    std::cerr << "[provider] ALARM: " << message << std::endl;
}

std::string entry_line(std::size_t index, const Bytes &content) {
    nlohmann::ordered_json j;
    j["index"] = index;
    j["content"] = to_string(content);
    return j.dump() + "\n";
}

void write_atomically(const fs::path &path, const std::string &data) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
        out << data;
        out.flush();
        if (!out) {
            throw ProviderError{ProviderError::Kind::state, "cannot write " + tmp.string()};
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw ProviderError{ProviderError::Kind::state, "cannot read " + path.string()};
    }
    return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

std::vector<std::string> read_entry_lines(const fs::path &path, std::size_t first_index) {
    std::vector<std::string> out;
    if (!fs::exists(path)) {
        return out;
    }
    std::ifstream in{path, std::ios::binary};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto j = nlohmann::json::parse(line);
        if (j.at("index").get<std::size_t>() != first_index + out.size()) {
            throw ProviderError{ProviderError::Kind::state, path.string() + ": entry indices out of sequence"};
        }
        out.push_back(j.at("content").get<std::string>());
    }
    return out;
}

std::optional<std::string> id_field(const Bytes &entry) {
    auto j = nlohmann::json::parse(entry.begin(), entry.end(), nullptr, false);
    if (j.is_object() && j.contains("id") && j["id"].is_string()) {
        return j["id"].get<std::string>();
    }
    return std::nullopt;
}

std::string random_token() {
    std::array<unsigned char, 24> buf{};
    randombytes_buf(buf.data(), buf.size());
    return to_hex(buf);
}

nlohmann::json config_json(const AuthoritativeConfig &c) {
    return {{"fee_membership", c.fee_membership},
            {"fee_query", c.fee_query},
            {"retention", c.retention},
            {"hash", std::string{to_string(c.hash)}}};
}

AuthoritativeConfig config_from_json(const nlohmann::json &j) {
    AuthoritativeConfig c;
    c.fee_membership = j.at("fee_membership").get<std::uint64_t>();
    c.fee_query = j.at("fee_query").get<std::uint64_t>();
    c.retention = j.at("retention").get<std::uint64_t>();
    c.hash = parse_hash_algorithm(j.at("hash").get<std::string>());
    return c;
}

} // namespace

int ProviderError::http_status() const {
    switch (kind_) {
    case Kind::not_found:
        return 404;
    case Kind::uncommitted:
        return 409;
    case Kind::locked:
        return 423;
    case Kind::rejected:
        return 502;
    case Kind::invalid:
        return 400;
    case Kind::state:
        return 500;
    }
    return 500;
}

Provider::Provider(fs::path dir, ProviderConfig config, IdentityCredential identity, KeyPair wallet,
                   LedgerClient &ledger)
    : dir_{std::move(dir)},
      config_{std::move(config)},
      identity_{std::move(identity)},
      wallet_{std::move(wallet), ledger},
      ledger_{ledger},
      log_{Hasher{config_.contract.hash}} {}

std::unique_ptr<Provider> Provider::init(const fs::path &dir, ProviderConfig config, IdentityCredential identity,
                                         KeyPair wallet, LedgerClient &ledger) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        throw ProviderError{ProviderError::Kind::state, "refusing to overwrite existing state in " + dir.string()};
    }
    fs::create_directories(dir);
    std::unique_ptr<Provider> p{new Provider{dir, std::move(config), std::move(identity), std::move(wallet), ledger}};
    p->identity_.save(dir / kIdentityFile);
    p->wallet_.key().save(dir / kWalletFile);
    p->admin_token_ = random_token();
    write_atomically(dir / kTokenFile, p->admin_token_ + "\n");
    fs::permissions(dir / kTokenFile, fs::perms::owner_read | fs::perms::owner_write);

    auto address = p->wallet_.deploy(AuthoritativeContract::kCodeId, AuthoritativeContract::encode_init(p->config_.contract));
    p->manifest_ = Manifest::create(p->config_.url, address,
                                    AuthoritativeContract::interface_descriptor(p->config_.contract),
                                    p->config_.data_structure, p->identity_.key);

    p->log_.append(p->manifest_.serialize());
    auto r = p->wallet_.send(address, "update", authoritative_args::update(p->log_.root(), {}));
    if (!r.ok()) {
        throw ProviderError{ProviderError::Kind::rejected, "initial update rejected: " + r.error};
    }
    p->committed_ = 1;
    p->committed_time_ = r.timestamp;
    p->append_committed(0, 1);
    p->persist_staging();
    p->persist_meta();
    return p;
}

std::unique_ptr<Provider> Provider::open(const fs::path &dir, LedgerClient &ledger) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(dir / kMetaFile));
    } catch (const nlohmann::json::exception &e) {
        throw ProviderError{ProviderError::Kind::state, std::string{"corrupt provider.json: "} + e.what()};
    }
    ProviderConfig config;
    config.url = meta.at("url").get<std::string>();
    config.data_structure = meta.at("data_structure").get<std::string>();
    config.contract = config_from_json(meta.at("contract"));

    std::unique_ptr<Provider> p{new Provider{dir, config, IdentityCredential::load(dir / kIdentityFile),
                                             KeyPair::load(dir / kWalletFile), ledger}};
    p->admin_token_ = read_file(dir / kTokenFile);
    while (!p->admin_token_.empty() && (p->admin_token_.back() == '\n' || p->admin_token_.back() == '\r')) {
        p->admin_token_.pop_back();
    }

    auto committed = read_entry_lines(dir / kEntriesFile, 0);
    if (committed.empty()) {
        throw ProviderError{ProviderError::Kind::state, "no committed entries in " + dir.string()};
    }
    p->manifest_ = Manifest::parse(committed.front());
    if (p->manifest_.sc_address.str() != meta.at("contract_address").get<std::string>() ||
        !p->manifest_.verify(p->identity_.key.public_key())) {
        throw ProviderError{ProviderError::Kind::state, "entry 0 is not this provider's signed manifest"};
    }
    for (const auto &e : committed) {
        p->log_.append(e);
    }
    p->committed_ = committed.size();
    if (p->committed_ != meta.at("committed_size").get<std::size_t>() ||
        p->log_.root().hex() != meta.at("committed_root").get<std::string>()) {
        throw ProviderError{ProviderError::Kind::state, "entries.jsonl does not match provider.json"};
    }
    p->committed_time_ = meta.at("committed_time").get<std::uint64_t>();
    p->answered_through_ = meta.at("answered_through").get<std::uint64_t>();
    p->locked_ = meta.at("locked").get<bool>();
    for (std::size_t i = 0; i < p->committed_; ++i) {
        p->index_entry(i);
    }
    for (const auto &e : read_entry_lines(dir / kStagingFile, p->committed_)) {
        p->log_.append(e);
    }

    // A crash between an accepted update and its bookkeeping leaves the
    // contract ahead of provider.json; adopt the staged prefix it commits.
    auto v = p->wallet_.view(p->contract_address(), "latest_root", {});
    if (!v.ok) {
        throw ProviderError{ProviderError::Kind::state, "cannot read contract root: " + v.error};
    }
    ArgReader reader{v.ret};
    auto time = reader.u64();
    auto root = reader.digest();
    if (root != p->log_.root_at(p->committed_)) {
        std::optional<std::size_t> match;
        for (auto n = p->log_.size(); n > p->committed_; --n) {
            if (p->log_.root_at(n) == root) {
                match = n;
                break;
            }
        }
        if (!match) {
            throw ProviderError{ProviderError::Kind::state, "contract root " + root.hex() + " matches no local log size"};
        }
        auto from = p->committed_;
        p->committed_ = *match;
        p->committed_time_ = time;
        for (auto i = from; i < p->committed_; ++i) {
            p->index_entry(i);
        }
        p->append_committed(from, p->committed_);
        p->persist_staging();
        p->persist_meta();
    }
    return p;
}

void Provider::persist_meta() const {
    nlohmann::ordered_json j;
    j["url"] = config_.url;
    j["data_structure"] = config_.data_structure;
    j["contract"] = config_json(config_.contract);
    j["contract_address"] = manifest_.sc_address.str();
    j["identity_public_key"] = to_hex(identity_.key.public_key());
    j["wallet_address"] = wallet_.address().str();
    j["committed_size"] = committed_;
    j["committed_root"] = log_.root_at(committed_).hex();
    j["committed_time"] = committed_time_;
    j["answered_through"] = answered_through_;
    j["locked"] = locked_;
    write_atomically(dir_ / kMetaFile, j.dump(2) + "\n");
}

void Provider::persist_staging() const {
    std::string data;
    for (auto i = committed_; i < log_.size(); ++i) {
        data += entry_line(i, log_.entry(i));
    }
    write_atomically(dir_ / kStagingFile, data);
}

void Provider::append_committed(std::size_t from, std::size_t to) const {
    std::ofstream out{dir_ / kEntriesFile, std::ios::binary | std::ios::app};
    for (auto i = from; i < to; ++i) {
        out << entry_line(i, log_.entry(i));
    }
    out.flush();
    if (!out) {
        throw ProviderError{ProviderError::Kind::state, "cannot append to entries.jsonl"};
    }
}

void Provider::index_entry(std::size_t index) {
    if (auto id = id_field(log_.entry(index))) {
        by_id_[*id] = index;
    }
}

std::optional<std::size_t> Provider::find_by_id(std::string_view id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

PublishResult Provider::publish_entries(const std::vector<std::string> &batch) {
    std::lock_guard writer{writer_mutex_};
    if (batch.empty()) {
        std::shared_lock lock{state_mutex_};
        return {committed_, log_.root_at(committed_), std::nullopt};
    }
    for (const auto &e : batch) {
        if (e.empty() || !nlohmann::json::accept(e)) {
            throw ProviderError{ProviderError::Kind::invalid, "entries must be non-empty JSON documents"};
        }
    }

    std::size_t old_size = 0;
    std::size_t new_size = 0;
    Digest root;
    SidedProof proof;
    {
        std::unique_lock lock{state_mutex_};
        if (locked_) {
            throw ProviderError{ProviderError::Kind::locked, "contract is locked; publishing is disabled"};
        }
        for (const auto &e : batch) {
            log_.append(e);
        }
        persist_staging();
        old_size = committed_;
        new_size = log_.size();
        root = log_.root_at(new_size);
        proof = log_.consistency_proof(old_size, new_size);
    }

    auto receipt = wallet_.send(contract_address(), "update", authoritative_args::update(root, proof));
    if (!receipt.ok()) {
        alarm("update to size " + std::to_string(new_size) + " rejected: " + receipt.error +
              "; entries stay staged and are not served");
        throw ProviderError{ProviderError::Kind::rejected, "update rejected: " + receipt.error};
    }

    std::unique_lock lock{state_mutex_};
    committed_ = new_size;
    committed_time_ = receipt.timestamp;
    for (auto i = old_size; i < new_size; ++i) {
        index_entry(i);
    }
    append_committed(old_size, new_size);
    persist_staging();
    persist_meta();
    return {new_size, root, receipt};
}

EntryResponse Provider::response_for(std::size_t index) const {
    return {to_string(log_.entry(index)), log_.membership_proof(index, committed_)};
}

EntryResponse Provider::serve_entry(std::size_t index) const {
    std::shared_lock lock{state_mutex_};
    if (index >= log_.size()) {
        throw ProviderError{ProviderError::Kind::not_found, "no entry " + std::to_string(index)};
    }
    if (index >= committed_) {
        throw ProviderError{ProviderError::Kind::uncommitted, "entry " + std::to_string(index) + " is not committed"};
    }
    return response_for(index);
}

EntryResponse Provider::serve_entry_by_id(std::string_view id) const {
    std::shared_lock lock{state_mutex_};
    if (auto index = find_by_id(id)) {
        return response_for(*index);
    }
    for (auto i = committed_; i < log_.size(); ++i) {
        if (id_field(log_.entry(i)) == id) {
            throw ProviderError{ProviderError::Kind::uncommitted, "entry with id " + std::string{id} + " is not committed"};
        }
    }
    throw ProviderError{ProviderError::Kind::not_found, "no entry with id " + std::string{id}};
}

std::string Provider::manifest_bytes() const {
    std::shared_lock lock{state_mutex_};
    return to_string(log_.entry(0));
}

RootInfo Provider::root_info() const {
    std::shared_lock lock{state_mutex_};
    return {committed_, log_.root_at(committed_), committed_time_};
}

std::size_t Provider::committed_size() const {
    std::shared_lock lock{state_mutex_};
    return committed_;
}

std::size_t Provider::staged_size() const {
    std::shared_lock lock{state_mutex_};
    return log_.size() - committed_;
}

bool Provider::locked() const {
    std::shared_lock lock{state_mutex_};
    return locked_;
}

std::string Provider::resolve_filter(std::string_view filter) const {
    auto j = nlohmann::json::parse(filter, nullptr, false);
    if (j.is_object() && j.contains("id") && j["id"].is_string()) {
        std::shared_lock lock{state_mutex_};
        if (auto index = find_by_id(j["id"].get<std::string>())) {
            return response_for(*index).serialize();
        }
    }
    nlohmann::ordered_json reply;
    reply["error"] = "no match";
    if (j.is_discarded()) {
        reply["filter"] = std::string{filter};
    } else {
        reply["filter"] = j;
    }
    return reply.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::size_t Provider::respond_to_queries() {
    std::lock_guard writer{writer_mutex_};
    auto count_view = wallet_.view(contract_address(), "query_count", {});
    if (!count_view.ok) {
        throw ProviderError{ProviderError::Kind::state, "query_count failed: " + count_view.error};
    }
    auto count = decode_u64(count_view.ret);
    auto start = answered_through_;
    std::size_t sent = 0;
    for (auto id = answered_through_ + 1; id <= count; ++id) {
        auto existing = wallet_.view(contract_address(), "get_response", authoritative_args::id(id));
        if (existing.ok && ArgReader{existing.ret}.bytes().size() > 0) {
            answered_through_ = id;
            continue;
        }
        auto q = wallet_.view(contract_address(), "get_query", authoritative_args::id(id));
        if (!q.ok) {
            throw ProviderError{ProviderError::Kind::state, "get_query failed: " + q.error};
        }
        ArgReader query_reader{q.ret};
        auto filter = to_string(query_reader.bytes());
        auto payload = resolve_filter(filter);
        auto r = wallet_.send(contract_address(), "store_response", authoritative_args::store_response(id, as_bytes(payload)));
        if (!r.ok()) {
            alarm("store_response for query " + std::to_string(id) + " failed: " + r.error);
            break;
        }
        ++sent;
        answered_through_ = id;
    }
    if (answered_through_ != start) {
        std::shared_lock lock{state_mutex_};
        persist_meta();
    }
    return sent;
}

void Provider::lock_service() {
    std::lock_guard writer{writer_mutex_};
    if (locked()) {
        return;
    }
    auto r = wallet_.send(contract_address(), "lock", {});
    if (!r.ok()) {
        throw ProviderError{ProviderError::Kind::rejected, "lock rejected: " + r.error};
    }
    std::unique_lock lock{state_mutex_};
    locked_ = true;
    persist_meta();
}

} // namespace authfeed
