#include "authfeed/party_client.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "authfeed/authoritative_contract.hpp"

namespace authfeed {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    auto start = s.find_first_not_of(" \t\r\n");
    return start == std::string::npos ? std::string{} : s.substr(start);
}

std::string url_encode(std::string_view s) {
    static const char *hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

} // namespace

TrustAnchor TrustAnchor::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw std::runtime_error{"cannot read trust anchor " + path.string()};
    }
    std::string text{std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_object()) {
        return {j.value("subject", ""), from_hex(j.at("public_key").get<std::string>())};
    }
    return {"", from_hex(trim(text))};
}

std::string EntrySelector::describe() const {
    if (id) {
        return "id " + *id;
    }
    return "index " + std::to_string(index.value_or(0));
}

std::string CensorshipEvidence::report() const {
    std::ostringstream out;
    out << "censorship evidence: query " << query_id << " to contract " << contract.str() << " is unanswered\n"
        << "  query transaction: position " << position << ", timestamp " << timestamp << ", id " << tx_id << "\n"
        << "  filter: " << filter << "\n"
        << "  waited " << waited.count() << " ms; ledger clock now " << ledger_clock_at_timeout
        << "; get_response(" << query_id << ") is empty\n";
    return out.str();
}

PartyClient::PartyClient(std::string provider_url, TrustAnchor anchor, Wallet wallet)
    : provider_url_{std::move(provider_url)}, anchor_{std::move(anchor)}, wallet_{std::move(wallet)} {}

std::string PartyClient::http_get(const std::string &path) {
    httplib::Client http{provider_url_};
    http.set_connection_timeout(http_timeout_);
    http.set_read_timeout(http_timeout_);
    auto res = http.Get(path);
    if (!res) {
        throw ClientError{ClientError::Kind::transport,
                          "cannot reach provider at " + provider_url_ + " (" + httplib::to_string(res.error()) + ")"};
    }
    if (res->status != 200) {
        throw ClientError{ClientError::Kind::transport, "provider answered " + std::to_string(res->status) +
                                                            " for " + path + ": " + res->body};
    }
    return res->body;
}

const Manifest &PartyClient::fetch_and_verify_manifest() {
    if (manifest_) {
        return *manifest_;
    }
    auto body = http_get("/manifest");
    Manifest m;
    try {
        m = Manifest::parse(body);
    } catch (const ManifestError &e) {
        throw ClientError{ClientError::Kind::verification, e.what()};
    }
    if (!m.verify(anchor_.public_key)) {
        throw ClientError{ClientError::Kind::verification,
                          "manifest signature does not verify under the pinned key" +
                              (anchor_.domain.empty() ? std::string{} : " for " + anchor_.domain)};
    }

    // The signature binds the manifest to the web identity; inclusion as
    // entry 0 under a contract root binds it to the ledger identity.
    auto entry0 = fetch_entry(EntrySelector::by_index(0));
    if (entry0.content != body) {
        throw ClientError{ClientError::Kind::verification, "entry 0 is not the served manifest"};
    }
    manifest_ = m;
    bool committed = false;
    try {
        committed = verify_entry(entry0);
    } catch (const std::exception &) {
        committed = false;
    }
    if (!committed) {
        manifest_.reset();
        throw ClientError{ClientError::Kind::verification,
                          "manifest is not committed as entry 0 of contract " + m.sc_address.str()};
    }
    return *manifest_;
}

EntryResponse PartyClient::fetch_entry(const EntrySelector &selector) {
    auto path = selector.id ? "/entries?id=" + url_encode(*selector.id)
                            : "/entries/" + std::to_string(selector.index.value_or(0));
    auto body = http_get(path);
    try {
        return EntryResponse::parse(body);
    } catch (const minijson::ParseError &e) {
        throw ClientError{ClientError::Kind::verification, std::string{"malformed entry response: "} + e.what()};
    }
}

std::uint64_t PartyClient::interface_fee(std::string_view function) {
    const auto &m = fetch_and_verify_manifest();
    for (const auto &f : m.sc_interface.at("functions")) {
        if (f.at("name") == function) {
            return f.at("fee").get<std::uint64_t>();
        }
    }
    throw ClientError{ClientError::Kind::verification, "manifest interface has no " + std::string{function}};
}

std::uint64_t PartyClient::fee_membership() {
    return interface_fee("membership");
}

std::uint64_t PartyClient::fee_query() {
    return interface_fee("query");
}

const Address &PartyClient::contract() {
    return fetch_and_verify_manifest().sc_address;
}

bool PartyClient::verify_entry(const EntryResponse &entry) {
    auto v = wallet_.view(contract(), "membership",
                          authoritative_args::membership(as_bytes(entry.content), entry.proofs), fee_membership());
    if (!v.ok) {
        throw ClientError{ClientError::Kind::verification, "membership view failed: " + v.error};
    }
    return decode_bool(v.ret);
}

Address PartyClient::deploy_relying(const std::string &match_id, const Address &party_b, std::uint64_t deposit,
                                    Prediction mine, Prediction theirs) {
    BetTerms terms{contract(), match_id, party_b, deposit, mine, theirs};
    return wallet_.deploy(RelyingContract::kCodeId, terms.encode(), deposit);
}

void PartyClient::join(const Address &bet, std::uint64_t deposit) {
    auto r = wallet_.send(bet, "join", {}, deposit);
    if (!r.ok()) {
        throw std::runtime_error{"join failed: " + r.error};
    }
}

SettlementReport PartyClient::settle(const Address &bet, const EntrySelector &selector) {
    EntryResponse entry;
    try {
        entry = fetch_entry(selector);
    } catch (const ClientError &e) {
        if (e.kind() != ClientError::Kind::transport) {
            throw;
        }
        std::string filter = selector.id ? nlohmann::json{{"id", *selector.id}}.dump() : std::string{"<filter>"};
        throw ClientError{ClientError::Kind::transport,
                          std::string{e.what()} + "\nhint: the provider may be censoring this entry; use query " +
                              "(feed-party query --filter '" + filter + "') to request it on-ledger"};
    }
    if (!verify_entry(entry)) {
        throw ClientError{ClientError::Kind::verification,
                          "entry " + selector.describe() + " fails membership against every retained root; not submitted"};
    }
    auto fee = fee_membership();
    auto r = wallet_.send(bet, "submit_data", relying_args::submit_data(as_bytes(entry.content), entry.proofs), fee);
    if (!r.ok()) {
        throw ClientError{ClientError::Kind::verification, "submit_data failed: " + r.error};
    }
    SettlementReport report{decode_result(r.return_value), fee, r.position, entry.content};
    if (report.result == "unverified") {
        throw ClientError{ClientError::Kind::verification, "relying contract could not verify the entry"};
    }
    return report;
}

SettlementReport PartyClient::settle_from_query(const Address &bet, std::uint64_t id) {
    auto fee = fee_membership();
    auto r = wallet_.send(bet, "if_censorship", relying_args::if_censorship(id), fee);
    if (!r.ok()) {
        throw ClientError{ClientError::Kind::verification, "if_censorship failed: " + r.error};
    }
    SettlementReport report{decode_result(r.return_value), fee, r.position, {}};
    if (report.result == "unanswered" || report.result == "malformed") {
        report.fee_spent = 0;
    }
    if (report.result == "unverified") {
        throw ClientError{ClientError::Kind::verification, "response to query " + std::to_string(id) +
                                                               " does not verify"};
    }
    return report;
}

std::uint64_t PartyClient::censor_query(std::string_view filter, Receipt *receipt) {
    auto r = wallet_.send(contract(), "query", authoritative_args::query(as_bytes(filter)), fee_query());
    if (receipt) {
        *receipt = r;
    }
    if (!r.ok()) {
        throw std::runtime_error{"query failed: " + r.error};
    }
    return decode_u64(r.return_value);
}

CensorshipEvidence PartyClient::evidence_for(std::uint64_t id) {
    CensorshipEvidence ev;
    ev.query_id = id;
    ev.contract = contract();
    auto trace = wallet_.client().trace(0);
    bool found = false;
    for (const auto &rec : trace) {
        if (rec.tx.function != "query" || rec.tx.target != ev.contract || rec.status != TxStatus::ok) {
            continue;
        }
        if (decode_u64(rec.return_value) == id) {
            ev.position = rec.position;
            ev.timestamp = rec.timestamp;
            ev.tx_id = rec.tx.id().hex();
            ArgReader args{rec.tx.args};
            ev.filter = to_string(args.bytes());
            found = true;
            break;
        }
    }
    if (!found) {
        throw ClientError{ClientError::Kind::verification, "no query " + std::to_string(id) + " in the ledger"};
    }
    if (!trace.empty()) {
        ev.ledger_clock_at_timeout = trace.back().timestamp;
    }
    return ev;
}

AwaitResult PartyClient::await_response(std::uint64_t id, std::chrono::milliseconds timeout,
                                        std::chrono::milliseconds poll, CensorshipEvidence *evidence) {
    auto start = std::chrono::steady_clock::now();
    while (true) {
        auto v = wallet_.view(contract(), "get_response", authoritative_args::id(id));
        if (!v.ok) {
            throw ClientError{ClientError::Kind::verification, "get_response failed: " + v.error};
        }
        ArgReader reader{v.ret};
        auto payload = reader.bytes();
        if (!payload.empty()) {
            AwaitResult result{to_string(payload), std::nullopt};
            try {
                auto entry = EntryResponse::parse(result.payload);
                if (verify_entry(entry)) {
                    result.entry = std::move(entry);
                }
            } catch (const minijson::ParseError &) {
                // "no match" and other non-entry payloads
            }
            return result;
        }
        auto waited = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        if (waited >= timeout) {
            auto ev = evidence_for(id);
            ev.waited = waited;
            if (evidence) {
                *evidence = ev;
            }
            throw ClientError{ClientError::Kind::censorship_timeout, ev.report()};
        }
        std::this_thread::sleep_for(std::min(poll, timeout - waited));
    }
}

} // namespace authfeed
