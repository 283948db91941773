// Content provider: state directory setup, HTTP serving and admin commands.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "authfeed/ledger_http.hpp"
#include "authfeed/provider_server.hpp"

using namespace authfeed;

namespace {

std::atomic<bool> g_stop{false};

std::string read_text(const std::string &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw std::runtime_error{"cannot read " + path};
    }
    return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

// A JSON array of documents, or JSON Lines with one document per line.
std::string batch_body(const std::string &path) {
    auto text = read_text(path);
    auto whole = nlohmann::ordered_json::parse(text, nullptr, false);
    if (!whole.is_discarded() && whole.is_array()) {
        return text;
    }
    auto arr = nlohmann::ordered_json::array();
    std::istringstream in{text};
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            arr.push_back(nlohmann::ordered_json::parse(line));
        }
    }
    return arr.dump();
}

int admin_post(const std::string &provider_url, const std::string &dir, const std::string &path,
               const std::string &body) {
    auto token = read_text(dir + "/admin.token");
    while (!token.empty() && (token.back() == '\n' || token.back() == '\r')) {
        token.pop_back();
    }
    httplib::Client http{provider_url};
    http.set_read_timeout(std::chrono::seconds{60});
    auto res = http.Post(path, {{"Authorization", "Bearer " + token}}, body, "application/json");
    if (!res) {
        std::cerr << "error: cannot reach provider at " << provider_url << " (" << httplib::to_string(res.error())
                  << ")\n";
        return 3;
    }
    std::cout << res->body << "\n";
    return res->status == 200 ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"feed-provider: authenticated data feed provider"};
    app.require_subcommand(1);

    std::string dir;
    std::string ledger_url = "http://127.0.0.1:8545";
    std::string provider_url = "http://127.0.0.1:8080";

    auto *init = app.add_subcommand("init", "Deploy the contract, sign the manifest, create the state directory");
    std::string wallet_key;
    std::string identity_key;
    std::string subject = "feed.example.org";
    ProviderConfig config;
    std::string hash = "keccak256";
    init->add_option("--dir", dir, "State directory (must be empty or absent)")->required();
    init->add_option("--ledger", ledger_url);
    init->add_option("--url", config.url, "Public URL written into the manifest");
    init->add_option("--wallet-key", wallet_key, "Funded key file that owns the contract")->required();
    init->add_option("--identity-key", identity_key, "Identity key (with .cert); generated when omitted");
    init->add_option("--subject", subject, "Certificate subject for a generated identity");
    init->add_option("--data-structure", config.data_structure);
    init->add_option("--fee-mem", config.contract.fee_membership);
    init->add_option("--fee-query", config.contract.fee_query);
    init->add_option("--retention", config.contract.retention, "Roots kept by the contract (K)");
    init->add_option("--hash", hash)->check(CLI::IsMember({"keccak256", "sha256"}));

    auto *serve = app.add_subcommand("serve", "Serve entries over HTTP and answer on-ledger queries");
    std::string host = "127.0.0.1";
    int port = 8080;
    bool no_responder = false;
    int poll_ms = 200;
    serve->add_option("--dir", dir)->required();
    serve->add_option("--ledger", ledger_url);
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_flag("--no-responder", no_responder, "Do not answer censorship queries");
    serve->add_option("--poll-ms", poll_ms, "Responder poll interval");

    auto *publish = app.add_subcommand("publish", "Publish a batch through a running provider");
    std::string batch_file;
    publish->add_option("--dir", dir, "State directory (for the admin token)")->required();
    publish->add_option("--provider", provider_url);
    publish->add_option("--file", batch_file, "JSON array or JSON Lines of entries")->required();

    auto *lock = app.add_subcommand("lock", "Lock the contract; serving continues read-only");
    lock->add_option("--dir", dir)->required();
    lock->add_option("--provider", provider_url);

    auto *respond = app.add_subcommand("respond", "Run one responder pass now");
    respond->add_option("--dir", dir)->required();
    respond->add_option("--provider", provider_url);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*init) {
            HttpLedgerClient ledger{ledger_url};
            config.contract.hash = parse_hash_algorithm(hash);
            auto identity = identity_key.empty() ? IdentityCredential::generate(subject)
                                                 : IdentityCredential::load(identity_key);
            auto p = Provider::init(dir, config, identity, KeyPair::load(wallet_key), ledger);
            std::cout << "contract     " << p->contract_address().str() << "\n"
                      << "identity key " << to_hex(p->identity().key.public_key()) << "\n"
                      << "certificate  " << dir << "/identity.key.cert\n"
                      << "admin token  " << dir << "/admin.token\n";
        } else if (*serve) {
            HttpLedgerClient ledger{ledger_url};
            auto p = Provider::open(dir, ledger);
            ProviderServer server{*p, {!no_responder, std::chrono::milliseconds{poll_ms}}};
            std::signal(SIGINT, [](int) { g_stop = true; });
            std::signal(SIGTERM, [](int) { g_stop = true; });
            int bound = server.start(host, port);
            std::cerr << "provider listening on http://" << host << ":" << bound << " (contract "
                      << p->contract_address().str() << ", " << p->committed_size() << " entries"
                      << (no_responder ? ", responder off" : "") << ")" << std::endl;
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds{100});
            }
            server.stop();
        } else if (*publish) {
            return admin_post(provider_url, dir, "/admin/publish", batch_body(batch_file));
        } else if (*lock) {
            return admin_post(provider_url, dir, "/admin/lock", "");
        } else if (*respond) {
            return admin_post(provider_url, dir, "/admin/respond", "");
        }
    } catch (const ProviderError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
