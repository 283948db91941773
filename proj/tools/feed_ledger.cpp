// Ledger node: key generation, genesis files, serving, replay and dumps.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "authfeed/ledger_http.hpp"
#include "authfeed/relying_contract.hpp"

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

std::vector<GenesisAllocation> load_genesis(const std::string &path) {
    auto j = nlohmann::json::parse(read_text(path));
    std::vector<GenesisAllocation> out;
    for (const auto &a : j.at("accounts")) {
        out.push_back({Address::parse(a.at("address").get<std::string>()), a.at("balance").get<std::uint64_t>()});
    }
    return out;
}

std::vector<TraceRecord> load_trace(const std::string &path) {
    std::vector<TraceRecord> out;
    std::ifstream in{path};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(TraceRecord::from_json(nlohmann::json::parse(line)));
        }
    }
    return out;
}

// "<address or key file>=<balance>"
GenesisAllocation parse_account(const std::string &spec) {
    auto eq = spec.rfind('=');
    if (eq == std::string::npos) {
        throw std::runtime_error{"expected <address|keyfile>=<balance>, got " + spec};
    }
    auto who = spec.substr(0, eq);
    auto balance = std::stoull(spec.substr(eq + 1));
    if (who.rfind("0x", 0) == 0) {
        return {Address::parse(who), balance};
    }
    return {KeyPair::load(who).address(), balance};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"feed-ledger: simulated ledger node"};
    app.require_subcommand(1);

    auto *keygen = app.add_subcommand("keygen", "Create an Ed25519 key file and print its address");
    std::string key_out;
    std::string seed_text;
    keygen->add_option("--out", key_out, "Key file to write")->required();
    keygen->add_option("--seed-text", seed_text, "Derive deterministically from this label (testing only)");

    auto *genesis = app.add_subcommand("genesis", "Write a genesis file");
    std::vector<std::string> accounts;
    std::string genesis_out;
    genesis->add_option("--account", accounts, "<address|keyfile>=<balance>, repeatable")->required();
    genesis->add_option("--out", genesis_out, "Genesis file to write")->required();

    auto *serve = app.add_subcommand("serve", "Serve a ledger over HTTP");
    std::string genesis_path;
    std::string host = "127.0.0.1";
    int port = 8545;
    bool wall_clock = false;
    std::string journal;
    serve->add_option("--genesis", genesis_path, "Genesis file")->required();
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_flag("--wall-clock", wall_clock, "Unix-second timestamps instead of the logical clock");
    serve->add_option("--journal", journal,
                      "Trace file: replayed at start if present, appended to while serving");

    auto *replay = app.add_subcommand("replay", "Re-apply a trace and print the state digest");
    std::string trace_path;
    replay->add_option("--genesis", genesis_path)->required();
    replay->add_option("--trace", trace_path)->required();
    replay->add_flag("--wall-clock", wall_clock);

    auto *dump = app.add_subcommand("dump", "Print a running ledger's trace");
    std::string ledger_url = "http://127.0.0.1:8545";
    bool text = false;
    dump->add_option("--ledger", ledger_url);
    dump->add_flag("--text", text, "Human-readable instead of JSON Lines");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*keygen) {
            auto key = seed_text.empty() ? KeyPair::generate() : KeyPair::from_seed_text(seed_text);
            key.save(key_out);
            std::cout << "address    " << key.address().str() << "\npublic key " << to_hex(key.public_key()) << "\n";
        } else if (*genesis) {
            nlohmann::json j{{"accounts", nlohmann::json::array()}};
            for (const auto &spec : accounts) {
                auto a = parse_account(spec);
                j["accounts"].push_back({{"address", a.account.str()}, {"balance", a.balance}});
            }
            std::ofstream{genesis_out} << j.dump(2) << "\n";
        } else if (*serve) {
            auto mode = wall_clock ? TimeMode::wall_clock : TimeMode::logical;
            auto alloc = load_genesis(genesis_path);
            std::unique_ptr<Ledger> ledger;
            if (!journal.empty() && std::ifstream{journal}) {
                auto records = load_trace(journal);
                ledger = Ledger::replay(alloc, standard_registry(), records, mode);
                std::cerr << "replayed " << records.size() << " transactions from " << journal << "\n";
            } else {
                ledger = std::make_unique<Ledger>(alloc, standard_registry(), mode);
            }
            LedgerServer server{*ledger};
            std::signal(SIGINT, [](int) { g_stop = true; });
            std::signal(SIGTERM, [](int) { g_stop = true; });
            int bound = server.start(host, port);
            std::cerr << "ledger listening on http://" << host << ":" << bound << std::endl;
            // New transactions are appended to the journal every poll.
            std::uint64_t journaled = ledger->trace_size();
            auto flush_journal = [&] {
                if (journal.empty()) {
                    return;
                }
                auto fresh = ledger->trace(journaled);
                if (fresh.empty()) {
                    return;
                }
                std::ofstream out{journal, std::ios::app};
                for (const auto &r : fresh) {
                    out << r.to_jsonl() << '\n';
                }
                out.flush();
                journaled += fresh.size();
            };
            while (!g_stop) {
                std::this_thread::sleep_for(std::chrono::milliseconds{100});
                flush_journal();
            }
            server.stop();
            flush_journal();
            std::cerr << "state digest " << ledger->state_digest().hex() << "\n";
        } else if (*replay) {
            auto records = load_trace(trace_path);
            auto ledger = Ledger::replay(load_genesis(genesis_path), standard_registry(), records,
                                         wall_clock ? TimeMode::wall_clock : TimeMode::logical);
            std::cout << "transactions " << records.size() << "\nstate digest " << ledger->state_digest().hex() << "\n";
        } else if (*dump) {
            HttpLedgerClient client{ledger_url};
            if (text) {
                std::cout << client.trace_text();
            } else {
                for (const auto &r : client.trace(0)) {
                    std::cout << r.to_jsonl() << "\n";
                }
            }
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
