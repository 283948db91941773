// Contract party: verifies the provider, runs bets, and uses the on-ledger
// query path when the provider does not serve.
//
// Exit codes: 0 ok, 1 usage or other error, 2 verification failure,
// 3 transport failure, 4 censorship timeout.

#include <iostream>

#include <CLI11.hpp>

#include "authfeed/ledger_http.hpp"
#include "authfeed/party_client.hpp"

using namespace authfeed;

namespace {

Address address_of(const std::string &who) {
    if (who.rfind("0x", 0) == 0) {
        return Address::parse(who);
    }
    return KeyPair::load(who).address();
}

Prediction prediction_of(const std::string &s) {
    return parse_prediction(s);
}

EntrySelector selector(const std::optional<std::size_t> &index, const std::optional<std::string> &id) {
    if (id) {
        return EntrySelector::by_id(*id);
    }
    if (index) {
        return EntrySelector::by_index(*index);
    }
    throw CLI::ValidationError{"one of --index or --id is required"};
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"feed-party: verify a feed provider and settle contracts with its data"};
    app.set_config("--config", "", "TOML/INI file with provider, anchor, ledger and key");
    app.require_subcommand(1);

    std::string provider_url = "http://127.0.0.1:8080";
    std::string anchor_path;
    std::string ledger_url = "http://127.0.0.1:8545";
    std::string key_path;
    app.add_option("--provider", provider_url, "Provider base URL");
    app.add_option("--anchor", anchor_path, "Pinned provider key: certificate or hex key file");
    app.add_option("--ledger", ledger_url, "Ledger base URL");
    app.add_option("--key", key_path, "This party's key file");

    std::optional<std::size_t> index;
    std::optional<std::string> id;
    std::string bet;
    std::uint64_t deposit = 0;

    auto *verify = app.add_subcommand("manifest-verify", "Check the manifest signature and its commitment");

    auto *deploy = app.add_subcommand("deploy-relying", "Deploy a bet and escrow this party's deposit");
    std::string match_id;
    std::string party_b;
    std::string mine = "local";
    deploy->add_option("--match-id", match_id)->required();
    deploy->add_option("--party-b", party_b, "Counterparty address or key file")->required();
    deploy->add_option("--deposit", deposit)->required();
    deploy->add_option("--predict", mine, "This party's prediction")->check(CLI::IsMember({"local", "visitor"}));

    auto *join = app.add_subcommand("join", "Escrow the counterparty deposit");
    join->add_option("--bet", bet)->required();
    join->add_option("--deposit", deposit)->required();

    auto *fetch = app.add_subcommand("fetch-entry", "Fetch and verify an entry");
    fetch->add_option("--index", index);
    fetch->add_option("--id", id);

    auto *settle = app.add_subcommand("settle", "Fetch an entry and submit it to a bet");
    settle->add_option("--bet", bet)->required();
    settle->add_option("--index", index);
    settle->add_option("--id", id);

    auto *query = app.add_subcommand("query", "Send a censorship-evident query");
    std::string filter;
    query->add_option("--filter", filter, R"(e.g. {"id":"341576"})")->required();

    auto *await = app.add_subcommand("await-response", "Wait for the provider's on-ledger answer");
    std::uint64_t query_id = 0;
    int timeout_ms = 10000;
    int poll_ms = 200;
    await->add_option("--id", query_id)->required();
    await->add_option("--timeout-ms", timeout_ms);
    await->add_option("--poll-ms", poll_ms);

    auto *settle_query = app.add_subcommand("settle-query", "Settle a bet from an answered query");
    settle_query->add_option("--bet", bet)->required();
    settle_query->add_option("--query-id", query_id)->required();

    auto *dump = app.add_subcommand("ledger-dump", "Print the ledger trace");
    bool text = false;
    dump->add_flag("--text", text);

    CLI11_PARSE(app, argc, argv);

    try {
        HttpLedgerClient ledger{ledger_url};
        if (*dump) {
            if (text) {
                std::cout << ledger.trace_text();
            } else {
                for (const auto &r : ledger.trace(0)) {
                    std::cout << r.to_jsonl() << "\n";
                }
            }
            return 0;
        }
        if (anchor_path.empty() || key_path.empty()) {
            std::cerr << "error: --anchor and --key are required\n";
            return 1;
        }
        PartyClient party{provider_url, TrustAnchor::load(anchor_path), Wallet{KeyPair::load(key_path), ledger}};

        if (*verify) {
            const auto &m = party.fetch_and_verify_manifest();
            std::cout << "manifest ok\n  url      " << m.url << "\n  contract " << m.sc_address.str()
                      << "\n  schema   " << m.data_structure << "\n  fee_mem  " << party.fee_membership()
                      << "\n  fee_query " << party.fee_query() << "\n";
        } else if (*deploy) {
            auto mine_p = prediction_of(mine);
            auto theirs = mine_p == Prediction::local ? Prediction::visitor : Prediction::local;
            auto address = party.deploy_relying(match_id, address_of(party_b), deposit, mine_p, theirs);
            std::cout << address.str() << "\n";
        } else if (*join) {
            party.fetch_and_verify_manifest();
            party.join(Address::parse(bet), deposit);
            std::cout << "joined " << bet << "\n";
        } else if (*fetch) {
            auto entry = party.fetch_entry(selector(index, id));
            if (!party.verify_entry(entry)) {
                throw ClientError{ClientError::Kind::verification, "entry fails membership"};
            }
            std::cout << entry.serialize() << "\n";
        } else if (*settle) {
            auto report = party.settle(Address::parse(bet), selector(index, id));
            std::cout << "result " << report.result << "\nfee    " << report.fee_spent << "\n";
            if (report.position) {
                std::cout << "tx     " << *report.position << "\n";
            }
        } else if (*query) {
            Receipt r;
            auto qid = party.censor_query(filter, &r);
            std::cout << "query id " << qid << "\ntx       " << r.position.value_or(0) << "\n";
        } else if (*await) {
            auto answer = party.await_response(query_id, std::chrono::milliseconds{timeout_ms},
                                               std::chrono::milliseconds{poll_ms});
            std::cout << answer.payload << "\n";
            if (!answer.entry) {
                std::cerr << "the response carries no verifiable entry\n";
                return 2;
            }
        } else if (*settle_query) {
            auto report = party.settle_from_query(Address::parse(bet), query_id);
            std::cout << "result " << report.result << "\nfee    " << report.fee_spent << "\n";
        }
    } catch (const ClientError &e) {
        std::cerr << e.what() << "\n";
        return e.exit_code();
    } catch (const TransportError &e) {
        std::cerr << "ledger unreachable: " << e.what() << "\n";
        return 3;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
