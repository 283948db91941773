#include <gtest/gtest.h>

#include <thread>

#include <httplib.h>

#include "authfeed/party_client.hpp"
#include "authfeed/provider_server.hpp"
#include "fixtures.hpp"
#include "provider_world.hpp"

using namespace authfeed;
using namespace authfeed::testing;

namespace {

constexpr std::uint64_t kDeposit = 500;

/// A provider with the World Cup entries, served over HTTP.
struct Site {
    World w;
    TempDir dir;
    std::unique_ptr<Provider> provider;
    std::unique_ptr<ProviderServer> server;
    int port = 0;

    explicit Site(bool responder = false) {
        provider = w.init_provider(dir / "state");
        provider->publish_entries(fixtures::world_cup());
        server = std::make_unique<ProviderServer>(
            *provider, ProviderServerOptions{.responder = responder, .poll_interval = std::chrono::milliseconds{20}});
        port = server->start("127.0.0.1", 0);
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
    TrustAnchor anchor() const { return {w.identity.subject, w.identity.key.public_key()}; }

    PartyClient party(const KeyPair &key, std::string at = {}) {
        return PartyClient{at.empty() ? url() : at, anchor(), Wallet{key, w.client}};
    }
};

ClientError::Kind client_error(const std::function<void()> &fn, std::string *message = nullptr) {
    try {
        fn();
    } catch (const ClientError &e) {
        if (message) {
            *message = e.what();
        }
        return e.kind();
    }
    ADD_FAILURE() << "expected ClientError";
    return ClientError::Kind::verification;
}

const RelyingContract &bet_state(const Ledger &ledger, const Address &bet) {
    return dynamic_cast<const RelyingContract &>(*ledger.contract(bet));
}

/// Serves fixed bodies for /manifest and /entries/0.
struct FakeProvider {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    FakeProvider(std::string manifest, std::string entry0) {
        server.Get("/manifest", [manifest](const httplib::Request &, httplib::Response &res) {
            res.set_content(manifest, "application/json");
        });
        server.Get("/entries/0", [entry0](const httplib::Request &, httplib::Response &res) {
            res.set_content(entry0, "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread{[this] { server.listen_after_bind(); }};
        server.wait_until_ready();
    }
    ~FakeProvider() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

/// Forwards to a real provider, passing id lookups through `mutate`.
struct FaultProxy {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    FaultProxy(const std::string &upstream, std::function<std::string(std::string)> mutate) {
        server.Get(".*", [upstream, mutate](const httplib::Request &req, httplib::Response &res) {
            httplib::Client up{upstream};
            auto path = req.target.empty() ? req.path : req.target;
            auto r = up.Get(path);
            if (!r) {
                res.status = 502;
                return;
            }
            res.status = r->status;
            res.set_content(req.has_param("id") ? mutate(r->body) : r->body, "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread{[this] { server.listen_after_bind(); }};
        server.wait_until_ready();
    }
    ~FaultProxy() {
        server.stop();
        thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

} // namespace

TEST(PartyClient, HappyPathSettlesTheFinal) {
    Site site;
    auto alice = site.party(site.w.alice);
    auto bob = site.party(site.w.bob);

    const auto &m = alice.fetch_and_verify_manifest();
    EXPECT_EQ(m.sc_address, site.provider->contract_address());
    EXPECT_EQ(alice.fee_membership(), 10u);
    EXPECT_EQ(alice.fee_query(), 25u);

    auto bet = alice.deploy_relying("341576", site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    bob.fetch_and_verify_manifest();
    bob.join(bet, kDeposit);

    auto before = site.w.ledger.balance(site.w.alice.address());
    auto report = alice.settle(bet, EntrySelector::by_id("341576"));
    EXPECT_EQ(report.result, "local");
    EXPECT_EQ(report.fee_spent, 10u);
    EXPECT_EQ(report.content, fixtures::kFinal);
    EXPECT_EQ(site.w.ledger.balance(site.w.alice.address()), before + 2 * kDeposit - 10);
    EXPECT_EQ(site.w.ledger.balance(site.w.bob.address()), kFunds - kDeposit);
    EXPECT_TRUE(bet_state(site.w.ledger, bet).settled());
}

TEST(PartyClient, OtherMatchIsIgnored) {
    Site site;
    auto alice = site.party(site.w.alice);
    auto bet = alice.deploy_relying("341576", site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    site.party(site.w.bob).join(bet, kDeposit);
    EXPECT_EQ(alice.settle(bet, EntrySelector::by_id("341575")).result, "ignored");
    EXPECT_FALSE(bet_state(site.w.ledger, bet).settled());
}

TEST(PartyClient, WrongPinnedKeyIsRejected) {
    Site site;
    PartyClient alice{site.url(), TrustAnchor{"feed.example.org", site.w.mallory.public_key()},
                      Wallet{site.w.alice, site.w.client}};
    std::string message;
    auto kind = client_error([&] { alice.fetch_and_verify_manifest(); }, &message);
    EXPECT_EQ(kind, ClientError::Kind::verification);
    EXPECT_EQ(static_cast<int>(kind), 2);
    EXPECT_NE(message.find("signature"), std::string::npos);
}

TEST(PartyClient, ResignedManifestIsRejected) {
    Site site;
    auto honest = site.provider->manifest();
    auto forged = Manifest::create(honest.url, honest.sc_address, honest.sc_interface, honest.data_structure,
                                   site.w.mallory);
    FakeProvider fake{forged.serialize(), site.provider->serve_entry(0).serialize()};
    auto alice = site.party(site.w.alice, fake.url());
    EXPECT_EQ(client_error([&] { alice.fetch_and_verify_manifest(); }), ClientError::Kind::verification);
}

// Correctly signed, but the contract it names never committed it as entry 0.
TEST(PartyClient, UncommittedManifestIsRejected) {
    Site site;
    Wallet provider_wallet{site.w.provider_wallet, site.w.client};
    AuthoritativeConfig config;
    auto cc = provider_wallet.deploy(AuthoritativeContract::kCodeId, AuthoritativeContract::encode_init(config));
    auto manifest = Manifest::create("http://feed.example.org", cc, AuthoritativeContract::interface_descriptor(config),
                                     "{}", site.w.identity.key);
    auto bytes = manifest.serialize();
    // The contract holds a root over something else.
    provider_wallet.send(cc, "update", authoritative_args::update(Hasher{}(as_bytes(std::string_view{"other"})), {}));

    FakeProvider fake{bytes, EntryResponse{bytes, {}}.serialize()};
    auto alice = site.party(site.w.alice, fake.url());
    std::string message;
    EXPECT_EQ(client_error([&] { alice.fetch_and_verify_manifest(); }, &message), ClientError::Kind::verification);
    EXPECT_NE(message.find("not committed"), std::string::npos) << message;
}

TEST(PartyClient, OfflineProviderSuggestsQuery) {
    Site site;
    auto alice = site.party(site.w.alice);
    auto bet = alice.deploy_relying("341576", site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    site.party(site.w.bob).join(bet, kDeposit);
    site.server->stop();

    std::string message;
    auto kind = client_error([&] { alice.settle(bet, EntrySelector::by_id("341576")); }, &message);
    EXPECT_EQ(kind, ClientError::Kind::transport);
    EXPECT_EQ(static_cast<int>(kind), 3);
    EXPECT_NE(message.find("use query"), std::string::npos) << message;
    EXPECT_FALSE(bet_state(site.w.ledger, bet).settled());
}

TEST(PartyClient, CorruptedProofInTransitIsNotAccepted) {
    Site site;
    auto honest = site.party(site.w.alice);
    auto bet = honest.deploy_relying("341576", site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    site.party(site.w.bob).join(bet, kDeposit);

    // Flip one hex digit of the last proof hash.
    FaultProxy proxy{site.url(), [](std::string body) {
                         auto at = body.rfind("\"}");
                         if (at != std::string::npos && at > 0) {
                             body[at - 1] = body[at - 1] == '0' ? '1' : '0';
                         }
                         return body;
                     }};
    auto alice = site.party(site.w.alice, proxy.url());
    alice.fetch_and_verify_manifest();
    auto before = site.w.ledger.balance(site.w.alice.address());
    EXPECT_EQ(client_error([&] { alice.settle(bet, EntrySelector::by_id("341576")); }),
              ClientError::Kind::verification);
    EXPECT_FALSE(bet_state(site.w.ledger, bet).settled());
    EXPECT_EQ(site.w.ledger.balance(site.w.alice.address()), before);

    // Tampered content with the honest proof fares no better.
    FaultProxy goals{site.url(), [](std::string body) {
                         auto at = body.find("\"localGoals\":4");
                         if (at != std::string::npos) {
                             body[at + 13] = '1';
                         }
                         return body;
                     }};
    auto alice2 = site.party(site.w.alice, goals.url());
    EXPECT_EQ(client_error([&] { alice2.settle(bet, EntrySelector::by_id("341576")); }),
              ClientError::Kind::verification);
    EXPECT_FALSE(bet_state(site.w.ledger, bet).settled());
}

TEST(PartyClient, MutedProviderYieldsTimeoutEvidence) {
    Site site{false};
    auto alice = site.party(site.w.alice);
    Receipt receipt;
    auto id = alice.censor_query(R"({"id":"341576"})", &receipt);
    ASSERT_TRUE(receipt.position.has_value());

    CensorshipEvidence ev;
    std::string message;
    auto kind = client_error(
        [&] { alice.await_response(id, std::chrono::milliseconds{150}, std::chrono::milliseconds{20}, &ev); },
        &message);
    EXPECT_EQ(kind, ClientError::Kind::censorship_timeout);
    EXPECT_EQ(static_cast<int>(kind), 4);
    EXPECT_EQ(ev.query_id, id);
    EXPECT_EQ(ev.position, *receipt.position);
    EXPECT_EQ(ev.timestamp, receipt.timestamp);
    EXPECT_EQ(ev.filter, R"({"id":"341576"})");
    EXPECT_GE(ev.waited.count(), 150);
    EXPECT_NE(message.find("position " + std::to_string(*receipt.position)), std::string::npos) << message;

    // The cited transaction is in the public history as described.
    auto rec = site.w.ledger.trace(*receipt.position).front();
    EXPECT_EQ(rec.tx.function, "query");
    EXPECT_EQ(rec.tx.id().hex(), ev.tx_id);
}

TEST(PartyClient, ResponsiveProviderAnswersAndCensorshipPathMatchesDirect) {
    // Same bet settled two ways on two identical worlds.
    Site direct_site{false};
    auto a1 = direct_site.party(direct_site.w.alice);
    auto bet1 = a1.deploy_relying("341576", direct_site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    direct_site.party(direct_site.w.bob).join(bet1, kDeposit);
    auto direct = a1.settle(bet1, EntrySelector::by_id("341576"));

    Site site{true};
    auto a2 = site.party(site.w.alice);
    auto bet2 = a2.deploy_relying("341576", site.w.bob.address(), kDeposit, Prediction::local, Prediction::visitor);
    site.party(site.w.bob).join(bet2, kDeposit);
    auto id = a2.censor_query(R"({"id":"341576"})");
    auto answer = a2.await_response(id, std::chrono::milliseconds{5000}, std::chrono::milliseconds{10});
    ASSERT_TRUE(answer.entry.has_value()) << answer.payload;
    EXPECT_EQ(answer.entry->content, fixtures::kFinal);
    auto via_query = a2.settle_from_query(bet2, id);

    EXPECT_EQ(via_query.result, direct.result);
    EXPECT_EQ(bet_state(site.w.ledger, bet2).outcome(), bet_state(direct_site.w.ledger, bet1).outcome());
    EXPECT_EQ(site.w.ledger.balance(site.w.bob.address()), direct_site.w.ledger.balance(direct_site.w.bob.address()));
    // Alice paid the query fee on top.
    EXPECT_EQ(site.w.ledger.balance(site.w.alice.address()) + 25,
              direct_site.w.ledger.balance(direct_site.w.alice.address()));
}

TEST(PartyClient, NoMatchAnswerCarriesNoEntry) {
    Site site{true};
    auto alice = site.party(site.w.alice);
    auto id = alice.censor_query(R"({"id":"999"})");
    auto answer = alice.await_response(id, std::chrono::milliseconds{5000}, std::chrono::milliseconds{10});
    EXPECT_FALSE(answer.entry.has_value());
    EXPECT_NE(answer.payload.find("no match"), std::string::npos);
}

TEST(PartyClient, DuplicateQueriesGetDistinctIds) {
    Site site;
    auto alice = site.party(site.w.alice);
    Receipt r1;
    Receipt r2;
    auto id1 = alice.censor_query(R"({"id":"341576"})", &r1);
    auto id2 = alice.censor_query(R"({"id":"341576"})", &r2);
    EXPECT_NE(id1, id2);
    EXPECT_EQ(id2, id1 + 1);
    EXPECT_LT(*r1.position, *r2.position);
    EXPECT_EQ(alice.evidence_for(id1).position, *r1.position);
    EXPECT_EQ(alice.evidence_for(id2).position, *r2.position);
}

TEST(TrustAnchor, LoadsCertificateOrBareKey) {
    TempDir dir;
    auto id = IdentityCredential::generate("feed.example.org");
    id.save(dir / "identity.key");
    auto cert = dir / "identity.key";
    cert += ".cert";
    auto a = TrustAnchor::load(cert);
    EXPECT_EQ(a.domain, "feed.example.org");
    EXPECT_EQ(a.public_key, id.key.public_key());

    std::ofstream{dir / "pinned.hex"} << to_hex(id.key.public_key()) << "\n";
    EXPECT_EQ(TrustAnchor::load(dir / "pinned.hex").public_key, id.key.public_key());
}
