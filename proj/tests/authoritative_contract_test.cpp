#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "authfeed/authoritative_contract.hpp"
#include "authfeed/ledger_client.hpp"
#include "authfeed/relying_contract.hpp"
#include "tree_oracle.hpp"

using namespace authfeed;

namespace {

std::vector<std::string> fig3_entries() {
    std::vector<std::string> d;
    for (int i = 0; i < 8; ++i) {
        d.push_back("d" + std::to_string(i));
    }
    return d;
}

struct Fixture {
    KeyPair owner_key = KeyPair::from_seed_text("provider");
    KeyPair user_key = KeyPair::from_seed_text("user");
    KeyPair intruder_key = KeyPair::from_seed_text("intruder");
    Ledger ledger;
    LocalLedgerClient client{ledger};
    Wallet owner{owner_key, client};
    Wallet user{user_key, client};
    Wallet intruder{intruder_key, client};
    AuthoritativeConfig config;
    Address cc;

    explicit Fixture(AuthoritativeConfig cfg = {})
        : ledger{{{owner_key.address(), 1'000'000}, {user_key.address(), 1'000'000},
                  {intruder_key.address(), 1'000'000}},
                 standard_registry()},
          config{cfg} {
        cc = owner.deploy(AuthoritativeContract::kCodeId, AuthoritativeContract::encode_init(config));
    }

    const AuthoritativeContract &state() const {
        return dynamic_cast<const AuthoritativeContract &>(*ledger.contract(cc));
    }

    Receipt update(Wallet &w, const Digest &root, const SidedProof &proof) {
        return w.send(cc, "update", authoritative_args::update(root, proof));
    }

    Receipt membership(Wallet &w, std::string_view data, const SidedProof &proof, std::optional<std::uint64_t> fee = {}) {
        return w.send(cc, "membership", authoritative_args::membership(as_bytes(data), proof),
                      fee.value_or(config.fee_membership));
    }

    bool member(std::string_view data, const SidedProof &proof) {
        auto r = membership(user, data, proof);
        EXPECT_TRUE(r.ok()) << r.error;
        return r.ok() && decode_bool(r.return_value);
    }

    // Commits log sizes in order: the first with an empty proof, the rest
    // with consistency proofs from the previous size.
    void grow(const MerkleLog &log, std::initializer_list<std::size_t> sizes) {
        std::size_t prev = 0;
        for (auto n : sizes) {
            auto proof = prev == 0 ? SidedProof{} : log.consistency_proof(prev, n);
            auto r = update(owner, log.root_at(n), proof);
            ASSERT_TRUE(r.ok()) << "size " << n << ": " << r.error;
            prev = n;
        }
    }
};

MerkleLog log_of(const std::vector<std::string> &entries) {
    MerkleLog log;
    for (const auto &e : entries) {
        log.append(e);
    }
    return log;
}

} // namespace

TEST(Authoritative, FirstUpdateAcceptsAnyRootWithEmptyProof) {
    Fixture f;
    auto arbitrary = keccak256(as_bytes("anything"));
    auto r = f.update(f.owner, arbitrary, {});
    ASSERT_TRUE(r.ok()) << r.error;
    EXPECT_EQ(f.state().time(), r.timestamp);
    ASSERT_EQ(f.state().roots().size(), 1u);
    EXPECT_EQ(f.state().roots().begin()->second, arbitrary);
}

TEST(Authoritative, SecondUpdateNeedsAProof) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {5});
    auto r = f.update(f.owner, log.root_at(8), {});
    EXPECT_EQ(r.status, TxStatus::failed);
    EXPECT_EQ(f.state().roots().size(), 1u);
}

TEST(Authoritative, FiveToEightWorkedExampleAccepted) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {1, 2, 4, 5});
    auto proof = log.consistency_proof(5, 8);
    ASSERT_EQ(proof.size(), 4u);
    auto r = f.update(f.owner, log.root_at(8), proof);
    ASSERT_TRUE(r.ok()) << r.error;
    EXPECT_EQ(f.state().roots().rbegin()->second, log.root_at(8));
    EXPECT_EQ(f.state().roots().size(), 5u);
}

TEST(Authoritative, ProofMissingLeftSubtreeRejected) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {5});
    auto proof = log.consistency_proof(5, 8);
    auto h0123 = log.node(0, 4);
    std::erase_if(proof, [&](const ProofElement &e) { return e.side == Side::left && e.hash == h0123; });
    ASSERT_EQ(proof.size(), 3u);
    auto nonce_before = f.ledger.nonce(f.owner.address());
    auto r = f.update(f.owner, log.root_at(8), proof);
    EXPECT_EQ(r.status, TxStatus::failed);
    EXPECT_EQ(f.state().roots().size(), 1u);
    EXPECT_EQ(f.state().roots().begin()->second, log.root_at(5));
    EXPECT_EQ(f.ledger.nonce(f.owner.address()), nonce_before + 1);
}

TEST(Authoritative, ConsistencyViewMatchesDefinition) {
    Fixture f;
    auto log = log_of(fig3_entries());
    auto arbitrary = keccak256(as_bytes("x"));
    auto view = [&](const Digest &root, const SidedProof &proof) {
        auto v = f.user.view(f.cc, "consistency", authoritative_args::update(root, proof));
        EXPECT_TRUE(v.ok) << v.error;
        return decode_bool(v.ret);
    };
    EXPECT_TRUE(view(arbitrary, {}));
    f.grow(log, {5});
    EXPECT_FALSE(view(log.root_at(8), {}));
    auto proof = log.consistency_proof(5, 8);
    EXPECT_TRUE(view(log.root_at(8), proof));
    auto bytes = log.root_at(8).bytes();
    bytes[31] ^= 1;
    EXPECT_FALSE(view(Digest::from_bytes(ByteView{bytes}), proof));
}

TEST(Authoritative, NonOwnerCannotUpdateOrLockOrRespond) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {4});
    auto before = f.ledger.contract(f.cc)->encode_state();

    EXPECT_EQ(f.update(f.intruder, log.root_at(8), log.consistency_proof(4, 8)).status, TxStatus::failed);
    EXPECT_EQ(f.intruder.send(f.cc, "lock", {}).status, TxStatus::failed);
    ASSERT_TRUE(f.user.send(f.cc, "query", authoritative_args::query(as_bytes("q")), f.config.fee_query).ok());
    auto after_query = f.ledger.contract(f.cc)->encode_state();
    auto r = f.intruder.send(f.cc, "store_response", authoritative_args::store_response(1, as_bytes("fake")));
    EXPECT_EQ(r.status, TxStatus::failed);
    EXPECT_EQ(r.error, "sender is not the owner");
    EXPECT_EQ(f.ledger.contract(f.cc)->encode_state(), after_query);
    EXPECT_NE(before, after_query);
    EXPECT_NE(f.ledger.dump_text().find("store_response(1, \"fake\") fee=0 status=failed"), std::string::npos);
}

TEST(Authoritative, MembershipOfThirdLeafInFiveLeafLog) {
    Fixture f;
    auto d = fig3_entries();
    auto log = log_of(d);
    f.grow(log, {5});
    auto proof = log.membership_proof(2, 5);
    ASSERT_EQ(proof.size(), 3u);
    EXPECT_EQ(proof[0].side, Side::right);
    EXPECT_EQ(proof[1].side, Side::left);
    EXPECT_EQ(proof[2].side, Side::right);
    EXPECT_TRUE(f.member("d2", proof));
    EXPECT_FALSE(f.member("d3", proof));
    EXPECT_FALSE(f.member("D2", proof));
}

TEST(Authoritative, MembershipFeeIsExactAndPaidToOwner) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {5});
    auto proof = log.membership_proof(2, 5);
    auto owner_before = f.ledger.balance(f.owner.address());
    EXPECT_EQ(f.membership(f.user, "d2", proof, f.config.fee_membership - 1).status, TxStatus::failed);
    EXPECT_EQ(f.membership(f.user, "d2", proof, f.config.fee_membership + 1).status, TxStatus::failed);
    EXPECT_EQ(f.membership(f.user, "d2", proof, 0).status, TxStatus::failed);
    EXPECT_EQ(f.ledger.balance(f.owner.address()), owner_before);
    EXPECT_EQ(f.ledger.balance(f.user.address()), 1'000'000u);
    EXPECT_TRUE(f.member("d2", proof));
    EXPECT_EQ(f.ledger.balance(f.owner.address()), owner_before + f.config.fee_membership);
    EXPECT_EQ(f.ledger.balance(f.cc), 0u);
}

TEST(Authoritative, QueryFeeIsExactAndIdsMonotone) {
    Fixture f;
    auto q = [&](std::uint64_t fee) {
        return f.user.send(f.cc, "query", authoritative_args::query(as_bytes(R"({"id":"341576"})")), fee);
    };
    EXPECT_EQ(q(f.config.fee_query - 1).status, TxStatus::failed);
    EXPECT_EQ(q(f.config.fee_query + 1).status, TxStatus::failed);
    auto a = q(f.config.fee_query);
    auto b = q(f.config.fee_query);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_EQ(decode_u64(a.return_value), 1u);
    EXPECT_EQ(decode_u64(b.return_value), 2u);
    EXPECT_EQ(f.state().counter(), 2u);
    EXPECT_EQ(f.state().queries().size(), 2u);
}

TEST(Authoritative, LargeFilterIsByteIdenticalInTrace) {
    Fixture f;
    std::string filter(5 * 1024, 'z');
    for (std::size_t i = 0; i < filter.size(); i += 7) {
        filter[i] = static_cast<char>(i % 251);
    }
    ASSERT_TRUE(f.user.send(f.cc, "query", authoritative_args::query(as_bytes(filter)), f.config.fee_query).ok());
    std::istringstream lines{f.ledger.dump_jsonl()};
    std::string line, last;
    while (std::getline(lines, line)) {
        last = line;
    }
    auto rec = TraceRecord::from_json(nlohmann::json::parse(last));
    ArgReader r{rec.tx.args};
    EXPECT_EQ(to_string(r.bytes()), filter);
    auto v = f.user.view(f.cc, "get_query", authoritative_args::id(1));
    ArgReader g{v.ret};
    EXPECT_EQ(to_string(g.bytes()), filter);
}

TEST(Authoritative, ResponsesFollowBoundsAndReturnExactBytes) {
    Fixture f;
    ASSERT_TRUE(f.user.send(f.cc, "query", authoritative_args::query(as_bytes("f")), f.config.fee_query).ok());
    auto get = [&](std::uint64_t id) { return f.user.view(f.cc, "get_response", authoritative_args::id(id)); };

    auto empty = get(1);
    ASSERT_TRUE(empty.ok);
    EXPECT_EQ(empty.ret, ArgWriter{}.bytes({}).data());
    EXPECT_FALSE(get(2).ok);

    EXPECT_EQ(f.owner.send(f.cc, "store_response", authoritative_args::store_response(0, as_bytes("x"))).status,
              TxStatus::failed);
    EXPECT_EQ(f.owner.send(f.cc, "store_response", authoritative_args::store_response(2, as_bytes("x"))).status,
              TxStatus::failed);
    Bytes payload{0x00, 0xff, 0x10, '{'};
    ASSERT_TRUE(f.owner.send(f.cc, "store_response", authoritative_args::store_response(1, payload)).ok());
    auto got = get(1);
    ArgReader r{got.ret};
    EXPECT_EQ(r.bytes(), payload);

    auto replayed = Ledger::replay(f.ledger.genesis(), standard_registry(), f.ledger.trace());
    auto replayed_view = replayed->view(f.user.address(), f.cc, "get_response", authoritative_args::id(1));
    EXPECT_EQ(replayed_view.ret, got.ret);
    EXPECT_EQ(replayed->state_digest(), f.ledger.state_digest());
}

TEST(Authoritative, LockStopsUpdatesButNotReads) {
    Fixture f;
    auto log = log_of(fig3_entries());
    f.grow(log, {5});
    ASSERT_TRUE(f.owner.send(f.cc, "lock", {}).ok());
    ASSERT_TRUE(f.owner.send(f.cc, "lock", {}).ok());
    EXPECT_TRUE(f.state().locked());

    auto r = f.update(f.owner, log.root_at(8), log.consistency_proof(5, 8));
    EXPECT_EQ(r.status, TxStatus::failed);
    EXPECT_EQ(r.error, "contract is locked");
    EXPECT_TRUE(f.member("d2", log.membership_proof(2, 5)));
    EXPECT_TRUE(f.user.send(f.cc, "query", authoritative_args::query(as_bytes("f")), f.config.fee_query).ok());
    EXPECT_TRUE(f.owner.send(f.cc, "store_response", authoritative_args::store_response(1, as_bytes("r"))).ok());
}

TEST(Authoritative, RetentionEvictsOldestRoots) {
    AuthoritativeConfig cfg;
    cfg.retention = 4;
    Fixture f{cfg};
    auto entries = oracle::random_entries(8, 4);
    auto log = log_of(entries);
    f.grow(log, {1, 2, 3, 4, 5});
    EXPECT_EQ(f.state().roots().size(), 4u);
    EXPECT_EQ(f.state().roots().begin()->second, log.root_at(2));

    // Entry 0 proven against the evicted 1-leaf root (empty proof) fails;
    // the same entry against a retained root succeeds.
    EXPECT_FALSE(f.member(entries[0], log.membership_proof(0, 1)));
    EXPECT_TRUE(f.member(entries[0], log.membership_proof(0, 2)));
    EXPECT_TRUE(f.member(entries[4], log.membership_proof(4, 5)));

    // Retention equals min(updates, K) throughout.
    Fixture g{cfg};
    std::size_t updates = 0;
    std::size_t prev = 0;
    for (std::size_t n = 1; n <= 8; ++n) {
        auto proof = prev == 0 ? SidedProof{} : log.consistency_proof(prev, n);
        ASSERT_TRUE(g.update(g.owner, log.root_at(n), proof).ok());
        ++updates;
        prev = n;
        EXPECT_EQ(g.state().roots().size(), std::min<std::size_t>(updates, 4));
        EXPECT_EQ(g.state().time(), g.state().roots().rbegin()->first);
    }
}

TEST(Authoritative, EquivocationRejectedAtEveryForkPoint) {
    auto entries = oracle::random_entries(64, 11);
    auto honest = log_of(entries);
    std::mt19937_64 rng{5};
    for (int trial = 0; trial < 40; ++trial) {
        Fixture f;
        std::size_t m = 1 + rng() % 63;
        f.grow(honest, {m});
        auto before = f.ledger.contract(f.cc)->encode_state();

        auto forked_entries = entries;
        auto i = rng() % m;
        forked_entries[i] += "!";
        auto forked = log_of(forked_entries);
        std::size_t n = m + 1 + rng() % (64 - m);
        auto r = f.update(f.owner, forked.root_at(n), forked.consistency_proof(m, n));
        EXPECT_EQ(r.status, TxStatus::failed) << "m=" << m << " n=" << n << " i=" << i;
        EXPECT_EQ(f.ledger.contract(f.cc)->encode_state(), before);

        // Mixing the forked root with the honest proof fails too.
        auto r2 = f.update(f.owner, forked.root_at(n), honest.consistency_proof(m, n));
        EXPECT_EQ(r2.status, TxStatus::failed);
        EXPECT_TRUE(f.update(f.owner, honest.root_at(n), honest.consistency_proof(m, n)).ok());
    }
}

TEST(Authoritative, WallClockDuplicateTimestampDeclined) {
    AuthoritativeContract c{KeyPair::from_seed_text("o").address(), {}};
    auto owner = c.owner();
    auto log = log_of(fig3_entries());
    EXPECT_TRUE(c.update(owner, 100, log.root_at(4), {}));
    EXPECT_FALSE(c.update(owner, 100, log.root_at(5), log.consistency_proof(4, 5)));
    EXPECT_FALSE(c.update(owner, 99, log.root_at(5), log.consistency_proof(4, 5)));
    EXPECT_TRUE(c.update(owner, 101, log.root_at(5), log.consistency_proof(4, 5)));
    EXPECT_EQ(c.roots().size(), 2u);
}

TEST(Authoritative, Sha256VariantVerifies) {
    AuthoritativeConfig cfg;
    cfg.hash = HashAlgorithm::sha256;
    Fixture f{cfg};
    MerkleLog log{Hasher{HashAlgorithm::sha256}};
    for (const auto &e : fig3_entries()) {
        log.append(e);
    }
    f.grow(log, {3, 8});
    EXPECT_TRUE(f.member("d6", log.membership_proof(6)));
    auto keccak_log = log_of(fig3_entries());
    EXPECT_FALSE(f.member("d6", keccak_log.membership_proof(6)));
}

// Random transactions from accounts other than the owner never change the
// owner-controlled parts of the state.
TEST(Authoritative, PropertyNonOwnerCannotTouchRootsLockOrResponses) {
    Fixture f;
    auto entries = oracle::random_entries(32, 8);
    auto log = log_of(entries);
    f.grow(log, {4});
    std::mt19937_64 rng{77};
    for (int i = 0; i < 200; ++i) {
        auto &w = rng() % 2 ? f.user : f.intruder;
        auto roots = f.state().roots();
        auto responses = f.state().responses();
        auto locked = f.state().locked();
        switch (rng() % 5) {
        case 0: {
            auto n = 5 + rng() % 28;
            w.send(f.cc, "update", authoritative_args::update(log.root_at(n), log.consistency_proof(4, n)));
            break;
        }
        case 1:
            w.send(f.cc, "lock", {});
            break;
        case 2:
            w.send(f.cc, "store_response",
                   authoritative_args::store_response(1 + rng() % 3, as_bytes("r" + std::to_string(i))));
            break;
        case 3:
            w.send(f.cc, "query", authoritative_args::query(as_bytes("q")), f.config.fee_query);
            break;
        default: {
            auto idx = rng() % 4;
            w.send(f.cc, "membership", authoritative_args::membership(as_bytes(entries[idx]), log.membership_proof(idx, 4)),
                   f.config.fee_membership);
        }
        }
        EXPECT_EQ(f.state().roots(), roots);
        EXPECT_EQ(f.state().responses(), responses);
        EXPECT_EQ(f.state().locked(), locked);
        for (const auto &[id, _] : f.state().responses()) {
            EXPECT_TRUE(f.state().queries().contains(id));
        }
    }
}

TEST(Authoritative, InterfaceDescriptorListsFees) {
    AuthoritativeConfig cfg;
    cfg.fee_membership = 7;
    auto j = AuthoritativeContract::interface_descriptor(cfg);
    bool found = false;
    for (const auto &fn : j.at("functions")) {
        if (fn.at("name") == "membership") {
            EXPECT_EQ(fn.at("fee"), 7);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}
