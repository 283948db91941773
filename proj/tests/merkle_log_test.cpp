#include <gtest/gtest.h>

#include <atomic>
#include <bit>
#include <map>
#include <thread>

#include "authfeed/merkle_log.hpp"
#include "tree_oracle.hpp"

namespace authfeed {
namespace {

std::vector<std::string> fig3_entries() {
    std::vector<std::string> d;
    for (int i = 0; i < 8; ++i) {
        d.push_back("d" + std::to_string(i));
    }
    return d;
}

std::size_t ceil_log2(std::size_t n) {
    return n <= 1 ? 0 : std::bit_width(n - 1);
}

// Frozen with an independent Python rebuild over pycryptodome Keccak-256.
constexpr const char *kRoot1 = "4f7f3a5778ef6979d7212644f3672987b1278f02372998115b91952c4fdf00b3";
constexpr const char *kRoot2 = "c7d09b46ca0b10648f01f6a2b0867c524378fe9eae8bf7c39cb6fe1b9ff9f589";
constexpr const char *kRoot4 = "aaaeba02fef19f5d4253cf72e3445ee578d5852eb84c5ba4bba9b55293efc136";
constexpr const char *kRoot5 = "6073763eae528215fe5eb31e72320a5f929ef7d2f79d2fd157f66e548514caad";
constexpr const char *kRoot8 = "51b5703e935d49863b6fc5bc64950fd71366df3a2b8d14768bc995c093d28c8e";
constexpr const char *kH3 = "299372c9e088d4af1a8540af2e105bc6069e13e29c8bc4553a52507ab6bcccbe";
constexpr const char *kH4 = "31ae09517636b59ab7619aed240ae4d402041de9761940991d90e83ee6a9a754";
constexpr const char *kH5 = "a2d2db59998016f273c4e30483743508f5b43effffd42c6ea0d4c4f269b8f5f9";
constexpr const char *kH67 = "7d04e05082e6e396540a4fe28a72376d71c160fcf8802d023b082a6963b99733";

TEST(MerkleLog, SingleLeafRootIsLeafHash) {
    MerkleLog log;
    auto r = log.append("payload");
    EXPECT_EQ(r.size, 1u);
    EXPECT_EQ(r.root, keccak256(as_bytes("payload")));
    EXPECT_TRUE(log.membership_proof(0).empty());
}

TEST(MerkleLog, RejectsEmptyEntry) {
    MerkleLog log;
    EXPECT_THROW(log.append(""), std::invalid_argument);
    EXPECT_TRUE(log.empty());
    EXPECT_THROW(log.root(), std::logic_error);
}

TEST(MerkleLog, GrowthRootsMatchFrozenValues) {
    auto d = fig3_entries();
    MerkleLog log;
    std::map<std::size_t, std::string> expected{{1, kRoot1}, {2, kRoot2}, {4, kRoot4}, {5, kRoot5}, {8, kRoot8}};
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto r = log.append(d[i]);
        if (expected.contains(r.size)) {
            EXPECT_EQ(r.root.hex(), expected[r.size]) << "size " << r.size;
        }
    }
    // 8 leaves: H(h0123 || h4567)
    auto h0123 = log.node(0, 4);
    auto h4567 = log.node(4, 8);
    EXPECT_EQ(log.root(), oracle::concat_hash(h0123, h4567));
}

TEST(MerkleLog, ConsistencyOneToTwoCarriesOldRoot) {
    auto d = fig3_entries();
    auto log = oracle::build_log(d, 2);
    auto proof = log.consistency_proof(1);
    ASSERT_EQ(proof.size(), 2u);
    EXPECT_EQ(proof[0].hash.hex(), kRoot1); // the previous root h0
    EXPECT_EQ(proof[1].side, Side::right);
    EXPECT_EQ(proof[1].hash, keccak256(as_bytes("d1")));
}

TEST(MerkleLog, ConsistencyFiveToEightMatchesWorkedExample) {
    auto d = fig3_entries();
    auto log = oracle::build_log(d, 8);
    auto proof = log.consistency_proof(5);
    ASSERT_EQ(proof.size(), 4u);
    EXPECT_EQ(proof[0].side, Side::left);
    EXPECT_EQ(proof[0].hash.hex(), kH4);
    EXPECT_EQ(proof[1], (ProofElement{Side::right, Digest::from_hex(kH5)}));
    EXPECT_EQ(proof[2], (ProofElement{Side::right, Digest::from_hex(kH67)}));
    EXPECT_EQ(proof[3], (ProofElement{Side::left, Digest::from_hex(kRoot4)}));

    auto [hash_x, hash_y] = mth_dual(Hasher{}, proof, std::nullopt);
    EXPECT_EQ(hash_x.hex(), kRoot8);
    EXPECT_EQ(hash_y.hex(), kRoot5);
    // old root only needs the LEFT elements: H(h0123 || h4)
    EXPECT_EQ(hash_y, oracle::concat_hash(Digest::from_hex(kRoot4), Digest::from_hex(kH4)));
}

TEST(MerkleLog, MembershipOfThirdLeafInFiveLeafLog) {
    auto d = fig3_entries();
    auto log = oracle::build_log(d, 5);
    auto proof = log.membership_proof(2);
    ASSERT_EQ(proof.size(), 3u);
    EXPECT_EQ(proof[0], (ProofElement{Side::right, Digest::from_hex(kH3)}));
    EXPECT_EQ(proof[1], (ProofElement{Side::left, Digest::from_hex(kRoot2)}));
    EXPECT_EQ(proof[2], (ProofElement{Side::right, Digest::from_hex(kH4)}));
    EXPECT_EQ(mth_dual(Hasher{}, proof, keccak256(as_bytes("d2"))).hash_x.hex(), kRoot5);
}

TEST(MerkleLog, SixtyFourFixedVectorsMatchRebuildOracle) {
    std::vector<std::string> e;
    for (int i = 0; i < 64; ++i) {
        e.push_back("entry-" + std::to_string(i));
    }
    std::map<std::size_t, std::string> frozen{
        {1, "7582422744aa6ba40f205cd461fdf34956e30d367e77750bf095f7676cb0e24a"},
        {3, "7148024953f495248f7d0960156d91b4c965aeb9143611cf4f2db10d6be1b8eb"},
        {17, "005788755a0534fd6a399dde4317b3d88d9c655b24947d4b12ae33100667d172"},
        {33, "faa25dff0e383b9f43e4b3cdff50e3079033ad1e07d51da4a12ab792c25b3ce6"},
        {64, "9aa3ac94c2a2925a7290b4c995e4af186b9019de6039f0cad5a497a501a84910"},
    };
    MerkleLog log;
    for (std::size_t n = 1; n <= e.size(); ++n) {
        auto r = log.append(e[n - 1]);
        ASSERT_EQ(r.root, oracle::rebuild_root(e, n)) << "size " << n;
        if (frozen.contains(n)) {
            EXPECT_EQ(r.root.hex(), frozen[n]);
        }
    }
}

TEST(MerkleLog, ExhaustiveMembershipUpTo64) {
    auto e = oracle::random_entries(64, 11);
    MerkleLog log;
    for (std::size_t n = 1; n <= 64; ++n) {
        log.append(e[n - 1]);
        auto root = oracle::rebuild_root(e, n);
        for (std::size_t i = 0; i < n; ++i) {
            auto proof = log.membership_proof(i);
            ASSERT_LE(proof.size(), ceil_log2(n));
            if (std::has_single_bit(n)) {
                ASSERT_EQ(proof.size(), ceil_log2(n));
            }
            auto leaf = keccak256(as_bytes(e[i]));
            ASSERT_EQ(mth_dual(Hasher{}, proof, leaf).hash_x, root) << n << "/" << i;
            ASSERT_EQ(oracle::fold_membership(leaf, proof), root);
        }
    }
}

TEST(MerkleLog, ExhaustiveConsistencyUpTo64) {
    auto e = oracle::random_entries(64, 12);
    auto log = oracle::build_log(e, 64);
    std::vector<Digest> roots{Digest{}};
    for (std::size_t n = 1; n <= 64; ++n) {
        roots.push_back(oracle::rebuild_root(e, n));
    }
    for (std::size_t n = 2; n <= 64; ++n) {
        for (std::size_t m = 1; m < n; ++m) {
            auto proof = log.consistency_proof(m, n);
            ASSERT_LE(proof.size(), ceil_log2(n) + 1);
            auto [x, y] = mth_dual(Hasher{}, proof, std::nullopt);
            ASSERT_EQ(x, roots[n]) << m << "->" << n;
            ASSERT_EQ(y, roots[m]) << m << "->" << n;
            if (std::has_single_bit(m)) {
                EXPECT_EQ(proof[0].hash, roots[m]);
            }
        }
    }
}

TEST(MerkleLog, HistoricalSnapshotsStayProvable) {
    auto e = oracle::random_entries(40, 13);
    auto log = oracle::build_log(e, 40);
    for (std::size_t m = 1; m <= 40; m += 3) {
        EXPECT_EQ(log.root_at(m), oracle::rebuild_root(e, m));
        for (std::size_t i = 0; i < m; ++i) {
            auto proof = log.membership_proof(i, m);
            EXPECT_EQ(oracle::fold_membership(keccak256(as_bytes(e[i])), proof), log.root_at(m));
        }
    }
}

TEST(MerkleLog, SingleBitMutationsBreakVerification) {
    auto e = oracle::random_entries(21, 14);
    auto log = oracle::build_log(e, 21);
    Hasher h;
    std::mt19937_64 rng{99};
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t i = rng() % 21;
        auto proof = log.membership_proof(i);
        auto leaf = keccak256(as_bytes(e[i]));
        std::size_t k = rng() % proof.size();
        auto bad = proof;
        if (rng() % 4 == 0) {
            bad[k].side = bad[k].side == Side::left ? Side::right : Side::left;
        } else {
            auto bytes = bad[k].hash.bytes();
            bytes[rng() % 32] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
            bad[k].hash = Digest{bytes};
        }
        EXPECT_NE(mth_dual(h, bad, leaf).hash_x, log.root());

        std::size_t m = 1 + rng() % 20;
        auto cproof = log.consistency_proof(m);
        std::size_t c = rng() % cproof.size();
        auto cbytes = cproof[c].hash.bytes();
        cbytes[rng() % 32] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        cproof[c].hash = Digest{cbytes};
        auto [x, y] = mth_dual(h, cproof, std::nullopt);
        EXPECT_FALSE(x == log.root() && y == log.root_at(m));
    }
}

TEST(MerkleLog, ErrorsOnOutOfRange) {
    auto log = oracle::build_log(fig3_entries(), 5);
    EXPECT_THROW(log.membership_proof(5), std::out_of_range);
    EXPECT_THROW(log.membership_proof(0, 6), std::out_of_range);
    EXPECT_THROW(log.consistency_proof(0), std::out_of_range);
    EXPECT_THROW(log.consistency_proof(5), std::out_of_range);
    EXPECT_THROW(log.consistency_proof(2, 6), std::out_of_range);
    EXPECT_THROW(log.entry(5), std::out_of_range);
    EXPECT_THROW(log.root_at(0), std::out_of_range);
}

TEST(MerkleLog, BatchAppendMatchesSequential) {
    auto e = oracle::random_entries(30, 15);
    MerkleLog seq = oracle::build_log(e, 30);
    MerkleLog batched;
    batched.append(e[0]);
    std::vector<Bytes> batch;
    for (std::size_t i = 1; i < 30; ++i) {
        batch.push_back(to_bytes(e[i]));
    }
    auto r = batched.append_batch(batch);
    EXPECT_EQ(r.size, 30u);
    EXPECT_EQ(r.root, seq.root());

    std::vector<Bytes> with_empty{to_bytes("x"), Bytes{}};
    EXPECT_THROW(batched.append_batch(with_empty), std::invalid_argument);
    EXPECT_EQ(batched.size(), 30u);
}

TEST(MerkleLog, EntriesAreStoredVerbatim) {
    auto e = oracle::random_entries(10, 16);
    auto log = oracle::build_log(e, 10);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(to_string(log.entry(i)), e[i]);
    }
}

TEST(MerkleLog, ConcurrentReadersAgree) {
    auto e = oracle::random_entries(200, 17);
    const auto log = oracle::build_log(e, 200);
    std::vector<std::thread> readers;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&, t] {
            for (std::size_t i = static_cast<std::size_t>(t); i < 200; i += 4) {
                auto p = log.membership_proof(i);
                if (oracle::fold_membership(keccak256(as_bytes(e[i])), p) != log.root()) {
                    ++mismatches;
                }
            }
        });
    }
    for (auto &r : readers) {
        r.join();
    }
    EXPECT_EQ(mismatches.load(), 0);
}

TEST(MthDual, LeafWithEmptyProof) {
    auto leaf = keccak256(as_bytes("L"));
    auto [x, y] = mth_dual(Hasher{}, {}, leaf);
    EXPECT_EQ(x, leaf);
    EXPECT_EQ(y, leaf);
    EXPECT_THROW(mth_dual(Hasher{}, {}, std::nullopt), std::invalid_argument);
}

TEST(MthDual, RandomSixteenLeafTree) {
    auto e = oracle::random_entries(16, 18);
    auto log = oracle::build_log(e, 16);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_EQ(mth_dual(Hasher{}, log.membership_proof(i), keccak256(as_bytes(e[i]))).hash_x, log.root());
    }
}

TEST(ProofJson, ExactWireFormat) {
    auto d = keccak256(as_bytes("a"));
    SidedProof p{{Side::left, d}, {Side::right, d}};
    EXPECT_EQ(proof_to_json(p), R"([{"side":0,"hash":")" + d.hex() + R"("},{"side":1,"hash":")" + d.hex() + R"("}])");
    EXPECT_EQ(proof_to_json(SidedProof{}), "[]");
}

TEST(ProofJson, RoundTripAndStrictness) {
    auto e = oracle::random_entries(33, 19);
    auto log = oracle::build_log(e, 33);
    for (std::size_t m = 1; m < 33; ++m) {
        auto p = log.consistency_proof(m);
        EXPECT_EQ(proof_from_json(proof_to_json(p)), p);
        EXPECT_EQ(decode_proof(encode_proof(p)), p);
    }
    auto h = keccak256(as_bytes("a")).hex();
    EXPECT_THROW(proof_from_json(R"([{"side":2,"hash":")" + h + "\"}]"), std::invalid_argument);
    EXPECT_THROW(proof_from_json(R"([{"side":0}])"), std::invalid_argument);
    EXPECT_THROW(proof_from_json(R"([{"side":0,"hash":"abc"}])"), std::invalid_argument);
    EXPECT_THROW(proof_from_json(R"({"side":0})"), std::invalid_argument);
    EXPECT_THROW(proof_from_json("not json"), std::invalid_argument);
    Bytes partial(10, 0);
    EXPECT_THROW(decode_proof(partial), std::invalid_argument);
}

TEST(MerkleLog, SelectableHashFunction) {
    MerkleLog log{Hasher{HashAlgorithm::sha256}};
    log.append("a");
    log.append("b");
    Bytes concat;
    for (const auto &d : {sha256(as_bytes("a")), sha256(as_bytes("b"))}) {
        concat.insert(concat.end(), d.bytes().begin(), d.bytes().end());
    }
    EXPECT_EQ(log.root(), sha256(concat));
}

} // namespace
} // namespace authfeed
