#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "authfeed/bytes.hpp"
#include "authfeed/hash.hpp"

namespace authfeed {

/// Position of a proof element's digest relative to the running hash.
/// Serialized as 0 for LEFT and 1 for RIGHT.
enum class Side : std::uint8_t {
    left = 0,
    right = 1,
};

struct ProofElement {
    Side side = Side::left;
    Digest hash;

    bool operator==(const ProofElement &) const = default;
};

/// Ordered (side, digest) pairs, used for both membership and consistency
/// proofs. For a consistency proof the first element is the anchor; its side
/// is written as LEFT and ignored by verification.
using SidedProof = std::vector<ProofElement>;

struct DualRoot {
    Digest hash_x; ///< every element folded in: the (new) root
    Digest hash_y; ///< only LEFT elements folded in: the old root
};

/// The verifier's fold over a sided proof.
///
/// With a leaf, both accumulators start at the leaf and every element is
/// consumed. Without one, proof[0] seeds both accumulators and folding starts
/// at element 1. A RIGHT element extends hash_x only; a LEFT element extends
/// both. Throws std::invalid_argument when no leaf is given and the proof is
/// empty.
DualRoot mth_dual(const Hasher &hasher, std::span<const ProofElement> proof,
                  const std::optional<Digest> &leaf);

/// JSON array of {"side": 0|1, "hash": "<64 hex>"} in verification order.
std::string proof_to_json(std::span<const ProofElement> proof);
/// Strict inverse of proof_to_json; throws std::invalid_argument.
SidedProof proof_from_json(std::string_view text);

/// Fixed-width binary form (1 side byte + 32 digest bytes per element) used
/// for contract call arguments.
Bytes encode_proof(std::span<const ProofElement> proof);
SidedProof decode_proof(ByteView data);

/// Largest power of two strictly less than n (n >= 2).
std::size_t split_point(std::size_t n);

/// Append-only Merkle history tree over raw entries.
///
/// Leaves are HASH(entry) with no domain prefix. An interior node over leaf
/// range [lo, hi) hashes node(lo, lo+k) || node(lo+k, hi) where k is the
/// largest power of two strictly less than hi-lo. Digests of complete,
/// aligned subtrees are cached per level; the ragged right edge of any
/// snapshot is recomputed on demand in O(log n) hashes.
///
/// Const members never mutate, so a shared reference may be read from many
/// threads while no append is in progress.
class MerkleLog {
public:
    struct AppendResult {
        std::size_t size;
        Digest root;
    };

    explicit MerkleLog(Hasher hasher = Hasher{});

    /// Throws std::invalid_argument for empty data.
    AppendResult append(ByteView data);
    AppendResult append(std::string_view data) { return append(as_bytes(data)); }
    /// Appends in order and recomputes the root once. Validates every entry
    /// before touching the log.
    AppendResult append_batch(std::span<const Bytes> batch);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const Hasher &hasher() const { return hasher_; }

    const Bytes &entry(std::size_t index) const;
    /// Throws std::logic_error on an empty log.
    const Digest &root() const;
    /// Root of the snapshot holding the first `tree_size` entries.
    Digest root_at(std::size_t tree_size) const;
    /// Digest of leaf range [lo, hi), 0 <= lo < hi <= size().
    Digest node(std::size_t lo, std::size_t hi) const;

    SidedProof membership_proof(std::size_t index) const { return membership_proof(index, size()); }
    /// Proof for entry `index` against the snapshot of `tree_size` entries.
    /// Throws std::out_of_range unless index < tree_size <= size().
    SidedProof membership_proof(std::size_t index, std::size_t tree_size) const;

    SidedProof consistency_proof(std::size_t old_size) const { return consistency_proof(old_size, size()); }
    /// Proof that the `new_size` snapshot extends the `old_size` snapshot.
    /// Throws std::out_of_range unless 1 <= old_size < new_size <= size().
    SidedProof consistency_proof(std::size_t old_size, std::size_t new_size) const;

private:
    void add_leaf(ByteView data);
    void path(std::size_t index, std::size_t lo, std::size_t hi, SidedProof &out) const;
    void subproof(std::size_t m, std::size_t lo, std::size_t hi, SidedProof &out) const;

    Hasher hasher_;
    std::vector<Bytes> entries_;
    // levels_[h][j] covers leaves [j * 2^h, (j + 1) * 2^h)
    std::vector<std::vector<Digest>> levels_;
    Digest root_;
};

} // namespace authfeed
