#include "authfeed/merkle_log.hpp"

#include <bit>
#include <stdexcept>

#include <json.hpp>

namespace authfeed {

std::size_t split_point(std::size_t n) {
    return std::bit_floor(n - 1);
}

DualRoot mth_dual(const Hasher &hasher, std::span<const ProofElement> proof,
                  const std::optional<Digest> &leaf) {
    std::size_t i = 0;
    Digest hash_x;
    if (leaf) {
        hash_x = *leaf;
    } else {
        if (proof.empty()) {
            throw std::invalid_argument{"consistency proof is empty"};
        }
        hash_x = proof[0].hash;
        i = 1;
    }
    Digest hash_y = hash_x;
    for (; i < proof.size(); ++i) {
        const auto &e = proof[i];
        if (e.side == Side::right) {
            hash_x = hasher.combine(hash_x, e.hash);
        } else {
            hash_x = hasher.combine(e.hash, hash_x);
            hash_y = hasher.combine(e.hash, hash_y);
        }
    }
    return {hash_x, hash_y};
}

std::string proof_to_json(std::span<const ProofElement> proof) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto &e : proof) {
        arr.push_back({{"side", static_cast<int>(e.side)}, {"hash", e.hash.hex()}});
    }
    return arr.dump();
}

SidedProof proof_from_json(std::string_view text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument{std::string{"proof is not JSON: "} + e.what()};
    }
    if (!arr.is_array()) {
        throw std::invalid_argument{"proof must be a JSON array"};
    }
    SidedProof out;
    out.reserve(arr.size());
    for (const auto &item : arr) {
        if (!item.is_object() || item.size() != 2 || !item.contains("side") || !item.contains("hash")) {
            throw std::invalid_argument{"proof element must be {side, hash}"};
        }
        const auto &side = item["side"];
        if (!side.is_number_unsigned() || side.get<unsigned>() > 1) {
            throw std::invalid_argument{"proof side must be 0 or 1"};
        }
        if (!item["hash"].is_string()) {
            throw std::invalid_argument{"proof hash must be a string"};
        }
        out.push_back({static_cast<Side>(side.get<unsigned>()),
                       Digest::from_hex(item["hash"].get<std::string>())});
    }
    return out;
}

Bytes encode_proof(std::span<const ProofElement> proof) {
    Bytes out;
    out.reserve(proof.size() * (1 + Digest::kSize));
    for (const auto &e : proof) {
        out.push_back(static_cast<std::uint8_t>(e.side));
        out.insert(out.end(), e.hash.bytes().begin(), e.hash.bytes().end());
    }
    return out;
}

SidedProof decode_proof(ByteView data) {
    constexpr std::size_t kStride = 1 + Digest::kSize;
    if (data.size() % kStride != 0) {
        throw std::invalid_argument{"proof encoding has a partial element"};
    }
    SidedProof out;
    out.reserve(data.size() / kStride);
    for (std::size_t off = 0; off < data.size(); off += kStride) {
        if (data[off] > 1) {
            throw std::invalid_argument{"proof side byte must be 0 or 1"};
        }
        out.push_back({static_cast<Side>(data[off]), Digest::from_bytes(data.subspan(off + 1, Digest::kSize))});
    }
    return out;
}

MerkleLog::MerkleLog(Hasher hasher) : hasher_{hasher} {}

void MerkleLog::add_leaf(ByteView data) {
    entries_.emplace_back(data.begin(), data.end());
    if (levels_.empty()) {
        levels_.emplace_back();
    }
    levels_[0].push_back(hasher_(data));
    // complete every parent whose right child was just filled
    for (std::size_t h = 0; levels_[h].size() % 2 == 0; ++h) {
        if (levels_.size() == h + 1) {
            levels_.emplace_back();
        }
        const auto &level = levels_[h];
        levels_[h + 1].push_back(hasher_.combine(level[level.size() - 2], level.back()));
    }
}

MerkleLog::AppendResult MerkleLog::append(ByteView data) {
    if (data.empty()) {
        throw std::invalid_argument{"log entry must not be empty"};
    }
    add_leaf(data);
    root_ = node(0, size());
    return {size(), root_};
}

MerkleLog::AppendResult MerkleLog::append_batch(std::span<const Bytes> batch) {
    for (const auto &b : batch) {
        if (b.empty()) {
            throw std::invalid_argument{"log entry must not be empty"};
        }
    }
    if (batch.empty()) {
        if (empty()) {
            throw std::logic_error{"empty batch on an empty log"};
        }
        return {size(), root_};
    }
    for (const auto &b : batch) {
        add_leaf(b);
    }
    root_ = node(0, size());
    return {size(), root_};
}

const Bytes &MerkleLog::entry(std::size_t index) const {
    if (index >= size()) {
        throw std::out_of_range{"entry index out of range"};
    }
    return entries_[index];
}

const Digest &MerkleLog::root() const {
    if (empty()) {
        throw std::logic_error{"empty log has no root"};
    }
    return root_;
}

Digest MerkleLog::root_at(std::size_t tree_size) const {
    if (tree_size == 0 || tree_size > size()) {
        throw std::out_of_range{"snapshot size out of range"};
    }
    return tree_size == size() ? root_ : node(0, tree_size);
}

Digest MerkleLog::node(std::size_t lo, std::size_t hi) const {
    if (lo >= hi || hi > size()) {
        throw std::out_of_range{"node range out of range"};
    }
    std::size_t width = hi - lo;
    if (std::has_single_bit(width) && lo % width == 0) {
        return levels_[std::countr_zero(width)][lo / width];
    }
    std::size_t k = split_point(width);
    return hasher_.combine(node(lo, lo + k), node(lo + k, hi));
}

void MerkleLog::path(std::size_t index, std::size_t lo, std::size_t hi, SidedProof &out) const {
    if (hi - lo == 1) {
        return;
    }
    std::size_t k = split_point(hi - lo);
    if (index < lo + k) {
        path(index, lo, lo + k, out);
        out.push_back({Side::right, node(lo + k, hi)});
    } else {
        path(index, lo + k, hi, out);
        out.push_back({Side::left, node(lo, lo + k)});
    }
}

SidedProof MerkleLog::membership_proof(std::size_t index, std::size_t tree_size) const {
    if (tree_size > size() || index >= tree_size) {
        throw std::out_of_range{"membership proof index out of range"};
    }
    SidedProof out;
    path(index, 0, tree_size, out);
    return out;
}

void MerkleLog::subproof(std::size_t m, std::size_t lo, std::size_t hi, SidedProof &out) const {
    if (hi - lo == m) {
        out.push_back({Side::left, node(lo, hi)});
        return;
    }
    std::size_t k = split_point(hi - lo);
    if (m <= k) {
        subproof(m, lo, lo + k, out);
        out.push_back({Side::right, node(lo + k, hi)});
    } else {
        subproof(m - k, lo + k, hi, out);
        out.push_back({Side::left, node(lo, lo + k)});
    }
}

SidedProof MerkleLog::consistency_proof(std::size_t old_size, std::size_t new_size) const {
    if (new_size > size() || old_size == 0 || old_size >= new_size) {
        throw std::out_of_range{"consistency proof needs 1 <= old size < new size <= log size"};
    }
    SidedProof out;
    subproof(old_size, 0, new_size, out);
    return out;
}

} // namespace authfeed
