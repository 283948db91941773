#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "authfeed/bytes.hpp"

namespace authfeed {

/// 32-byte hash output. Hex form is 64 lowercase characters without prefix.
class Digest {
public:
    static constexpr std::size_t kSize = 32;
    using Array = std::array<std::uint8_t, kSize>;

    Digest() = default;
    explicit Digest(const Array &bytes) : bytes_{bytes} {}

    /// Throws std::invalid_argument unless `data` is exactly 32 bytes.
    static Digest from_bytes(ByteView data);
    /// Strict: exactly 64 lowercase hex characters.
    static Digest from_hex(std::string_view hex);

    std::string hex() const { return to_hex(bytes_); }
    const Array &bytes() const { return bytes_; }
    ByteView view() const { return bytes_; }

    auto operator<=>(const Digest &) const = default;

private:
    Array bytes_{};
};

/// Raw Keccak-256 (original padding 0x01, as used by Ethereum).
Digest keccak256(ByteView data);
/// Raw SHA3-256 (FIPS 202 padding 0x06). Shares the permutation with keccak256.
Digest sha3_256(ByteView data);
Digest sha256(ByteView data);

enum class HashAlgorithm : std::uint8_t {
    keccak256 = 0,
    sha256 = 1,
};

std::string_view to_string(HashAlgorithm algo);
/// Accepts "keccak256" or "sha256"; throws std::invalid_argument otherwise.
HashAlgorithm parse_hash_algorithm(std::string_view name);

/// The protocol's HASH(): every invocation is counted on the calling thread's
/// meter, which is how the ledger reports hash work in receipts.
class Hasher {
public:
    explicit Hasher(HashAlgorithm algo = HashAlgorithm::keccak256) : algo_{algo} {}

    Digest operator()(ByteView data) const;
    /// HASH(left || right)
    Digest combine(const Digest &left, const Digest &right) const;

    HashAlgorithm algorithm() const { return algo_; }

private:
    HashAlgorithm algo_;
};

/// Per-thread work counters. The ledger samples them around contract handler
/// execution; the values have no meaning outside such a window.
struct MeterReading {
    std::uint64_t hash_ops = 0;
    std::uint64_t parse_tokens = 0;
};

namespace meter {
MeterReading read();
void add_hash_ops(std::uint64_t n);
void add_parse_tokens(std::uint64_t n);
} // namespace meter

} // namespace authfeed
