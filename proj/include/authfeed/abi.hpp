#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "authfeed/bytes.hpp"
#include "authfeed/hash.hpp"
#include "authfeed/identity.hpp"
#include "authfeed/merkle_log.hpp"

namespace authfeed {

// Canonical call-argument encoding. Each value is a tag byte followed by its
// payload:
//   0x01 uint64  -> 8 bytes big-endian
//   0x02 bytes   -> 4-byte big-endian length, then the octets
// Digests, addresses, strings and proofs travel as tagged bytes.

class AbiError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgWriter {
public:
    ArgWriter &u64(std::uint64_t v);
    ArgWriter &bytes(ByteView v);
    ArgWriter &str(std::string_view v) { return bytes(as_bytes(v)); }
    ArgWriter &digest(const Digest &d) { return bytes(d.view()); }
    ArgWriter &address(const Address &a) { return bytes(a.view()); }
    ArgWriter &proof(std::span<const ProofElement> p) { return bytes(encode_proof(p)); }

    const Bytes &data() const & { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Reads values in order; every accessor throws AbiError on a type or length
/// mismatch.
class ArgReader {
public:
    explicit ArgReader(ByteView data) : data_{data} {}

    std::uint64_t u64();
    Bytes bytes();
    std::string str();
    Digest digest();
    Address address();
    SidedProof proof();

    bool at_end() const { return pos_ == data_.size(); }
    /// Throws AbiError if unread values remain.
    void expect_end() const;

private:
    std::uint8_t tag();

    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace authfeed
