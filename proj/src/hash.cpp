#include "authfeed/hash.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace authfeed {

Digest Digest::from_bytes(ByteView data) {
    if (data.size() != kSize) {
        throw std::invalid_argument{"digest must be 32 bytes"};
    }
    Array out{};
    std::memcpy(out.data(), data.data(), kSize);
    return Digest{out};
}

Digest Digest::from_hex(std::string_view hex) {
    if (hex.size() != 2 * kSize) {
        throw std::invalid_argument{"digest hex must be 64 characters"};
    }
    for (char c : hex) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            throw std::invalid_argument{"digest hex must be lowercase"};
        }
    }
    return from_bytes(authfeed::from_hex(hex));
}

Digest sha256(ByteView data) {
    Digest::Array out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return Digest{out};
}

std::string_view to_string(HashAlgorithm algo) {
    switch (algo) {
    case HashAlgorithm::keccak256:
        return "keccak256";
    case HashAlgorithm::sha256:
        return "sha256";
    }
    return "unknown";
}

HashAlgorithm parse_hash_algorithm(std::string_view name) {
    if (name == "keccak256") {
        return HashAlgorithm::keccak256;
    }
    if (name == "sha256") {
        return HashAlgorithm::sha256;
    }
    throw std::invalid_argument{"unknown hash algorithm: " + std::string{name}};
}

Digest Hasher::operator()(ByteView data) const {
    meter::add_hash_ops(1);
    return algo_ == HashAlgorithm::keccak256 ? keccak256(data) : sha256(data);
}

Digest Hasher::combine(const Digest &left, const Digest &right) const {
    std::array<std::uint8_t, 2 * Digest::kSize> buf;
    std::memcpy(buf.data(), left.bytes().data(), Digest::kSize);
    std::memcpy(buf.data() + Digest::kSize, right.bytes().data(), Digest::kSize);
    return (*this)(buf);
}

namespace meter {

namespace {
thread_local MeterReading current;
}

MeterReading read() {
    return current;
}

void add_hash_ops(std::uint64_t n) {
    current.hash_ops += n;
}

void add_parse_tokens(std::uint64_t n) {
    current.parse_tokens += n;
}

} // namespace meter

} // namespace authfeed
