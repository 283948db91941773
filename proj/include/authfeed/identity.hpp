#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <string>
#include <string_view>

#include "authfeed/bytes.hpp"

namespace authfeed {

/// 20-byte account or contract identifier. Text form is "0x" + 40 lowercase
/// hex characters.
class Address {
public:
    static constexpr std::size_t kSize = 20;
    using Array = std::array<std::uint8_t, kSize>;

    Address() = default;
    explicit Address(const Array &bytes) : bytes_{bytes} {}

    /// Last 20 bytes of keccak256(public_key).
    static Address from_public_key(ByteView public_key);
    static Address from_bytes(ByteView data);
    /// Accepts an optional "0x" prefix.
    static Address parse(std::string_view text);

    std::string str() const;
    const Array &bytes() const { return bytes_; }
    ByteView view() const { return bytes_; }
    bool is_zero() const { return bytes_ == Array{}; }

    auto operator<=>(const Address &) const = default;

private:
    Array bytes_{};
};

/// Ed25519 signing key. The secret half never leaves the owning process
/// except through save().
class KeyPair {
public:
    static constexpr std::size_t kPublicKeySize = 32;
    static constexpr std::size_t kSignatureSize = 64;

    static KeyPair generate();
    /// Deterministic key from a 32-byte seed; used by fixtures and benchmarks.
    static KeyPair from_seed(ByteView seed);
    static KeyPair from_seed_text(std::string_view label);

    const Bytes &public_key() const { return public_key_; }
    Address address() const { return Address::from_public_key(public_key_); }
    Bytes sign(ByteView message) const;

    /// JSON key file {"public_key": hex, "seed": hex}.
    void save(const std::filesystem::path &path) const;
    static KeyPair load(const std::filesystem::path &path);

private:
    Bytes seed_;
    Bytes public_key_;
    Bytes secret_key_;
};

bool verify_signature(ByteView public_key, ByteView message, ByteView signature);

} // namespace authfeed
