#include "authfeed/identity.hpp"

#include <sodium.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "authfeed/hash.hpp"

namespace authfeed {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) {
        throw std::runtime_error{"libsodium initialisation failed"};
    }
}

} // namespace

Address Address::from_public_key(ByteView public_key) {
    auto digest = keccak256(public_key);
    Array out{};
    std::memcpy(out.data(), digest.bytes().data() + (Digest::kSize - kSize), kSize);
    return Address{out};
}

Address Address::from_bytes(ByteView data) {
    if (data.size() != kSize) {
        throw std::invalid_argument{"address must be 20 bytes"};
    }
    Array out{};
    std::memcpy(out.data(), data.data(), kSize);
    return Address{out};
}

Address Address::parse(std::string_view text) {
    if (text.starts_with("0x") || text.starts_with("0X")) {
        text.remove_prefix(2);
    }
    if (text.size() != 2 * kSize) {
        throw std::invalid_argument{"address must be 40 hex characters"};
    }
    return from_bytes(from_hex(text));
}

std::string Address::str() const {
    return "0x" + to_hex(bytes_);
}

KeyPair KeyPair::generate() {
    ensure_sodium();
    Bytes seed(crypto_sign_SEEDBYTES);
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

KeyPair KeyPair::from_seed(ByteView seed) {
    ensure_sodium();
    if (seed.size() != crypto_sign_SEEDBYTES) {
        throw std::invalid_argument{"key seed must be 32 bytes"};
    }
    KeyPair kp;
    kp.seed_.assign(seed.begin(), seed.end());
    kp.public_key_.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key_.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key_.data(), kp.secret_key_.data(), kp.seed_.data());
    return kp;
}

KeyPair KeyPair::from_seed_text(std::string_view label) {
    return from_seed(sha256(as_bytes(label)).view());
}

Bytes KeyPair::sign(ByteView message) const {
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key_.data());
    return sig;
}

void KeyPair::save(const std::filesystem::path &path) const {
    nlohmann::json j{{"public_key", to_hex(public_key_)}, {"seed", to_hex(seed_)}};
    std::ofstream out{path, std::ios::trunc};
    if (!out) {
        throw std::runtime_error{"cannot write key file " + path.string()};
    }
    out << j.dump(2) << '\n';
}

KeyPair KeyPair::load(const std::filesystem::path &path) {
    std::ifstream in{path};
    if (!in) {
        throw std::runtime_error{"cannot read key file " + path.string()};
    }
    auto j = nlohmann::json::parse(in);
    auto kp = from_seed(from_hex(j.at("seed").get<std::string>()));
    if (j.contains("public_key") && j["public_key"].get<std::string>() != to_hex(kp.public_key_)) {
        throw std::runtime_error{"key file public key does not match its seed"};
    }
    return kp;
}

bool verify_signature(ByteView public_key, ByteView message, ByteView signature) {
    ensure_sodium();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
        return false;
    }
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

} // namespace authfeed
