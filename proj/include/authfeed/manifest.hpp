#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "authfeed/bytes.hpp"
#include "authfeed/identity.hpp"

namespace authfeed {

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stand-in for a TLS certificate: a signing keypair bound to the provider's
/// domain. Only the public part is ever handed to parties.
struct IdentityCredential {
    std::string subject;
    KeyPair key;

    static IdentityCredential generate(std::string subject);
    /// {subject, algorithm, public_key}
    nlohmann::json certificate() const;

    void save(const std::filesystem::path &path) const;
    static IdentityCredential load(const std::filesystem::path &path);
};

/// The provider's signed descriptor. Served as
///   {"signed":{...},"signature":"<hex>"}
/// where the signature covers the canonical bytes of the signed object:
/// sorted keys, no insignificant whitespace, UTF-8.
struct Manifest {
    std::string url;
    Address sc_address;
    nlohmann::json sc_interface;
    std::string data_structure;
    Bytes signature;

    static Manifest create(std::string url, Address sc_address, nlohmann::json sc_interface,
                           std::string data_structure, const KeyPair &identity);

    nlohmann::json signed_object() const;
    std::string canonical_bytes() const;
    bool verify(ByteView public_key) const;

    std::string serialize() const;
    /// Throws ManifestError on malformed input. Does not check the signature.
    static Manifest parse(std::string_view text);
};

} // namespace authfeed
