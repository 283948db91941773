#include "authfeed/manifest.hpp"

#include <fstream>

namespace authfeed {

IdentityCredential IdentityCredential::generate(std::string subject) {
    return {std::move(subject), KeyPair::generate()};
}

nlohmann::json IdentityCredential::certificate() const {
    return {{"subject", subject}, {"algorithm", "ed25519"}, {"public_key", to_hex(key.public_key())}};
}

void IdentityCredential::save(const std::filesystem::path &path) const {
    key.save(path);
    auto cert = path;
    cert += ".cert";
    std::ofstream out{cert};
    out << certificate().dump(2) << '\n';
    if (!out) {
        throw std::runtime_error{"cannot write " + cert.string()};
    }
}

IdentityCredential IdentityCredential::load(const std::filesystem::path &path) {
    auto cert = path;
    cert += ".cert";
    std::ifstream in{cert};
    if (!in) {
        throw std::runtime_error{"cannot read " + cert.string()};
    }
    auto j = nlohmann::json::parse(in);
    IdentityCredential c{j.at("subject").get<std::string>(), KeyPair::load(path)};
    if (j.at("public_key").get<std::string>() != to_hex(c.key.public_key())) {
        throw std::runtime_error{"certificate does not match key " + path.string()};
    }
    return c;
}

Manifest Manifest::create(std::string url, Address sc_address, nlohmann::json sc_interface,
                          std::string data_structure, const KeyPair &identity) {
    Manifest m{std::move(url), sc_address, std::move(sc_interface), std::move(data_structure), {}};
    m.signature = identity.sign(as_bytes(m.canonical_bytes()));
    return m;
}

nlohmann::json Manifest::signed_object() const {
    return {{"url", url}, {"sc_address", sc_address.str()}, {"sc_interface", sc_interface},
            {"data_structure", data_structure}};
}

std::string Manifest::canonical_bytes() const {
    // nlohmann::json keeps object keys sorted; dump() is compact UTF-8.
    return signed_object().dump();
}

bool Manifest::verify(ByteView public_key) const {
    return verify_signature(public_key, as_bytes(canonical_bytes()), signature);
}

std::string Manifest::serialize() const {
    return "{\"signed\":" + canonical_bytes() + ",\"signature\":\"" + to_hex(signature) + "\"}";
}

Manifest Manifest::parse(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        const auto &s = j.at("signed");
        if (!j.is_object() || j.size() != 2 || !s.is_object() || s.size() != 4) {
            throw ManifestError{"manifest must hold exactly signed{url, sc_address, sc_interface, data_structure} "
                                "and signature"};
        }
        Manifest m;
        m.url = s.at("url").get<std::string>();
        m.sc_address = Address::parse(s.at("sc_address").get<std::string>());
        m.sc_interface = s.at("sc_interface");
        m.data_structure = s.at("data_structure").get<std::string>();
        m.signature = from_hex(j.at("signature").get<std::string>());
        return m;
    } catch (const ManifestError &) {
        throw;
    } catch (const std::exception &e) {
        throw ManifestError{std::string{"malformed manifest: "} + e.what()};
    }
}

} // namespace authfeed
