#include "authfeed/abi.hpp"

namespace authfeed {

namespace {
constexpr std::uint8_t kTagU64 = 0x01;
constexpr std::uint8_t kTagBytes = 0x02;
} // namespace

ArgWriter &ArgWriter::u64(std::uint64_t v) {
    out_.push_back(kTagU64);
    for (int shift = 56; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(v >> shift));
    }
    return *this;
}

ArgWriter &ArgWriter::bytes(ByteView v) {
    if (v.size() > 0xffffffffu) {
        throw AbiError{"argument too large"};
    }
    auto n = static_cast<std::uint32_t>(v.size());
    out_.push_back(kTagBytes);
    for (int shift = 24; shift >= 0; shift -= 8) {
        out_.push_back(static_cast<std::uint8_t>(n >> shift));
    }
    out_.insert(out_.end(), v.begin(), v.end());
    return *this;
}

std::uint8_t ArgReader::tag() {
    if (pos_ >= data_.size()) {
        throw AbiError{"missing argument"};
    }
    return data_[pos_++];
}

std::uint64_t ArgReader::u64() {
    if (tag() != kTagU64) {
        throw AbiError{"expected uint64 argument"};
    }
    if (data_.size() - pos_ < 8) {
        throw AbiError{"truncated uint64 argument"};
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | data_[pos_++];
    }
    return v;
}

Bytes ArgReader::bytes() {
    if (tag() != kTagBytes) {
        throw AbiError{"expected bytes argument"};
    }
    if (data_.size() - pos_ < 4) {
        throw AbiError{"truncated length prefix"};
    }
    std::size_t n = 0;
    for (int i = 0; i < 4; ++i) {
        n = (n << 8) | data_[pos_++];
    }
    if (data_.size() - pos_ < n) {
        throw AbiError{"truncated bytes argument"};
    }
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

std::string ArgReader::str() {
    return to_string(bytes());
}

Digest ArgReader::digest() {
    auto b = bytes();
    if (b.size() != Digest::kSize) {
        throw AbiError{"digest argument must be 32 bytes"};
    }
    return Digest::from_bytes(b);
}

Address ArgReader::address() {
    auto b = bytes();
    if (b.size() != Address::kSize) {
        throw AbiError{"address argument must be 20 bytes"};
    }
    return Address::from_bytes(b);
}

SidedProof ArgReader::proof() {
    auto b = bytes();
    try {
        return decode_proof(b);
    } catch (const std::invalid_argument &e) {
        throw AbiError{e.what()};
    }
}

void ArgReader::expect_end() const {
    if (!at_end()) {
        throw AbiError{"unexpected trailing arguments"};
    }
}

} // namespace authfeed
