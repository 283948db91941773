#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "authfeed/merkle_log.hpp"

namespace authfeed {

/// A deliberately small recursive-descent JSON reader of the kind a contract
/// can afford: objects, arrays, strings and integers only. No floats, no
/// literals, and \uXXXX escapes are passed through undecoded. Every value
/// remembers its exact source span so verified bytes can be extracted
/// without re-serialization.
namespace minijson {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Kind { object, array, string, integer };

struct Value {
    Kind kind = Kind::object;
    std::string_view raw;
    std::string text;
    std::int64_t integer = 0;
    std::vector<std::pair<std::string, Value>> members;
    std::vector<Value> items;

    const Value *find(std::string_view key) const;
};

struct Document {
    Value root;
    std::uint64_t tokens = 0;
};

/// Parses exactly one value surrounded by optional whitespace. Duplicate
/// object keys are rejected. The token count is also added to the calling
/// thread's meter.
Document parse(std::string_view text);

} // namespace minijson

/// Body of an entry fetch and of a censorship response:
///   {"content":<entry bytes verbatim>,"proofs":[{"side":0|1,"hash":"<hex>"},...]}
struct EntryResponse {
    std::string content;
    SidedProof proofs;

    std::string serialize() const;
    /// Extracts content as the exact source span; throws minijson::ParseError.
    static EntryResponse parse(std::string_view body);
};

} // namespace authfeed
