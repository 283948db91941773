#include "authfeed/mini_json.hpp"

#include <limits>

namespace authfeed {
namespace minijson {

namespace {

constexpr int kMaxDepth = 32;

class Parser {
public:
    explicit Parser(std::string_view text) : text_{text} {}

    Document run() {
        Document doc;
        skip_ws();
        doc.root = value(0);
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        doc.tokens = tokens_;
        return doc;
    }

private:
    [[noreturn]] void fail(const std::string &why) const {
        throw ParseError{why + " at offset " + std::to_string(pos_)};
    }

    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\r' || text_[pos_] == '\t')) {
            ++pos_;
        }
    }

    char peek() const {
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        return text_[pos_];
    }

    void expect(char c) {
        if (peek() != c) {
            fail(std::string{"expected '"} + c + "'");
        }
        ++pos_;
        ++tokens_;
    }

    Value value(int depth) {
        if (depth > kMaxDepth) {
            fail("nesting too deep");
        }
        char c = peek();
        if (c == '{') {
            return object(depth);
        }
        if (c == '[') {
            return array(depth);
        }
        if (c == '"') {
            Value v;
            v.kind = Kind::string;
            auto start = pos_;
            v.text = string();
            v.raw = text_.substr(start, pos_ - start);
            return v;
        }
        if (c == '-' || (c >= '0' && c <= '9')) {
            return integer();
        }
        fail("unsupported value");
    }

    Value object(int depth) {
        Value v;
        v.kind = Kind::object;
        auto start = pos_;
        expect('{');
        skip_ws();
        if (peek() == '}') {
            expect('}');
            v.raw = text_.substr(start, pos_ - start);
            return v;
        }
        for (;;) {
            skip_ws();
            if (peek() != '"') {
                fail("expected object key");
            }
            auto key = string();
            if (v.find(key) != nullptr) {
                fail("duplicate key \"" + key + "\"");
            }
            skip_ws();
            expect(':');
            skip_ws();
            v.members.emplace_back(std::move(key), value(depth + 1));
            skip_ws();
            if (peek() == ',') {
                expect(',');
                continue;
            }
            expect('}');
            break;
        }
        v.raw = text_.substr(start, pos_ - start);
        return v;
    }

    Value array(int depth) {
        Value v;
        v.kind = Kind::array;
        auto start = pos_;
        expect('[');
        skip_ws();
        if (peek() == ']') {
            expect(']');
            v.raw = text_.substr(start, pos_ - start);
            return v;
        }
        for (;;) {
            skip_ws();
            v.items.push_back(value(depth + 1));
            skip_ws();
            if (peek() == ',') {
                expect(',');
                continue;
            }
            expect(']');
            break;
        }
        v.raw = text_.substr(start, pos_ - start);
        return v;
    }

    std::string string() {
        ++pos_; // opening quote
        ++tokens_;
        std::string out;
        for (;;) {
            char c = peek();
            ++pos_;
            if (c == '"') {
                return out;
            }
            if (static_cast<unsigned char>(c) < 0x20) {
                fail("control character in string");
            }
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            char e = peek();
            ++pos_;
            switch (e) {
            case '"':
            case '\\':
            case '/':
                out.push_back(e);
                break;
            case 'b':
                out.push_back('\b');
                break;
            case 'f':
                out.push_back('\f');
                break;
            case 'n':
                out.push_back('\n');
                break;
            case 'r':
                out.push_back('\r');
                break;
            case 't':
                out.push_back('\t');
                break;
            case 'u':
                out += "\\u";
                break;
            default:
                fail("bad escape");
            }
        }
    }

    Value integer() {
        Value v;
        v.kind = Kind::integer;
        auto start = pos_;
        bool negative = false;
        if (peek() == '-') {
            negative = true;
            ++pos_;
        }
        if (pos_ >= text_.size() || text_[pos_] < '0' || text_[pos_] > '9') {
            fail("expected digit");
        }
        if (text_[pos_] == '0' && pos_ + 1 < text_.size() && text_[pos_ + 1] >= '0' && text_[pos_ + 1] <= '9') {
            fail("leading zero");
        }
        std::uint64_t magnitude = 0;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') {
            auto digit = static_cast<std::uint64_t>(text_[pos_] - '0');
            if (magnitude > (static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) - digit) / 10) {
                fail("integer overflow");
            }
            magnitude = magnitude * 10 + digit;
            ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
            fail("only integers are supported");
        }
        v.integer = negative ? -static_cast<std::int64_t>(magnitude) : static_cast<std::int64_t>(magnitude);
        v.raw = text_.substr(start, pos_ - start);
        ++tokens_;
        return v;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::uint64_t tokens_ = 0;
};

} // namespace

const Value *Value::find(std::string_view key) const {
    for (const auto &[k, v] : members) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

Document parse(std::string_view text) {
    auto doc = Parser{text}.run();
    meter::add_parse_tokens(doc.tokens);
    return doc;
}

} // namespace minijson

std::string EntryResponse::serialize() const {
    std::string out = "{\"content\":";
    out += content;
    out += ",\"proofs\":";
    out += proof_to_json(proofs);
    out += '}';
    return out;
}

EntryResponse EntryResponse::parse(std::string_view body) {
    using minijson::Kind;
    using minijson::ParseError;
    auto doc = minijson::parse(body);
    if (doc.root.kind != Kind::object) {
        throw ParseError{"entry response must be an object"};
    }
    const auto *content = doc.root.find("content");
    const auto *proofs = doc.root.find("proofs");
    if (content == nullptr || proofs == nullptr || proofs->kind != Kind::array) {
        throw ParseError{"entry response needs content and proofs"};
    }
    EntryResponse out;
    out.content = std::string{content->raw};
    for (const auto &item : proofs->items) {
        const auto *side = item.kind == Kind::object ? item.find("side") : nullptr;
        const auto *hash = item.kind == Kind::object ? item.find("hash") : nullptr;
        if (side == nullptr || hash == nullptr || side->kind != Kind::integer || hash->kind != Kind::string ||
            (side->integer != 0 && side->integer != 1)) {
            throw ParseError{"malformed proof element"};
        }
        try {
            out.proofs.push_back({static_cast<Side>(side->integer), Digest::from_hex(hash->text)});
        } catch (const std::invalid_argument &e) {
            throw ParseError{e.what()};
        }
    }
    return out;
}

} // namespace authfeed
