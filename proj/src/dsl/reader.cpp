// S-expression reader for the objective DSL.
//
//   value   := number | string | symbol | list | form
//   list    := "[" value* "]"
//   form    := "(" symbol (value | keyword value)* ")"
//   keyword := ":" name
//
// Comments run from ';' to end of line.

#include <cctype>
#include <charconv>
#include <cmath>

#include "flowscribe/dsl/parser.hpp"

namespace flowscribe::dsl {

namespace {

constexpr int kMaxDepth = 128;

enum class Tok { lparen, rparen, lbracket, rbracket, number, string, keyword, symbol, end, error };

struct Token {
    Tok kind = Tok::end;
    Span span;
    std::string text;  // decoded string, keyword name, symbol name, or error message
    double number = 0.0;
};

bool is_symbol_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == '/' || c == '*' || c == '+' ||
           c == '?' || c == '!' || c == '<' || c == '>' || c == '=';
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_space();
        Token t;
        t.span = {pos_, pos_};
        if (pos_ >= src_.size()) return t;
        const unsigned char c = static_cast<unsigned char>(src_[pos_]);
        switch (c) {
            case '(': return single(Tok::lparen);
            case ')': return single(Tok::rparen);
            case '[': return single(Tok::lbracket);
            case ']': return single(Tok::rbracket);
            case '"': return string_token();
            case ':': return keyword_token();
            default: break;
        }
        if (std::isdigit(c) || ((c == '-' || c == '+' || c == '.') && starts_number(pos_))) return number_token();
        if (is_symbol_char(c)) return symbol_token();
        return error_at(pos_, pos_ + 1, "unexpected character");
    }

private:
    void skip_space() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ';') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    bool starts_number(std::size_t i) const {
        if (src_[i] == '-' || src_[i] == '+') ++i;
        if (i < src_.size() && src_[i] == '.') ++i;
        return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]));
    }

    Token single(Tok k) {
        Token t;
        t.kind = k;
        t.span = {pos_, pos_ + 1};
        ++pos_;
        return t;
    }

    Token error_at(std::size_t b, std::size_t e, std::string msg) {
        Token t;
        t.kind = Tok::error;
        t.span = {b, e};
        t.text = std::move(msg);
        pos_ = e;
        return t;
    }

    Token string_token() {
        const std::size_t begin = pos_++;
        std::string out;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '"') {
                Token t;
                t.kind = Tok::string;
                t.span = {begin, ++pos_};
                t.text = std::move(out);
                return t;
            }
            if (c == '\\') {
                if (pos_ + 1 >= src_.size()) break;
                const char e = src_[pos_ + 1];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    default: return error_at(pos_, pos_ + 2, "unknown escape sequence");
                }
                pos_ += 2;
                continue;
            }
            out += c;
            ++pos_;
        }
        return error_at(begin, src_.size(), "unterminated string");
    }

    Token keyword_token() {
        const std::size_t begin = pos_++;
        while (pos_ < src_.size() && is_symbol_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == begin + 1) return error_at(begin, begin + 1, "empty keyword");
        Token t;
        t.kind = Tok::keyword;
        t.span = {begin, pos_};
        t.text = std::string(src_.substr(begin + 1, pos_ - begin - 1));
        return t;
    }

    Token number_token() {
        const std::size_t begin = pos_;
        while (pos_ < src_.size() && is_symbol_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        std::string_view text = src_.substr(begin, pos_ - begin);
        std::string_view digits = text;
        if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (ec == std::errc::result_out_of_range) return error_at(begin, pos_, "number out of range");
        if (ec != std::errc() || ptr != digits.data() + digits.size() || !std::isfinite(v))
            return error_at(begin, pos_, "malformed number");
        Token t;
        t.kind = Tok::number;
        t.span = {begin, pos_};
        t.number = v;
        return t;
    }

    Token symbol_token() {
        const std::size_t begin = pos_;
        while (pos_ < src_.size() && is_symbol_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        Token t;
        t.kind = Tok::symbol;
        t.span = {begin, pos_};
        t.text = std::string(src_.substr(begin, pos_ - begin));
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

class Reader {
public:
    explicit Reader(std::string_view src) : lex_(src), size_(src.size()) { advance(); }

    ReadResult run() {
        ReadResult r;
        if (cur_.kind == Tok::end) {
            fail(cur_.span, "empty input: expected an s-expression");
        } else {
            auto v = value(0);
            if (v && !failed_ && cur_.kind != Tok::end) fail(cur_.span, "unexpected trailing input");
            if (!failed_) r.value = std::move(v);
        }
        r.diagnostics = std::move(diags_);
        return r;
    }

private:
    void advance() { cur_ = lex_.next(); }

    void fail(Span s, std::string msg) {
        if (failed_) return;
        failed_ = true;
        s.begin = std::min(s.begin, size_);
        s.end = std::min(std::max(s.end, s.begin), size_);
        diags_.push_back({Severity::error, s, std::move(msg)});
    }

    std::optional<Value> value(int depth) {
        if (depth > kMaxDepth) {
            fail(cur_.span, "nesting too deep");
            return std::nullopt;
        }
        Token t = cur_;
        switch (t.kind) {
            case Tok::number: advance(); return Value::make_number(t.number, t.span);
            case Tok::string: advance(); return Value::make_string(t.text, t.span);
            case Tok::symbol: advance(); return Value::make_symbol(t.text, t.span);
            case Tok::lbracket: return list(depth);
            case Tok::lparen: return form(depth);
            case Tok::error: fail(t.span, t.text); return std::nullopt;
            case Tok::end: fail(t.span, "unexpected end of input"); return std::nullopt;
            case Tok::keyword: fail(t.span, "keyword outside of a form"); return std::nullopt;
            case Tok::rparen:
            case Tok::rbracket: fail(t.span, "unbalanced closing delimiter"); return std::nullopt;
        }
        return std::nullopt;
    }

    std::optional<Value> list(int depth) {
        const std::size_t begin = cur_.span.begin;
        advance();
        std::vector<Value> items;
        while (cur_.kind != Tok::rbracket) {
            if (cur_.kind == Tok::end) {
                fail({begin, size_}, "unterminated list: missing ']'");
                return std::nullopt;
            }
            if (cur_.kind == Tok::keyword) {
                fail(cur_.span, "keyword not allowed inside a list");
                return std::nullopt;
            }
            auto v = value(depth + 1);
            if (!v) return std::nullopt;
            items.push_back(std::move(*v));
        }
        const std::size_t end = cur_.span.end;
        advance();
        return Value::make_list(std::move(items), {begin, end});
    }

    std::optional<Value> form(int depth) {
        const std::size_t begin = cur_.span.begin;
        advance();
        if (cur_.kind != Tok::symbol) {
            fail(cur_.kind == Tok::end ? Span{begin, size_} : cur_.span, "form must start with a symbol");
            return std::nullopt;
        }
        Form f;
        f.head = cur_.text;
        advance();
        while (cur_.kind != Tok::rparen) {
            if (cur_.kind == Tok::end) {
                fail({begin, size_}, "unterminated form: missing ')'");
                return std::nullopt;
            }
            if (cur_.kind == Tok::keyword) {
                Token key = cur_;
                advance();
                if (cur_.kind == Tok::rparen || cur_.kind == Tok::keyword || cur_.kind == Tok::end) {
                    fail(key.span, "missing value for keyword :" + key.text);
                    return std::nullopt;
                }
                for (const auto& kw : f.kwargs) {
                    if (kw.key == key.text) {
                        fail(key.span, "duplicate keyword :" + key.text);
                        return std::nullopt;
                    }
                }
                auto v = value(depth + 1);
                if (!v) return std::nullopt;
                f.kwargs.push_back({key.text, std::move(*v), key.span});
                continue;
            }
            auto v = value(depth + 1);
            if (!v) return std::nullopt;
            f.args.push_back(std::move(*v));
        }
        const std::size_t end = cur_.span.end;
        advance();
        return Value::make_form(std::move(f), {begin, end});
    }

    Lexer lex_;
    std::size_t size_;
    Token cur_;
    bool failed_ = false;
    std::vector<Diagnostic> diags_;
};

}  // namespace

ReadResult read_sexpr(std::string_view source) { return Reader(source).run(); }

}  // namespace flowscribe::dsl
