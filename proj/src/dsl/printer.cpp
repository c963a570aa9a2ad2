#include <algorithm>
#include <charconv>
#include <string>

#include "flowscribe/dsl/parser.hpp"

namespace flowscribe::dsl {

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::vector<const KeywordArg*> sorted(const std::vector<KeywordArg>& kws) {
    std::vector<const KeywordArg*> out;
    for (const auto& k : kws) out.push_back(&k);
    std::sort(out.begin(), out.end(), [](const KeywordArg* a, const KeywordArg* b) { return a->key < b->key; });
    return out;
}

void print_into(const Value& v, std::string& out) {
    if (v.is_number()) {
        out += format_number(v.number());
    } else if (v.is_string()) {
        out += quote(v.string());
    } else if (v.is_symbol()) {
        out += v.symbol();
    } else if (v.is_list()) {
        out += '[';
        bool first = true;
        for (const auto& item : v.list().items) {
            if (!first) out += ' ';
            first = false;
            print_into(item, out);
        }
        out += ']';
    } else {
        const Form& f = v.form();
        out += '(';
        out += f.head;
        for (const auto& a : f.args) {
            out += ' ';
            print_into(a, out);
        }
        for (const auto* kw : sorted(f.kwargs)) {
            out += " :" + kw->key + ' ';
            print_into(kw->value, out);
        }
        out += ')';
    }
}

}  // namespace

std::string print_value(const Value& v) {
    std::string out;
    print_into(v, out);
    return out;
}

std::string print_canonical(const ObjectiveSpec& spec) {
    std::string out = "(objective";
    if (spec.n_expected) out += " :n " + std::to_string(*spec.n_expected);
    out += " :name " + quote(spec.name);
    out += " :norm-length " + format_number(spec.norm_length);
    out += " :tolerance " + format_number(spec.tolerance);
    for (const auto& t : spec.terms) {
        std::vector<KeywordArg> all = t.params;
        all.push_back({"weight", Value::make_number(t.weight), {}});
        out += "\n  (term " + t.kind;
        for (const auto* kw : sorted(all)) {
            out += " :" + kw->key + ' ';
            print_into(kw->value, out);
        }
        out += ')';
    }
    out += ")\n";
    return out;
}

nlohmann::json to_json(const Value& v) {
    if (v.is_number()) return v.number();
    if (v.is_string()) return v.string();
    if (v.is_symbol()) return {{"symbol", v.symbol()}};
    if (v.is_list()) {
        auto arr = nlohmann::json::array();
        for (const auto& item : v.list().items) arr.push_back(to_json(item));
        return arr;
    }
    const Form& f = v.form();
    nlohmann::json j = {{"form", f.head}};
    if (!f.args.empty()) {
        auto args = nlohmann::json::array();
        for (const auto& a : f.args) args.push_back(to_json(a));
        j["args"] = args;
    }
    for (const auto* kw : sorted(f.kwargs)) j["params"][kw->key] = to_json(kw->value);
    return j;
}

nlohmann::json to_json(const ObjectiveSpec& spec) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["n"] = spec.n_expected ? nlohmann::json(*spec.n_expected) : nlohmann::json(nullptr);
    j["norm_length"] = spec.norm_length;
    j["tolerance"] = spec.tolerance;
    j["terms"] = nlohmann::json::array();
    for (const auto& t : spec.terms) {
        nlohmann::json jt = {{"kind", t.kind}, {"weight", t.weight}, {"params", nlohmann::json::object()}};
        for (const auto& kw : t.params) jt["params"][kw.key] = to_json(kw.value);
        j["terms"].push_back(jt);
    }
    return j;
}

nlohmann::json to_json(const Diagnostic& d) {
    return {{"severity", d.severity == Severity::error ? "error" : "warning"},
            {"span", {d.span.begin, d.span.end}},
            {"message", d.message}};
}

std::string extract_fenced(std::string_view transcript) {
    struct Block {
        std::string info;
        std::string body;
    };
    std::vector<Block> blocks;
    std::optional<Block> open;
    std::size_t pos = 0;
    while (pos < transcript.size()) {
        std::size_t eol = transcript.find('\n', pos);
        if (eol == std::string_view::npos) eol = transcript.size();
        std::string_view line = transcript.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::string_view trimmed = line;
        std::size_t indent = 0;
        while (indent < 3 && indent < trimmed.size() && trimmed[indent] == ' ') ++indent;
        trimmed.remove_prefix(indent);
        const bool fence = trimmed.substr(0, 3) == "```";
        if (open) {
            if (fence && trimmed.find_first_not_of('`') == std::string_view::npos) {
                blocks.push_back(std::move(*open));
                open.reset();
            } else {
                open->body.append(line);
                open->body += '\n';
            }
        } else if (fence) {
            std::string_view info = trimmed.substr(3);
            while (!info.empty() && (info.front() == ' ' || info.front() == '`')) info.remove_prefix(1);
            std::size_t sp = info.find_first_of(" \t");
            open = Block{std::string(info.substr(0, sp)), {}};
        }
        if (eol == transcript.size()) break;
        pos = eol + 1;
    }
    if (open) blocks.push_back(std::move(*open));
    if (blocks.empty()) throw ExtractionError("no fenced code block in transcript");
    for (const auto& b : blocks)
        if (b.info == "objective-dsl") return b.body;
    return blocks.back().body;
}

}  // namespace flowscribe::dsl
