#include "flowscribe/agent/prompt.hpp"

#include <algorithm>
#include <sstream>

#include <openssl/evp.h>

#include "flowscribe/dsl/registry.hpp"

namespace flowscribe::agent {

using nlohmann::json;

namespace {

std::string describe_params(const std::vector<dsl::ParamSchema>& params) {
    std::string out;
    for (const auto& p : params) {
        out += " :" + p.key + " <" + std::string(dsl::to_string(p.type));
        if (!p.choices.empty()) {
            out += " ";
            for (std::size_t i = 0; i < p.choices.size(); ++i) out += (i ? "|" : "") + p.choices[i];
        }
        out += p.required ? ">" : ">?";
    }
    return out;
}

void describe_forms(std::ostringstream& s, const char* title, const std::vector<dsl::FormSchema>& forms) {
    s << title << ":\n";
    for (const auto& f : forms) {
        s << "  (" << f.head;
        for (std::size_t i = 0; i < f.positional_strings; ++i) s << " \"...\"";
        s << describe_params(f.params) << ") ; " << f.doc << "\n";
    }
}

std::string build_system_message() {
    std::ostringstream s;
    s << "You are an agent that writes objective functions for arranging microscopic particles with "
         "light-driven flows. An objective scores a particle configuration; the controller moves the "
         "particles to lower it. Write objectives in the objective DSL below, never in a general-purpose "
         "language.\n\n"
         "Grammar:\n"
         "  spec  := (objective [:name \"...\"] [:n COUNT] [:norm-length UM] [:tolerance F0] term+)\n"
         "  term  := (term KIND [:weight W] (:KEY VALUE)*)\n"
         "  value := number | \"string\" | symbol | [v ...] | (form ...)\n"
         "Lengths are in micrometres, angles in degrees, weights are non-negative. Particle indices in "
         ":subset lists start at 0. Comments run from ';' to the end of the line.\n\n"
         "Term kinds (<type>? marks optional parameters):\n";
    for (const auto& k : dsl::term_kinds()) s << "  " << k.kind << describe_params(k.params) << " ; " << k.doc << "\n";
    s << "\n";
    describe_forms(s, "Curve forms", dsl::curve_schemas());
    describe_forms(s, "Shape forms", dsl::shape_schemas());
    describe_forms(s, "Region forms", dsl::region_schemas());
    s << "\nLearn from the rated examples. Entries marked DON'T failed; avoid repeating them.\n"
         "Answer with exactly one fenced code block tagged objective-dsl.\n";
    return s.str();
}

bool do_before(const CatalogueEntry& a, const CatalogueEntry& b) {
    const double sa = a.score.value_or(-1.0), sb = b.score.value_or(-1.0);
    if (sa != sb) return sa > sb;
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id > b.id;
}

bool recent_before(const CatalogueEntry& a, const CatalogueEntry& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id > b.id;
}

}  // namespace

const std::string& system_message() {
    static const std::string msg = build_system_message();
    return msg;
}

PromptBundle compose_prompt(const std::vector<CatalogueEntry>& catalogue, const std::string& request, std::size_t budget) {
    std::vector<CatalogueEntry> dos, donts;
    for (const auto& e : catalogue) {
        if (e.verdict == Verdict::DONT) donts.push_back(e);
        else if (e.rated && e.parseable) dos.push_back(e);
    }
    std::sort(dos.begin(), dos.end(), do_before);
    std::sort(donts.begin(), donts.end(), recent_before);
    const std::size_t n_dont = std::min({kMaxDonts, donts.size(), budget});
    const std::size_t n_do = std::min(dos.size(), budget - n_dont);

    PromptBundle b;
    b.system_message = system_message();
    b.request = request;
    b.budget = budget;
    for (std::size_t i = 0; i < n_do; ++i)
        b.examples.push_back({dos[i].prompt, dos[i].spec_text, Verdict::DO, dos[i].user_feedback});
    for (std::size_t i = 0; i < n_dont; ++i)
        b.examples.push_back({donts[i].prompt, donts[i].spec_text, Verdict::DONT, donts[i].user_feedback});
    return b;
}

json to_json(const PromptBundle& b) {
    json ex = json::array();
    for (const auto& e : b.examples)
        ex.push_back({{"prompt", e.prompt}, {"spec_text", e.spec_text}, {"verdict", to_string(e.verdict)}, {"feedback", e.feedback}});
    return {{"template_version", b.template_version},
            {"system_message", b.system_message},
            {"examples", ex},
            {"request", b.request},
            {"budget", b.budget}};
}

std::string bundle_bytes(const PromptBundle& b) { return to_json(b).dump(); }

std::string bundle_hash(const PromptBundle& b) { return sha256_hex(bundle_bytes(b)); }

std::string render_user_message(const PromptBundle& b) {
    std::ostringstream s;
    std::size_t n_do = 0, n_dont = 0;
    for (const auto& e : b.examples) {
        if (e.verdict == Verdict::DO) {
            s << "Example " << ++n_do << " (DO)\nRequest: " << e.prompt << "\n```objective-dsl\n" << e.spec_text;
            if (!e.spec_text.empty() && e.spec_text.back() != '\n') s << "\n";
            s << "```\n";
            if (!e.feedback.empty()) s << "User feedback: " << e.feedback << "\n";
        } else {
            s << "Failed attempt " << ++n_dont << " (DON'T)\nRequest: " << e.prompt << "\nOutput:\n" << e.spec_text;
            if (!e.spec_text.empty() && e.spec_text.back() != '\n') s << "\n";
            s << "What went wrong: " << (e.feedback.empty() ? "rejected" : e.feedback) << "\n";
        }
        s << "\n";
    }
    s << "New task: " << b.request << "\n";
    return s.str();
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

}  // namespace flowscribe::agent
