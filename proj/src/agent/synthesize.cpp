#include "flowscribe/agent/synthesize.hpp"

#include <cmath>

#include "flowscribe/dsl/parser.hpp"

namespace flowscribe::agent {

using nlohmann::json;

json to_json(const Provenance& p) {
    return {{"model_id", p.model_id},
            {"bundle_hash", p.bundle_hash},
            {"template_version", p.template_version},
            {"spec_hash", p.spec_hash},
            {"repair_rounds", p.repair_rounds}};
}

std::string to_string(SynthesisFailure f) {
    switch (f) {
        case SynthesisFailure::none: return "none";
        case SynthesisFailure::transport: return "transport";
        case SynthesisFailure::extraction: return "extraction";
        case SynthesisFailure::parse: return "parse";
    }
    return "unknown";
}

namespace {

struct Attempt {
    std::optional<dsl::ObjectiveSpec> spec;
    std::vector<dsl::Diagnostic> diagnostics;
    std::string error;
    SynthesisFailure failure = SynthesisFailure::none;
};

Attempt check(const std::string& transcript) {
    Attempt a;
    std::string body;
    try {
        body = dsl::extract_fenced(transcript);
    } catch (const dsl::ExtractionError& e) {
        a.failure = SynthesisFailure::extraction;
        a.error = e.what();
        return a;
    }
    auto r = dsl::parse(body);
    if (!r.ok()) {
        a.failure = SynthesisFailure::parse;
        a.diagnostics = r.diagnostics;
        a.error = r.diagnostics.front().message;
        return a;
    }
    if (r.spec->n_expected) {
        try {
            terms::compile(*r.spec);
        } catch (const std::exception& e) {
            a.failure = SynthesisFailure::parse;
            a.diagnostics.push_back({dsl::Severity::error, r.spec->span, e.what()});
            a.error = e.what();
            return a;
        }
    }
    a.spec = std::move(r.spec);
    return a;
}

std::string repair_message(const Attempt& a) {
    std::string s = "Your reply could not be used: " + a.error + "\n";
    if (a.failure == SynthesisFailure::extraction) {
        s += "Put the objective in a fenced code block tagged objective-dsl.\n";
    } else {
        s += "Diagnostics (byte spans into the code block):\n";
        for (const auto& d : a.diagnostics)
            s += "  [" + std::to_string(d.span.begin) + ", " + std::to_string(d.span.end) + ") " + d.message + "\n";
        s += "Reply with one corrected objective-dsl block.\n";
    }
    return s;
}

}  // namespace

SynthesisResult synthesize(const std::string& request, const std::vector<CatalogueEntry>& examples, LLMClient& client,
                           Catalogue* record, const SynthesisOptions& opt) {
    SynthesisResult out;
    out.bundle = compose_prompt(examples, request, opt.budget);
    out.provenance.model_id = client.model_id();
    out.provenance.bundle_hash = bundle_hash(out.bundle);
    out.provenance.template_version = out.bundle.template_version;

    LLMRequest req;
    req.system = out.bundle.system_message;
    req.model = client.model_id();
    req.messages.push_back({"user", render_user_message(out.bundle)});

    Attempt last;
    const int attempts = std::max(1, opt.max_attempts);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string transcript;
        try {
            transcript = client.complete(req);
        } catch (const TransportError& e) {
            out.failure = SynthesisFailure::transport;
            out.error = e.what();
            return out;
        }
        out.transcripts.push_back(transcript);
        last = check(transcript);
        if (last.failure == SynthesisFailure::none) {
            out.provenance.repair_rounds = attempt;
            out.spec = std::move(last.spec);
            out.spec_text = dsl::print_canonical(*out.spec);
            out.provenance.spec_hash = sha256_hex(out.spec_text);
            if (record) {
                CatalogueEntry e;
                e.prompt = request;
                e.spec_text = out.spec_text;
                e.verdict = Verdict::DO;
                e.model_id = out.provenance.model_id;
                e.template_version = out.provenance.template_version;
                out.entry_id = record->add(std::move(e)).id;
            }
            return out;
        }
        req.messages.push_back({"assistant", transcript});
        req.messages.push_back({"user", repair_message(last)});
    }

    out.failure = last.failure;
    out.error = last.error;
    out.diagnostics = last.diagnostics;
    out.provenance.repair_rounds = attempts - 1;
    if (record) {
        CatalogueEntry e;
        e.prompt = request;
        e.spec_text = out.transcripts.back();
        e.verdict = Verdict::DONT;
        e.rated = true;
        e.parseable = false;
        e.user_feedback = "no usable objective after " + std::to_string(attempts) + " attempts: " + last.error;
        e.model_id = out.provenance.model_id;
        e.template_version = out.provenance.template_version;
        out.entry_id = record->add(std::move(e)).id;
    }
    return out;
}

SynthesisResult synthesize(const std::string& request, Catalogue& catalogue, LLMClient& client, const SynthesisOptions& opt) {
    return synthesize(request, catalogue.snapshot(), client, &catalogue, opt);
}

double score_geometric(const ParticleConfig& a, const terms::CompiledObjective& obj) {
    const double f = obj.evaluate(a);
    const double f0 = obj.tolerance() > 0 ? obj.tolerance() : 0.05;
    if (std::isnan(f)) return 0.0;
    return std::exp(-std::max(f, 0.0) / f0);
}

std::vector<EvaluationRow> evaluate_catalogue(const std::vector<std::string>& requests,
                                              const std::vector<CatalogueEntry>& catalogue, LLMClient& client,
                                              const std::vector<std::size_t>& budgets,
                                              const std::function<double(const dsl::ObjectiveSpec&)>& scorer,
                                              double threshold) {
    std::vector<EvaluationRow> rows;
    for (std::size_t budget : budgets) {
        EvaluationRow row;
        row.examples = budget;
        double total = 0.0;
        for (const auto& r : requests) {
            SynthesisOptions o;
            o.budget = budget;
            const auto res = synthesize(r, catalogue, client, nullptr, o);
            ++row.attempts;
            if (!res.ok()) continue;
            const double s = scorer(*res.spec);
            total += s;
            if (s >= threshold) ++row.successes;
        }
        row.mean_score = row.attempts ? total / static_cast<double>(row.attempts) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace flowscribe::agent
