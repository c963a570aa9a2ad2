#include "flowscribe/agent/catalogue.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

#include "flowscribe/dsl/parser.hpp"

namespace flowscribe::agent {

using nlohmann::json;

std::string to_string(Verdict v) { return v == Verdict::DO ? "DO" : "DONT"; }

Verdict parse_verdict(const std::string& s) {
    if (s == "DO" || s == "do") return Verdict::DO;
    if (s == "DONT" || s == "dont" || s == "DON'T") return Verdict::DONT;
    throw std::invalid_argument("verdict must be DO or DONT, got '" + s + "'");
}

json to_json(const CatalogueEntry& e) {
    return {{"id", e.id},
            {"prompt", e.prompt},
            {"spec_text", e.spec_text},
            {"score", e.score ? json(*e.score) : json(nullptr)},
            {"user_feedback", e.user_feedback},
            {"verdict", to_string(e.verdict)},
            {"rated", e.rated},
            {"rating", e.rating ? json(*e.rating) : json(nullptr)},
            {"parseable", e.parseable},
            {"created_at", e.created_at},
            {"revision", e.revision},
            {"model_id", e.model_id},
            {"template_version", e.template_version}};
}

CatalogueEntry entry_from_json(const json& j) {
    CatalogueEntry e;
    e.id = j.at("id").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.spec_text = j.at("spec_text").get<std::string>();
    if (j.contains("score") && !j.at("score").is_null()) e.score = j.at("score").get<double>();
    e.user_feedback = j.value("user_feedback", "");
    e.verdict = parse_verdict(j.at("verdict").get<std::string>());
    e.rated = j.value("rated", false);
    if (j.contains("rating") && !j.at("rating").is_null()) e.rating = j.at("rating").get<int>();
    e.parseable = j.value("parseable", true);
    e.created_at = j.value("created_at", std::int64_t{0});
    e.revision = j.value("revision", std::int64_t{0});
    e.model_id = j.value("model_id", "");
    e.template_version = j.value("template_version", "");
    return e;
}

namespace {

void check_entry(const CatalogueEntry& e) {
    if (e.score && !(*e.score >= 0 && *e.score <= 1)) throw std::invalid_argument("score must lie in [0, 1]");
    if (e.rating && (*e.rating < 1 || *e.rating > 5)) throw std::invalid_argument("rating must be 1-5");
    if (e.verdict == Verdict::DO) {
        if (!e.parseable) throw std::invalid_argument("DO entries must carry a parseable spec");
        auto r = dsl::parse(e.spec_text);
        if (!r.ok()) throw std::invalid_argument("DO entry spec does not parse: " + r.diagnostics.front().message);
    }
}

std::int64_t id_number(const std::string& id) {
    if (id.size() < 2 || id[0] != 'c') return 0;
    try {
        return std::stoll(id.substr(1));
    } catch (...) {
        return 0;
    }
}

}  // namespace

void apply_feedback(CatalogueEntry& e, const Rating& rating, const std::string& comment) {
    if (rating.stars) {
        const int r = *rating.stars;
        if (r < 1 || r > 5) throw std::invalid_argument("rating must be 1-5");
        e.rating = r;
        if (r >= 4) {
            e.verdict = Verdict::DO;
        } else if (r == 3) {
            e.verdict = Verdict::DO;
            e.score = std::min(e.score.value_or(0.5), 0.5);
        } else {
            e.verdict = Verdict::DONT;
        }
    } else if (rating.verdict) {
        e.verdict = *rating.verdict;
    } else {
        throw std::invalid_argument("feedback needs a rating or a verdict");
    }
    if (e.verdict == Verdict::DO && !e.parseable) throw std::invalid_argument("an unparseable attempt cannot become a DO");
    e.rated = true;
    if (!comment.empty()) e.user_feedback += (e.user_feedback.empty() ? "" : "\n") + comment;
}

std::int64_t Catalogue::system_clock_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Catalogue::Catalogue(Clock clock) : clock_(std::move(clock)) {}

Catalogue::Catalogue(std::filesystem::path path, Clock clock) : clock_(std::move(clock)), path_(std::move(path)) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    if (!std::filesystem::exists(*path_)) {
        std::ofstream create(*path_);
        if (!create) throw std::runtime_error("cannot create catalogue " + path_->string());
        return;
    }
    std::ifstream in(*path_);
    if (!in) throw std::runtime_error("cannot read catalogue " + path_->string());
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            CatalogueEntry e = entry_from_json(json::parse(line));
            check_entry(e);
            auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& x) { return x.id == e.id; });
            if (it != entries_.end()) *it = e;
            else entries_.push_back(e);
            next_revision_ = std::max(next_revision_, e.revision + 1);
            next_id_ = std::max(next_id_, id_number(e.id) + 1);
        } catch (const std::exception& ex) {
            warnings_.push_back(path_->string() + ":" + std::to_string(lineno) + ": skipped corrupt entry (" + ex.what() + ")");
        }
    }
}

std::vector<CatalogueEntry> Catalogue::snapshot() const {
    std::shared_lock lock(view_mu_);
    return entries_;
}

std::vector<CatalogueEntry> Catalogue::snapshot(Verdict v) const {
    std::shared_lock lock(view_mu_);
    std::vector<CatalogueEntry> out;
    for (const auto& e : entries_)
        if (e.verdict == v) out.push_back(e);
    return out;
}

std::optional<CatalogueEntry> Catalogue::get(const std::string& id) const {
    std::shared_lock lock(view_mu_);
    for (const auto& e : entries_)
        if (e.id == id) return e;
    return std::nullopt;
}

std::size_t Catalogue::size() const {
    std::shared_lock lock(view_mu_);
    return entries_.size();
}

CatalogueEntry Catalogue::commit(CatalogueEntry e) {
    e.revision = next_revision_;
    if (path_) {
        const std::string line = to_json(e).dump() + "\n";
        std::FILE* f = std::fopen(path_->c_str(), "ab");
        if (!f) throw std::runtime_error("cannot append to catalogue " + path_->string());
        const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0 &&
                        ::fsync(fileno(f)) == 0;
        std::fclose(f);
        if (!ok) throw std::runtime_error("catalogue write failed");
    }
    ++next_revision_;
    std::unique_lock lock(view_mu_);
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& x) { return x.id == e.id; });
    if (it != entries_.end()) *it = e;
    else entries_.push_back(e);
    return e;
}

CatalogueEntry Catalogue::add(CatalogueEntry draft) {
    check_entry(draft);
    std::lock_guard wl(write_mu_);
    if (draft.id.empty()) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "c%06lld", static_cast<long long>(next_id_));
        draft.id = buf;
    } else if (get(draft.id)) {
        throw std::invalid_argument("duplicate catalogue id '" + draft.id + "'");
    }
    next_id_ = std::max(next_id_, id_number(draft.id) + 1);
    if (draft.created_at == 0) draft.created_at = clock_();
    return commit(std::move(draft));
}

CatalogueEntry Catalogue::record_feedback(const std::string& id, const Rating& rating, const std::string& comment,
                                          std::optional<double> score) {
    if (score && !(*score >= 0 && *score <= 1)) throw std::invalid_argument("score must lie in [0, 1]");
    std::lock_guard wl(write_mu_);
    auto cur = get(id);
    if (!cur) throw UnknownEntry("unknown catalogue entry '" + id + "'");
    CatalogueEntry e = *cur;
    if (score) e.score = score;
    apply_feedback(e, rating, comment);
    return commit(std::move(e));
}

CatalogueEntry Catalogue::set_score(const std::string& id, double score) {
    std::lock_guard wl(write_mu_);
    auto cur = get(id);
    if (!cur) throw UnknownEntry("unknown catalogue entry '" + id + "'");
    if (!(score >= 0 && score <= 1)) throw std::invalid_argument("score must lie in [0, 1]");
    cur->score = score;
    return commit(std::move(*cur));
}

}  // namespace flowscribe::agent
