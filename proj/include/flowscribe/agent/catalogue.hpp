#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace flowscribe::agent {

enum class Verdict { DO, DONT };
std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& s);

struct CatalogueEntry {
    std::string id;
    std::string prompt;
    std::string spec_text;  // canonical DSL; raw model output when not parseable
    std::optional<double> score;
    std::string user_feedback;  // comments, oldest first, one per line
    Verdict verdict = Verdict::DO;
    /// Unrated DO entries are kept but not offered as examples.
    bool rated = false;
    std::optional<int> rating;
    bool parseable = true;
    std::int64_t created_at = 0;  // unix milliseconds
    std::int64_t revision = 0;    // position of this version in the log
    std::string model_id;
    std::string template_version;
};

nlohmann::json to_json(const CatalogueEntry& e);
CatalogueEntry entry_from_json(const nlohmann::json& j);

/// User rating: 1-5, or an explicit verdict.
struct Rating {
    std::optional<int> stars;
    std::optional<Verdict> verdict;

    static Rating of(int stars) { return {stars, std::nullopt}; }
    static Rating of(Verdict v) { return {std::nullopt, v}; }
};

class UnknownEntry : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// The rating rules of Catalogue::record_feedback applied to a detached entry.
void apply_feedback(CatalogueEntry& e, const Rating& rating, const std::string& comment);

/// Append-only log of entry versions with a latest-wins view. Readers run concurrently; writes are
/// serialized and each version is one flushed JSONL line.
class Catalogue {
public:
    using Clock = std::function<std::int64_t()>;
    static std::int64_t system_clock_ms();

    /// In-memory catalogue.
    explicit Catalogue(Clock clock = system_clock_ms);
    /// File-backed; the file is created when missing. Corrupt lines are skipped with a warning.
    explicit Catalogue(std::filesystem::path path, Clock clock = system_clock_ms);

    Catalogue(const Catalogue&) = delete;
    Catalogue& operator=(const Catalogue&) = delete;

    /// Latest version of every entry in creation order.
    std::vector<CatalogueEntry> snapshot() const;
    std::vector<CatalogueEntry> snapshot(Verdict v) const;
    std::optional<CatalogueEntry> get(const std::string& id) const;
    std::size_t size() const;

    /// Stores a new entry; assigns id, created_at and revision. DO entries must parse.
    CatalogueEntry add(CatalogueEntry draft);
    /// Rating >= 4: DO, score kept. 3: DO, score capped at 0.5. <= 2: DONT. Comment appended.
    /// `score`, when given, replaces the stored score before the rating rules apply. One log line.
    CatalogueEntry record_feedback(const std::string& id, const Rating& rating, const std::string& comment,
                                   std::optional<double> score = std::nullopt);
    /// Sets the score of the latest version.
    CatalogueEntry set_score(const std::string& id, double score);

    const std::vector<std::string>& load_warnings() const { return warnings_; }
    const std::optional<std::filesystem::path>& path() const { return path_; }

private:
    CatalogueEntry commit(CatalogueEntry e);  // caller holds write_mu_

    Clock clock_;
    std::optional<std::filesystem::path> path_;
    mutable std::shared_mutex view_mu_;
    std::mutex write_mu_;
    std::vector<CatalogueEntry> entries_;  // latest versions, creation order
    std::int64_t next_revision_ = 1;
    std::int64_t next_id_ = 1;
    std::vector<std::string> warnings_;
};

}  // namespace flowscribe::agent
