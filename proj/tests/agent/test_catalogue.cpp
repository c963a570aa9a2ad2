#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "doctest.h"
#include "flowscribe/agent/catalogue.hpp"

using namespace flowscribe::agent;
namespace fs = std::filesystem;

namespace {

const char* kCircle = "(objective :name \"circle\" :n 20 (term shape.curve :curve (circle :r 20)))";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("flowscribe-cat-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Catalogue::Clock ticking(std::int64_t start = 1000) {
    auto t = std::make_shared<std::atomic<std::int64_t>>(start);
    return [t] { return (*t)++; };
}

CatalogueEntry draft(const std::string& prompt, std::optional<double> score = std::nullopt) {
    CatalogueEntry e;
    e.prompt = prompt;
    e.spec_text = kCircle;
    e.score = score;
    return e;
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) ++n;
    return n;
}

}  // namespace

TEST_CASE("entries get ids, timestamps and revisions") {
    Catalogue cat(ticking());
    const auto a = cat.add(draft("a ring"));
    const auto b = cat.add(draft("another ring", 0.8));
    CHECK(a.id == "c000001");
    CHECK(b.id == "c000002");
    CHECK(a.created_at == 1000);
    CHECK(b.created_at == 1001);
    CHECK(b.revision == a.revision + 1);
    CHECK_FALSE(a.rated);
    CHECK(cat.size() == 2);
    CHECK(cat.get("c000002")->score == 0.8);
    CHECK_FALSE(cat.get("c000404"));
}

TEST_CASE("entry invariants") {
    Catalogue cat(ticking());
    auto bad = draft("x");
    bad.spec_text = "(objective)";
    CHECK_THROWS_AS(cat.add(bad), std::invalid_argument);
    bad.verdict = Verdict::DONT;
    bad.parseable = false;
    CHECK(cat.add(bad).verdict == Verdict::DONT);  // failed attempts are kept
    auto scored = draft("y", 1.5);
    CHECK_THROWS_AS(cat.add(scored), std::invalid_argument);
    auto dup = draft("z");
    dup.id = "c000001";
    CHECK_THROWS_AS(cat.add(dup), std::invalid_argument);
}

TEST_CASE("feedback rules") {
    Catalogue cat(ticking());
    const auto e = cat.add(draft("ring", 0.9));

    const auto five = cat.record_feedback(e.id, Rating::of(5), "");
    CHECK(five.verdict == Verdict::DO);
    CHECK(five.score == 0.9);
    CHECK(five.rated);
    CHECK(five.rating == 5);

    const auto three = cat.record_feedback(e.id, Rating::of(3), "a bit lopsided");
    CHECK(three.verdict == Verdict::DO);
    CHECK(three.score == 0.5);
    CHECK(three.user_feedback == "a bit lopsided");

    const auto one = cat.record_feedback(e.id, Rating::of(1), "star too small");
    CHECK(one.verdict == Verdict::DONT);
    CHECK(one.user_feedback == "a bit lopsided\nstar too small");
    CHECK(cat.get(e.id)->verdict == Verdict::DONT);

    CHECK(cat.record_feedback(e.id, Rating::of(Verdict::DO), "").verdict == Verdict::DO);
    CHECK_THROWS_AS(cat.record_feedback("c999999", Rating::of(4), ""), UnknownEntry);
    CHECK_THROWS_AS(cat.record_feedback(e.id, Rating::of(6), ""), std::invalid_argument);
    CHECK_THROWS_AS(cat.record_feedback(e.id, Rating{}, ""), std::invalid_argument);

    auto unscored = cat.add(draft("plain"));
    CHECK(cat.record_feedback(unscored.id, Rating::of(3), "").score == 0.5);
    CHECK(cat.set_score(unscored.id, 0.25).score == 0.25);
    CHECK_THROWS_AS(cat.set_score(unscored.id, -0.1), std::invalid_argument);

    const auto measured = cat.add(draft("measured"));
    CHECK(cat.record_feedback(measured.id, Rating::of(5), "", 0.8).score == 0.8);
    CHECK(cat.record_feedback(measured.id, Rating::of(3), "", 0.9).score == 0.5);
    CHECK_THROWS_AS(cat.record_feedback(measured.id, Rating::of(5), "", 1.2), std::invalid_argument);
}

TEST_CASE("the log is append-only and reloads to the latest view") {
    TempDir tmp("log");
    const auto file = tmp.path / "sub" / "catalogue.jsonl";
    std::vector<CatalogueEntry> before;
    {
        Catalogue cat(file, ticking());
        CHECK(fs::exists(file));
        const auto a = cat.add(draft("ring", 0.7));
        cat.add(draft("other"));
        cat.record_feedback(a.id, Rating::of(2), "too big");
        before = cat.snapshot();
        CHECK(line_count(file) == 3);
    }
    Catalogue again(file, ticking(5000));
    CHECK(again.load_warnings().empty());
    const auto after = again.snapshot();
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(to_json(after[i]) == to_json(before[i]));
    CHECK(after[0].verdict == Verdict::DONT);
    // numbering and revisions continue after reload
    const auto c = again.add(draft("third"));
    CHECK(c.id == "c000003");
    CHECK(c.revision == 4);
    CHECK(line_count(file) == 4);
    CHECK(again.snapshot(Verdict::DONT).size() == 1);
}

TEST_CASE("corrupt lines are skipped with their line number") {
    TempDir tmp("corrupt");
    const auto file = tmp.path / "catalogue.jsonl";
    {
        Catalogue cat(file, ticking());
        cat.add(draft("one"));
    }
    {
        std::ofstream out(file, std::ios::app);
        out << "{not json\n";
        out << "{\"id\":\"c000009\",\"prompt\":\"p\",\"spec_text\":\"(objective)\",\"verdict\":\"DO\"}\n";
    }
    {
        Catalogue cat(file, ticking());
        cat.add(draft("two"));
    }
    Catalogue cat(file, ticking());
    REQUIRE(cat.load_warnings().size() == 2);
    CHECK(cat.load_warnings()[0].find(":2:") != std::string::npos);
    CHECK(cat.load_warnings()[1].find(":3:") != std::string::npos);
    CHECK(cat.size() == 2);
}

TEST_CASE("concurrent feedback on different entries is fully persisted") {
    TempDir tmp("conc");
    const auto file = tmp.path / "catalogue.jsonl";
    std::vector<std::string> ids;
    {
        Catalogue cat(file, ticking());
        for (int i = 0; i < 40; ++i) ids.push_back(cat.add(draft("entry " + std::to_string(i))).id);
        std::vector<std::thread> workers;
        std::atomic<int> failures{0};
        std::atomic<bool> stop{false};
        std::thread reader([&] {
            while (!stop) {
                for (const auto& e : cat.snapshot())
                    if (e.id.empty()) ++failures;
            }
        });
        for (int t = 0; t < 8; ++t)
            workers.emplace_back([&, t] {
                for (std::size_t i = static_cast<std::size_t>(t); i < ids.size(); i += 8) {
                    try {
                        cat.record_feedback(ids[i], Rating::of(1 + static_cast<int>(i % 5)), "note " + std::to_string(i));
                    } catch (...) {
                        ++failures;
                    }
                }
            });
        for (auto& w : workers) w.join();
        stop = true;
        reader.join();
        CHECK(failures == 0);
    }
    CHECK(line_count(file) == 80);
    Catalogue cat(file, ticking());
    CHECK(cat.load_warnings().empty());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto e = cat.get(ids[i]);
        REQUIRE(e);
        CHECK(e->rated);
        CHECK(e->rating == 1 + static_cast<int>(i % 5));
        CHECK(e->user_feedback == "note " + std::to_string(i));
    }
}

TEST_CASE("entry JSON round trip") {
    CatalogueEntry e = draft("ring", 0.25);
    e.id = "c000042";
    e.rating = 4;
    e.rated = true;
    e.user_feedback = "nice\nround";
    e.created_at = 123;
    e.revision = 9;
    e.model_id = "m";
    e.template_version = "t";
    CHECK(to_json(entry_from_json(to_json(e))) == to_json(e));
    CHECK_THROWS(parse_verdict("MAYBE"));
}
