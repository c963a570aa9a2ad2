#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "flowscribe/dsl/parser.hpp"

using namespace flowscribe::dsl;
namespace fs = std::filesystem;

namespace {

std::vector<std::pair<std::string, std::string>> corpus() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::directory_iterator(FLOWSCRIBE_SPECS_DIR)) {
        if (e.path().extension() != ".dsl") continue;
        std::ifstream in(e.path());
        std::stringstream ss;
        ss << in.rdbuf();
        out.emplace_back(e.path().filename().string(), ss.str());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("golden corpus round-trips through the canonical printer") {
    auto files = corpus();
    REQUIRE(files.size() >= 20);
    for (const auto& [name, text] : files) {
        CAPTURE(name);
        auto first = parse(text);
        REQUIRE_MESSAGE(first.ok(), (first.diagnostics.empty() ? "" : first.diagnostics[0].message));
        const std::string canon = print_canonical(*first.spec);
        auto second = parse(canon);
        REQUIRE(second.ok());
        CHECK(structurally_equal(*first.spec, *second.spec));
        CHECK(print_canonical(*second.spec) == canon);
    }
}

TEST_CASE("canonical print is deterministic and key-order independent") {
    const std::string a =
        "(objective :name \"c\" (term shape.curve :curve (circle :r 20 :center [1 2]) :weight 1 :samples 64))";
    const std::string b =
        "(objective (term shape.curve :samples 64 :weight 1 :curve (circle :center [1 2] :r 20)) :name \"c\")";
    auto pa = parse(a);
    auto pb = parse(b);
    REQUIRE(pa.ok());
    REQUIRE(pb.ok());
    CHECK(print_canonical(*pa.spec) == print_canonical(*pa.spec));
    CHECK(print_canonical(*pa.spec) == print_canonical(*pb.spec));
    CHECK(structurally_equal(*pa.spec, *pb.spec));
}

TEST_CASE("floats print with round-trip-exact formatting") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        auto r = parse("(objective (term anchor.center :point [" + format_number(v) + " 0]))");
        REQUIRE(r.ok());
        CHECK(r.spec->terms[0].param("point")->list().items[0].number() == v);
    }
}

TEST_CASE("json export carries one object per term") {
    auto r = parse("(objective :name \"j\" (term shape.curve :curve (circle :r 2)) (term spacing.repel :d0 1 :weight 0.5))");
    REQUIRE(r.ok());
    auto j = to_json(*r.spec);
    REQUIRE(j["terms"].size() == 2);
    CHECK(j["terms"][0]["kind"] == "shape.curve");
    CHECK(j["terms"][0]["params"]["curve"]["form"] == "circle");
    CHECK(j["terms"][1]["weight"] == 0.5);
}
