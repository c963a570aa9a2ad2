#include "doctest.h"
#include "flowscribe/dsl/parser.hpp"

using namespace flowscribe::dsl;

TEST_CASE("single tagged block") {
    const std::string t = "Here you go:\n```objective-dsl\n(objective (term spacing.repel :d0 1))\n```\nEnjoy.";
    CHECK(extract_fenced(t) == "(objective (term spacing.repel :d0 1))\n");
}

TEST_CASE("tagged block wins over an earlier untagged one") {
    const std::string t = "For example:\n```\n(untagged)\n```\nFinal:\n```objective-dsl\n(tagged)\n```\n";
    CHECK(extract_fenced(t) == "(tagged)\n");
}

TEST_CASE("last untagged block when nothing is tagged") {
    const std::string t = "```lisp\n(first)\n```\ntext\n```\n(second)\n```";
    CHECK(extract_fenced(t) == "(second)\n");
}

TEST_CASE("prose only is an extraction error") {
    CHECK_THROWS_AS(extract_fenced("I would arrange them in a circle."), ExtractionError);
    CHECK_THROWS_AS(extract_fenced(""), ExtractionError);
}

TEST_CASE("extraction is pure") {
    const std::string t = "a\n```objective-dsl\n(x)\n```\n```objective-dsl\n(y)\n```\n";
    CHECK(extract_fenced(t) == extract_fenced(t));
    CHECK(extract_fenced(t) == "(x)\n");
}

TEST_CASE("unterminated block runs to the end of the transcript") {
    CHECK(extract_fenced("```objective-dsl\n(objective\n") == "(objective\n");
}
