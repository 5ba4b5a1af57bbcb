#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support/synth.hpp"
#include "tweetscope/error.hpp"
#include "tweetscope/textnorm.hpp"

using namespace tweetscope;
using namespace tweetscope::textnorm;
using synth::cp;

TEST_CASE("Arabic letters map to Persian and tashkil is removed") {
    CHECK(normalize_text("كرونا") == "کرونا");
    CHECK(normalize_text("يك") == "یک");
    CHECK(normalize_text("بِسْمِ") == "بسم");
}

TEST_CASE("URLs, mentions, emoji and punctuation are stripped") {
    CHECK(normalize_text("سلام https://t.co/abc123 دنیا") == "سلام دنیا");
    CHECK(normalize_text("www.example.com/x?y=1 خبر") == "خبر");
    CHECK(normalize_text("@user_1 خبر") == "خبر");
    CHECK(normalize_text("خبر 😷 خوب") == "خبر خوب");
    CHECK(normalize_text("👨‍👩‍👧خانه") == "خانه");
    CHECK(normalize_text("خبر، خوب!؟") == "خبر خوب");
    CHECK(normalize_text("«نقل»") == "نقل");
}

TEST_CASE("hashtags keep their words") {
    CHECK(normalize_text("#کرونا_ویروس") == "کرونا ویروس");
    CHECK(normalize_text("#COVID19", NormalizationConfig{.strip_digits = DigitPolicy::none}) == "COVID19");
}

TEST_CASE("digit policies") {
    const std::string s = "a1 b۱ c٤";
    CHECK(normalize_text(s) == "a b c");
    NormalizationConfig ascii;
    ascii.strip_digits = DigitPolicy::ascii_only;
    CHECK(normalize_text(s, ascii) == "a b۱ c٤");
    NormalizationConfig none;
    none.strip_digits = DigitPolicy::none;
    CHECK(normalize_text(s, none) == s);
}

TEST_CASE("ZWNJ survives inside tokens") {
    const auto out = normalize_text("می" + cp(0x200C) + "خواهم  برم");
    const auto tokens = tokenize(out);
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0] == "می" + cp(0x200C) + "خواهم");
}

TEST_CASE("tokenize splits on Unicode whitespace") {
    const auto tokens = tokenize("a" + cp(0x00A0) + "b" + cp(0x3000) + "c\td");
    CHECK(tokens == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(tokenize("").empty());
}

TEST_CASE("invalid char map is rejected") {
    NormalizationConfig cfg;
    cfg.char_map.push_back({0x064A, U'x'});
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    NormalizationConfig chain;
    chain.char_map = {{U'a', U'b'}, {U'b', U'c'}};
    CHECK_THROWS_AS(chain.validate(), ConfigError);
}

TEST_CASE("stopwords are normalized on load") {
    std::istringstream in("// header\nو\nكه\n\n!!!\n");
    const auto list = StopwordList::load(in, {});
    CHECK(list.size() == 2);
    CHECK(list.contains("که"));
    std::istringstream bad("دو کلمه\n");
    CHECK_THROWS_AS(StopwordList::load(bad, {}), ConfigError);

    const auto f = remove_stopwords({"و", "که"}, list);
    CHECK(f.tokens.empty());
    CHECK(f.empty_document);
    const auto g = remove_stopwords({"و", "خانه"}, list);
    CHECK(g.tokens == std::vector<std::string>{"خانه"});
    CHECK_FALSE(g.empty_document);
}

TEST_CASE("preprocess fixture stopwords") {
    const auto list = StopwordList::load_file(synth::fixture("stopwords_fa.txt"), {});
    const auto doc = preprocess("1", "در خانه بمانید #کرونا https://t.co/x", {}, list);
    CHECK(doc.tokens == std::vector<std::string>{"خانه", "بمانید", "کرونا"});
}

TEST_CASE("normalization is idempotent and yields no empty tokens") {
    Rng rng(2020);
    const NormalizationConfig cfg;
    for (int i = 0; i < 1000; ++i) {
        const auto raw = synth::fuzz_tweet(rng);
        const auto once = normalize_text(raw, cfg);
        INFO(raw);
        CHECK(normalize_text(once, cfg) == once);
        for (const auto& t : tokenize(once)) CHECK_FALSE(t.empty());
    }
}

TEST_CASE("docs round trip through NDJSON") {
    const auto dir = synth::scratch_dir("textnorm_docs");
    std::vector<TokenizedDoc> docs{{"1", {"a", "ب"}}, {"2", {}}};
    std::ostringstream out;
    write_docs(out, docs);
    std::ofstream(dir / "d.ndjson") << out.str();
    const auto back = read_docs(dir / "d.ndjson");
    REQUIRE(back.size() == 2);
    CHECK(back[0].tokens == docs[0].tokens);
    CHECK(back[1].tokens.empty());
}
