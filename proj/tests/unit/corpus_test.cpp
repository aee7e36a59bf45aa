#include "doctest.h"

#include <random>

#include "json.hpp"

#include "oracles.hpp"
#include "test_util.hpp"
#include "veritrail/corpus.hpp"
#include "veritrail/errors.hpp"

using namespace veritrail;
using corpus::Chunk;
using corpus::ChunkingConfig;
using corpus::DocumentSource;

namespace {

DocumentSource make_doc(const std::string& id, std::string body,
                        corpus::DocKind kind = corpus::DocKind::user_doc) {
    DocumentSource d;
    d.doc_id = id;
    d.title = id;
    d.kind = kind;
    d.body = std::move(body);
    return d;
}

} // namespace

TEST_CASE("tokenize splits word runs and single punctuation") {
    const auto tokens = corpus::tokenize("Zone A-1.");
    std::vector<std::string> texts;
    for (const auto& t : tokens)
        texts.push_back(t.text);
    CHECK(texts == std::vector<std::string>{"Zone", "A", "-", "1", "."});
}

TEST_CASE("tokenize of empty input is empty") {
    CHECK(corpus::tokenize("").empty());
    CHECK(corpus::tokenize(" \t\n").empty());
}

TEST_CASE("tokenize is deterministic and offset-exact") {
    std::mt19937_64 gen(42);
    const std::string alphabet = "abZ19._,;-()! \t\n\xc3\xa9"; // includes a UTF-8 e-acute
    for (int round = 0; round < 50; ++round) {
        std::string text;
        const std::size_t len = gen() % 200;
        while (text.size() < len)
            text += alphabet[gen() % alphabet.size()];

        const auto a = corpus::tokenize(text);
        const auto b = corpus::tokenize(text);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].text == b[i].text);
            CHECK(a[i].char_start == b[i].char_start);
            // token text is exactly the substring at its recorded offsets
            CHECK(a[i].text == text.substr(a[i].char_start, a[i].char_end - a[i].char_start));
            if (i > 0)
                CHECK(a[i].char_start >= a[i - 1].char_end);
            // gaps between tokens are whitespace only
        }
        // reconstruct: tokens plus skipped whitespace give back the input
        std::string rebuilt;
        std::size_t pos = 0;
        for (const auto& t : a) {
            rebuilt += text.substr(pos, t.char_start - pos);
            rebuilt += t.text;
            pos = t.char_end;
        }
        rebuilt += text.substr(pos);
        CHECK(rebuilt == text);
    }
}

TEST_CASE("chunk_document windows match the closed-form oracle") {
    const auto doc = make_doc("d", testutil::synthetic_tokens(2068, 7));
    const auto chunks = corpus::chunk_document(doc, {1024, 20});

    // frozen from the independent sliding-window oracle
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].token_start == 0);
    CHECK(chunks[0].token_end == 1024);
    CHECK(chunks[1].token_start == 1004);
    CHECK(chunks[1].token_end == 2028);
    CHECK(chunks[2].token_start == 2008);
    CHECK(chunks[2].token_end == 2068);

    const auto expected = oracle::token_windows(2068, 1024, 20);
    REQUIRE(chunks.size() == expected.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].token_start == expected[i].first);
        CHECK(chunks[i].token_end == expected[i].second);
    }
}

TEST_CASE("chunk_document sub-window and exact-fit documents") {
    const auto small = corpus::chunk_document(make_doc("s", testutil::synthetic_tokens(500, 1)),
                                              {1024, 20});
    REQUIRE(small.size() == 1);
    CHECK(small[0].token_start == 0);
    CHECK(small[0].token_end == 500);

    const auto exact = corpus::chunk_document(make_doc("e", testutil::synthetic_tokens(1024, 2)),
                                              {1024, 20});
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].token_end == 1024);

    // one past the boundary spills into a second, truncated window
    const auto spill = corpus::chunk_document(make_doc("o", testutil::synthetic_tokens(1025, 3)),
                                              {1024, 20});
    REQUIRE(spill.size() == 2);
    CHECK(spill[1].token_start == 1004);
    CHECK(spill[1].token_end == 1025);
}

TEST_CASE("chunk_document rejects bad configs and empty token streams") {
    const auto doc = make_doc("d", "some body");
    CHECK_THROWS_AS(corpus::chunk_document(doc, {100, 100}), ConfigError);
    CHECK_THROWS_AS(corpus::chunk_document(doc, {100, 200}), ConfigError);
    CHECK_THROWS_AS(corpus::chunk_document(make_doc("ws", "   \n\t  ")), IoError);
}

TEST_CASE("chunk invariants hold over random document lengths") {
    std::mt19937_64 gen(2024);
    const ChunkingConfig cfg{256, 16}; // scaled down for speed; same arithmetic
    for (int round = 0; round < 60; ++round) {
        const std::size_t n = 1 + gen() % 1200;
        const auto doc = make_doc("r" + std::to_string(round),
                                  testutil::synthetic_tokens(n, gen()));
        const auto chunks = corpus::chunk_document(doc, cfg);

        std::vector<bool> covered(n, false);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const Chunk& c = chunks[i];
            CHECK(c.token_count == c.token_end - c.token_start);
            CHECK(c.token_count > 0);
            CHECK(c.token_count <= cfg.chunk_size);
            CHECK(c.chunk_id == doc.doc_id + "#" + std::to_string(i));
            // round-trip through recorded character offsets
            CHECK(c.text == doc.body.substr(c.char_start, c.char_end - c.char_start));
            if (i + 1 < chunks.size())
                CHECK(chunks[i + 1].token_start ==
                      c.token_start + (cfg.chunk_size - cfg.overlap));
            for (std::size_t t = c.token_start; t < c.token_end; ++t)
                covered[t] = true;
        }
        for (std::size_t t = 0; t < n; ++t)
            CHECK(covered[t]);

        const auto again = corpus::chunk_document(doc, cfg);
        REQUIRE(again.size() == chunks.size());
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            CHECK(again[i].chunk_id == chunks[i].chunk_id);
            CHECK(again[i].text == chunks[i].text);
        }
    }
}

TEST_CASE("load_manifest preserves order and resolves body_path") {
    testutil::TempDir tmp("manifest");
    testutil::write_file(tmp.path() / "body_b.txt", "Body file contents for B.");
    testutil::write_file(tmp.path() / "manifest.json", R"([
      {"doc_id": "A", "title": "Doc A", "kind": "user_doc", "body": "Inline body A.",
       "metadata": {"origin": "test"}},
      {"doc_id": "B", "title": "Doc B", "kind": "standard", "body_path": "body_b.txt"}
    ])");

    const auto docs = corpus::load_manifest(tmp.path() / "manifest.json");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].doc_id == "A");
    CHECK(docs[0].kind == corpus::DocKind::user_doc);
    CHECK(docs[0].metadata.at("origin") == "test");
    CHECK(docs[1].doc_id == "B");
    CHECK(docs[1].kind == corpus::DocKind::standard);
    CHECK(docs[1].body == "Body file contents for B.");
}

TEST_CASE("load_manifest rejects duplicates, empty bodies and missing files") {
    testutil::TempDir tmp("manifest_bad");

    testutil::write_file(tmp.path() / "dup.json", R"([
      {"doc_id": "A", "kind": "user_doc", "body": "x"},
      {"doc_id": "A", "kind": "user_doc", "body": "y"}
    ])");
    CHECK_THROWS_WITH_AS(corpus::load_manifest(tmp.path() / "dup.json"),
                         doctest::Contains("\"A\""), IoError);

    testutil::write_file(tmp.path() / "empty.json",
                         R"([{"doc_id": "E", "kind": "user_doc", "body": ""}])");
    CHECK_THROWS_WITH_AS(corpus::load_manifest(tmp.path() / "empty.json"),
                         doctest::Contains("\"E\""), IoError);

    testutil::write_file(tmp.path() / "missing.json",
                         R"([{"doc_id": "M", "kind": "user_doc", "body_path": "nope.txt"}])");
    CHECK_THROWS_WITH_AS(corpus::load_manifest(tmp.path() / "missing.json"),
                         doctest::Contains("nope.txt"), IoError);

    CHECK_THROWS_AS(corpus::load_manifest(tmp.path() / "does_not_exist.json"), IoError);
}

TEST_CASE("chunks serialize round-trip") {
    const auto doc = make_doc("j", testutil::synthetic_tokens(40, 5));
    const auto chunks = corpus::chunk_document(doc, {16, 4});
    for (const auto& c : chunks) {
        const nlohmann::json j = c;
        const auto back = j.get<Chunk>();
        CHECK(back.chunk_id == c.chunk_id);
        CHECK(back.text == c.text);
        CHECK(back.token_start == c.token_start);
        CHECK(back.char_end == c.char_end);
    }
}
