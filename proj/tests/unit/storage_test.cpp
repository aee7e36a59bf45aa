#include "doctest.h"

#include "json.hpp"

#include "test_util.hpp"
#include "veritrail/config.hpp"
#include "veritrail/corpus.hpp"
#include "veritrail/errors.hpp"
#include "veritrail/storage.hpp"

using namespace veritrail;

TEST_CASE("chunk store round-trips documents and chunks") {
    testutil::TempDir tmp("chunkstore");

    corpus::DocumentSource doc;
    doc.doc_id = "d1";
    doc.title = "Doc One";
    doc.kind = corpus::DocKind::user_doc;
    doc.body = testutil::synthetic_tokens(50, 3);
    doc.metadata["source"] = "unit";

    storage::ChunkStore store;
    store.documents.push_back(doc);
    store.chunks = corpus::chunk_document(doc, {16, 4});

    const auto path = tmp.path() / "chunks.jsonl";
    storage::save_chunk_store(path, store);
    const auto loaded = storage::load_chunk_store(path);

    REQUIRE(loaded.documents.size() == 1);
    CHECK(loaded.documents[0].doc_id == "d1");
    CHECK(loaded.documents[0].kind == corpus::DocKind::user_doc);
    CHECK(loaded.documents[0].metadata.at("source") == "unit");
    REQUIRE(loaded.chunks.size() == store.chunks.size());
    for (std::size_t i = 0; i < store.chunks.size(); ++i) {
        CHECK(loaded.chunks[i].chunk_id == store.chunks[i].chunk_id);
        CHECK(loaded.chunks[i].text == store.chunks[i].text);
    }
}

TEST_CASE("jsonl loader reports the offending line") {
    testutil::TempDir tmp("jsonl");
    const auto path = tmp.path() / "rows.jsonl";
    testutil::write_file(path, "{\"query_id\":\"a\",\"query_str\":\"x\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(storage::load_jsonl<pipeline::QueryRecord>(path),
                         doctest::Contains(":2"), FormatError);
}

TEST_CASE("run manifest serializes round-trip") {
    storage::RunManifest m;
    m.run_id = "run-7";
    m.architecture = pipeline::Architecture::PCA;
    m.config = nlohmann::json{{"retrieval", {{"alpha", 0.75}}}};
    m.chat_model = "openai/gpt-4o";
    m.index_dir = "/tmp/idx";
    m.corpus_checksums["document"] = "abc";
    m.started_at = "1970-01-01T00:00:00Z";
    m.finished_at = "1970-01-01T00:00:00Z";
    m.document_index_queries = 44;
    m.context_index_queries = 44;
    m.n_queries = 44;
    m.failures.push_back({"q3", "timeout"});

    testutil::TempDir tmp("manifest");
    const auto path = tmp.path() / "manifest_pca.json";
    storage::save_manifest(path, m);
    const auto back = storage::load_manifest(path);

    CHECK(back.run_id == "run-7");
    CHECK(back.architecture == pipeline::Architecture::PCA);
    CHECK(back.context_index_queries == 44);
    CHECK(back.failures.size() == 1);
    CHECK(back.failures[0].query_id == "q3");
    CHECK(back.corpus_checksums.at("document") == "abc");
}

TEST_CASE("config file loading applies partial overrides") {
    testutil::TempDir tmp("config");
    const auto path = tmp.path() / "config.json";
    testutil::write_file(path, R"({
      "provider": {"chat_model": "anthropic/claude-3.5-haiku", "max_tokens": 1024,
                   "retry": {"max_attempts": 5}},
      "retrieval": {"alpha": 0.5, "reranker": "remote"}
    })");

    const auto cfg = config::load_config_file(path);
    CHECK(cfg.provider.chat_model == "anthropic/claude-3.5-haiku");
    CHECK(cfg.provider.max_tokens == 1024);
    CHECK(cfg.provider.retry.max_attempts == 5);
    CHECK(cfg.provider.embed_model == "embed-english-v3.0"); // default kept
    CHECK(cfg.retrieval.alpha == 0.5);
    CHECK(cfg.retrieval.reranker == retrieval::RerankerMode::remote);
    CHECK(cfg.retrieval.k_first == 10);

    testutil::write_file(tmp.path() / "bad.json", R"({"retrieval": {"alpha": 3.0}})");
    CHECK_THROWS_AS(config::load_config_file(tmp.path() / "bad.json"), ConfigError);
    CHECK_THROWS_AS(config::load_config_file(tmp.path() / "missing.json"), IoError);
}

TEST_CASE("config snapshot carries settings but no secret material") {
    config::AppConfig cfg;
    cfg.mock = true;
    const auto snapshot = config::config_snapshot(cfg);
    CHECK(snapshot.at("provider").at("chat_model") == "openai/gpt-4o");
    CHECK(snapshot.at("provider").contains("api_key_env")); // the name, never the value
    CHECK(snapshot.dump().find("sk-") == std::string::npos);
    CHECK(snapshot.at("mock") == true);
}

TEST_CASE("index_dir_checksum is stable and content-sensitive") {
    testutil::TempDir tmp("digest");
    testutil::write_file(tmp.path() / "a.idx", "payload one");
    testutil::write_file(tmp.path() / "b.idx", "payload two");

    const auto first = storage::index_dir_checksum(tmp.path());
    CHECK(first == storage::index_dir_checksum(tmp.path()));

    testutil::write_file(tmp.path() / "b.idx", "payload two changed");
    CHECK(first != storage::index_dir_checksum(tmp.path()));
}
