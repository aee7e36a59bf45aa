// Acceptance suite: one criterion per function, one pass/fail line each.
// Run with no arguments for all criteria, or with a criterion number.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "oracles.hpp"
#include "test_util.hpp"
#include "veritrail/corpus.hpp"
#include "veritrail/errors.hpp"
#include "veritrail/eval.hpp"
#include "veritrail/index.hpp"
#include "veritrail/pipeline.hpp"
#include "veritrail/prompts.hpp"
#include "veritrail/providers.hpp"
#include "veritrail/retrieval.hpp"
#include "veritrail/storage.hpp"

using namespace veritrail;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

double elapsed_s(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool close(double value, double target, double tolerance) {
    return std::abs(value - target) <= tolerance;
}

// ---------------------------------------------------------------------------
// 1. Score reproduction over the fixture bar counts.
// ---------------------------------------------------------------------------

Check criterion_1() {
    Check c;
    const auto start = std::chrono::steady_clock::now();

    c.expect(close(eval::score_correctness({19, 17, 6}), 0.65, 0.01), "BCA correctness");
    c.expect(close(eval::score_reasoning({2, 14, 26}), 0.21, 0.01), "BCA reasoning");
    c.expect(close(eval::score_correctness({27, 9, 6}), 0.75, 0.01), "PCA1 correctness");
    c.expect(close(eval::score_reasoning({26, 12, 4}), 0.76, 0.01), "PCA1 reasoning");
    c.expect(close(eval::score_correctness({27, 10, 5}), 0.77, 0.02),
             "PCA2 correctness (flagged, wider tolerance)");
    c.expect(close(eval::score_reasoning({14, 17, 11}), 0.53, 0.01), "PCA2 reasoning");

    c.expect(elapsed_s(start) < 1.0, "runtime exceeded 1 s");
    return c;
}

// ---------------------------------------------------------------------------
// 2. Hallucination rates.
// ---------------------------------------------------------------------------

Check criterion_2() {
    Check c;
    auto rate_of = [](std::size_t hallucinated, std::size_t total) {
        std::vector<eval::JudgeVerdict> verdicts;
        for (std::size_t i = 0; i < total; ++i)
            verdicts.push_back({"q" + std::to_string(i),
                                i < hallucinated ? eval::Verdict::hallucinated
                                                 : eval::Verdict::factual,
                                "", "judge"});
        return eval::hallucination_rate(verdicts);
    };
    c.expect(close(rate_of(1, 44), 0.023, 0.001), "1/44");
    c.expect(close(rate_of(10, 44), 0.227, 0.001), "10/44");
    c.expect(close(rate_of(6, 44), 0.136, 0.001), "6/44");
    return c;
}

// ---------------------------------------------------------------------------
// 3. Stage-1 ordering equals the brute-force fused ranking, tie-breaks
//    included, on >= 50 randomized corpora.
// ---------------------------------------------------------------------------

Check criterion_3() {
    Check c;
    const auto start = std::chrono::steady_clock::now();

    constexpr std::size_t kDim = 24;
    providers::MockEmbeddingClient embedder(kDim);
    retrieval::RetrievalConfig cfg; // alpha 0.75, k_first 10

    for (std::uint64_t seed = 1; seed <= 50 && c.ok; ++seed) {
        std::mt19937_64 gen(seed * 7919);
        const std::size_t n_chunks = 5 + gen() % 196; // up to 200

        std::vector<corpus::Chunk> chunks;
        std::map<std::string, std::vector<float>> embeddings;
        for (std::size_t i = 0; i < n_chunks; ++i) {
            corpus::Chunk chunk;
            chunk.doc_id = "syn";
            chunk.seq = i;
            chunk.chunk_id = "syn#" + std::to_string(i);
            chunk.text = testutil::synthetic_tokens(3 + gen() % 40, gen());
            chunk.token_count = corpus::tokenize(chunk.text).size();
            chunk.token_end = chunk.token_count;
            chunk.char_end = chunk.text.size();
            embeddings[chunk.chunk_id] = embedder.embed({chunk.text}).front();
            chunks.push_back(std::move(chunk));
        }
        const auto pair =
            index::build_indices(chunks, embeddings, index::IndexLabel::document_index);

        oracle::BruteForceInput brute;
        for (const auto& [id, chunk] : pair.chunks) {
            brute.ids.push_back(id);
            brute.term_docs.push_back(corpus::term_tokens(chunk.text));
            brute.embeddings.push_back(pair.vector.vectors.at(id));
        }

        const std::string query = testutil::synthetic_tokens(2 + gen() % 5, gen());
        const auto query_vec = embedder.embed({query}).front();

        const auto cands = retrieval::retrieve_stage1(query, query_vec, pair, cfg);
        const auto expected = oracle::brute_force_ranking(brute, corpus::term_tokens(query),
                                                          query_vec, cfg.alpha, 1.2, 0.75,
                                                          cfg.k_first);
        c.expect(cands.size() == expected.size(),
                 "size mismatch on seed " + std::to_string(seed));
        for (std::size_t i = 0; i < cands.size() && c.ok; ++i)
            c.expect(cands[i].chunk_id == expected[i],
                     "order mismatch at position " + std::to_string(i) + " on seed " +
                         std::to_string(seed) + ": " + cands[i].chunk_id + " vs " + expected[i]);
    }

    c.expect(elapsed_s(start) < 30.0, "runtime exceeded 30 s");
    return c;
}

// ---------------------------------------------------------------------------
// 4. BM25 on the toy fixture matches an independently coded reference.
// ---------------------------------------------------------------------------

Check criterion_4() {
    Check c;

    const std::vector<std::string> texts{"cat sat", "dog sat", "cat cat dog"};
    std::vector<corpus::Chunk> chunks;
    std::map<std::string, std::vector<float>> embeddings;
    providers::MockEmbeddingClient embedder(8);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        corpus::Chunk chunk;
        chunk.doc_id = "toy";
        chunk.seq = i;
        chunk.chunk_id = "toy#" + std::to_string(i);
        chunk.text = texts[i];
        chunk.token_count = corpus::tokenize(texts[i]).size();
        chunk.token_end = chunk.token_count;
        chunk.char_end = texts[i].size();
        embeddings[chunk.chunk_id] = embedder.embed({texts[i]}).front();
        chunks.push_back(std::move(chunk));
    }
    const auto pair = index::build_indices(chunks, embeddings, index::IndexLabel::document_index,
                                           {1.2, 0.75, ""});

    std::vector<std::vector<std::string>> term_docs;
    for (const auto& t : texts)
        term_docs.push_back(corpus::term_tokens(t));

    for (const auto& query : std::vector<std::vector<std::string>>{
             {"cat"}, {"dog"}, {"sat"}, {"cat", "sat"}, {"cat", "dog", "sat"}}) {
        const auto expected = oracle::reference_bm25(term_docs, query, 1.2, 0.75);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const double got =
                index::bm25_score(query, "toy#" + std::to_string(i), pair.lexical);
            c.expect(std::abs(got - expected[i]) <= 1e-6,
                     "mismatch on doc " + std::to_string(i) + ": " + std::to_string(got) +
                         " vs " + std::to_string(expected[i]));
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 5. Chunking property suite at size 1024 / overlap 20.
// ---------------------------------------------------------------------------

Check criterion_5() {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    const corpus::ChunkingConfig cfg{1024, 20};

    std::mt19937_64 gen(424242);
    std::vector<std::size_t> lengths{1, 2, 20, 1023, 1024, 1025, 2048, 2068, 5000};
    for (int i = 0; i < 80; ++i)
        lengths.push_back(1 + gen() % 5000);

    for (const std::size_t n : lengths) {
        corpus::DocumentSource doc;
        doc.doc_id = "p" + std::to_string(n);
        doc.body = testutil::synthetic_tokens(n, n);
        const auto chunks = corpus::chunk_document(doc, cfg);
        const auto expected = oracle::token_windows(n, cfg.chunk_size, cfg.overlap);

        c.expect(chunks.size() == expected.size(), "window count for n=" + std::to_string(n));
        if (!c.ok)
            break;

        std::vector<bool> covered(n, false);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            c.expect(chunks[i].token_start == expected[i].first &&
                         chunks[i].token_end == expected[i].second,
                     "window bounds for n=" + std::to_string(n));
            if (i + 1 < chunks.size()) {
                // stride 1004 start-to-start; 20 tokens shared with the next window
                c.expect(chunks[i + 1].token_start == chunks[i].token_start + 1004,
                         "stride for n=" + std::to_string(n));
                c.expect(chunks[i].token_end - chunks[i + 1].token_start == 20,
                         "overlap for n=" + std::to_string(n));
            }
            for (std::size_t t = chunks[i].token_start; t < chunks[i].token_end; ++t)
                covered[t] = true;
        }
        for (std::size_t t = 0; t < n && c.ok; ++t)
            c.expect(covered[t], "coverage gap at token " + std::to_string(t));

        const auto again = corpus::chunk_document(doc, cfg);
        c.expect(again.size() == chunks.size(), "determinism for n=" + std::to_string(n));
        for (std::size_t i = 0; i < chunks.size() && c.ok; ++i)
            c.expect(again[i].chunk_id == chunks[i].chunk_id &&
                         again[i].text == chunks[i].text,
                     "determinism for n=" + std::to_string(n));
        if (!c.ok)
            break;
    }

    c.expect(elapsed_s(start) < 5.0, "runtime exceeded 5 s");
    return c;
}

// ---------------------------------------------------------------------------
// 6. Prompt fidelity against the fixture transcriptions.
// ---------------------------------------------------------------------------

Check criterion_6() {
    Check c;
    const auto dir = testutil::fixtures_dir() / "prompts";

    const auto bca = pipeline::render_bca("<<query>>", "<<user_docs>>");
    c.expect(bca.system == testutil::read_file(dir / "bca_system.txt"),
             "BCA system prompt differs from fixture");
    c.expect(bca.user == testutil::read_file(dir / "bca_user.txt"),
             "BCA user prompt differs from fixture");

    const auto pca = pipeline::render_pca("<<query>>", "<<user_docs>>", "<<context>>");
    c.expect(pca.system == testutil::read_file(dir / "pca_system.txt"),
             "PCA system prompt differs from fixture");
    c.expect(pca.user == testutil::read_file(dir / "pca_user.txt"),
             "PCA user prompt differs from fixture");
    return c;
}

// ---------------------------------------------------------------------------
// 7. End-to-end mock CLI sequence: offline, deterministic, BCA never touches
//    the context index.
// ---------------------------------------------------------------------------

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_command(const std::string& command, const std::filesystem::path& log) {
    const std::string full = command + " >" + log.string() + " 2>&1";
    const int raw = std::system(full.c_str());
    CommandResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.output = testutil::read_file(log);
    return result;
}

std::string cli_binary() {
    if (const char* env = std::getenv("VERITRAIL_CLI"))
        return env;
    return "./tools/veritrail"; // best effort when run from the build dir
}

Check criterion_7() {
    Check c;
    const auto start = std::chrono::steady_clock::now();

    const std::string cli = cli_binary();
    const auto fixtures = testutil::fixtures_dir() / "corpus";

    auto sequence = [&](const std::filesystem::path& sandbox) -> bool {
        const auto log = sandbox / "cmd.log";
        auto run_step = [&](const std::string& args, const std::string& step) {
            const auto result = run_command(cli + " " + args, log);
            c.expect(result.exit_code == 0,
                     step + " exited " + std::to_string(result.exit_code) + ": " +
                         result.output.substr(0, 200));
            return result.exit_code == 0;
        };

        const std::string chunks = (sandbox / "chunks.jsonl").string();
        const std::string indices = (sandbox / "indices").string();
        const std::string runs = (sandbox / "runs").string();
        const std::string queries = (fixtures / "queries.jsonl").string();

        return run_step("ingest --manifest " + (fixtures / "manifest.json").string() + " --out " +
                            chunks + " --chunk-size 200 --overlap 20",
                        "ingest") &&
               run_step("index --chunks " + chunks + " --out " + indices + " --mock", "index") &&
               run_step("run --index-dir " + indices + " --arch bca --queries " + queries +
                            " --run-id demo --runs-dir " + runs + " --mock",
                        "run bca") &&
               run_step("run --index-dir " + indices + " --arch pca --queries " + queries +
                            " --run-id demo --runs-dir " + runs + " --mock",
                        "run pca") &&
               run_step("judge --run-id demo --runs-dir " + runs + " --mock", "judge") &&
               run_step("report --runs-dir " + runs, "report");
    };

    testutil::TempDir sandbox_a("e2e_a");
    testutil::TempDir sandbox_b("e2e_b");
    if (!sequence(sandbox_a.path()))
        return c;
    if (!sequence(sandbox_b.path()))
        return c;

    // determinism: artifact bytes are identical across the two sequences
    for (const std::string rel :
         {"chunks.jsonl", "runs/demo/responses_bca.jsonl", "runs/demo/responses_pca.jsonl",
          "runs/demo/verdicts_bca.jsonl", "runs/demo/verdicts_pca.jsonl", "runs/report.json",
          "runs/report.md"}) {
        const auto a = testutil::read_file(sandbox_a.path() / rel);
        const auto b = testutil::read_file(sandbox_b.path() / rel);
        c.expect(!a.empty(), rel + " is empty");
        c.expect(a == b, rel + " differs between identical runs");
    }

    // the BCA run provably never touched the context index
    const auto bca_manifest =
        storage::load_manifest(sandbox_a.path() / "runs/demo/manifest_bca.json");
    c.expect(bca_manifest.context_index_queries == 0,
             "BCA run recorded " + std::to_string(bca_manifest.context_index_queries) +
                 " context index queries");
    c.expect(bca_manifest.document_index_queries > 0, "BCA run recorded no document queries");
    const auto pca_manifest =
        storage::load_manifest(sandbox_a.path() / "runs/demo/manifest_pca.json");
    c.expect(pca_manifest.context_index_queries == pca_manifest.document_index_queries,
             "PCA run did not query both indices equally");

    // transparency: query prints the chunk ids it rendered into the prompt
    {
        const auto log = sandbox_a.path() / "query.log";
        const auto result = run_command(cli + " query --index-dir " +
                                            (sandbox_a.path() / "indices").string() +
                                            " --arch bca --mock --question \"Is there a zone "
                                            "model?\"",
                                        log);
        c.expect(result.exit_code == 0, "query exited nonzero");
        c.expect(result.output.find("cited document chunks:") != std::string::npos &&
                     result.output.find("#") != std::string::npos,
                 "query did not print the cited chunk ids");
    }

    // a PCA run without a standards index names the missing index
    {
        testutil::write_file(sandbox_a.path() / "userdocs_only.json",
                             R"([{"doc_id": "only", "title": "Only", "kind": "user_doc",
                                  "body": "A lone user document about backup verification."}])");
        const auto log = sandbox_a.path() / "noctx.log";
        const std::string chunks2 = (sandbox_a.path() / "chunks2.jsonl").string();
        const std::string indices2 = (sandbox_a.path() / "indices2").string();
        run_command(cli + " ingest --manifest " + (sandbox_a.path() / "userdocs_only.json").string() +
                        " --out " + chunks2,
                    log);
        run_command(cli + " index --chunks " + chunks2 + " --out " + indices2 + " --mock", log);
        const auto result = run_command(cli + " run --index-dir " + indices2 +
                                            " --arch pca --queries " +
                                            (fixtures / "queries.jsonl").string() +
                                            " --run-id noctx --runs-dir " +
                                            (sandbox_a.path() / "runs2").string() + " --mock",
                                        log);
        c.expect(result.exit_code != 0, "PCA run without a context index must fail");
        c.expect(result.output.find("context") != std::string::npos,
                 "error does not name the missing context index");
    }

    c.expect(elapsed_s(start) < 60.0, "runtime exceeded 60 s");
    return c;
}

// ---------------------------------------------------------------------------
// 8. Index persistence round-trip: identical top-K before and after.
// ---------------------------------------------------------------------------

Check criterion_8() {
    Check c;

    constexpr std::size_t kDim = 16;
    providers::MockEmbeddingClient embedder(kDim);
    std::mt19937_64 gen(20240601);

    std::vector<corpus::Chunk> chunks;
    std::map<std::string, std::vector<float>> embeddings;
    for (std::size_t i = 0; i < 80; ++i) {
        corpus::Chunk chunk;
        chunk.doc_id = "rt";
        chunk.seq = i;
        chunk.chunk_id = "rt#" + std::to_string(i);
        chunk.text = testutil::synthetic_tokens(5 + gen() % 30, gen());
        chunk.token_count = corpus::tokenize(chunk.text).size();
        chunk.token_end = chunk.token_count;
        chunk.char_end = chunk.text.size();
        embeddings[chunk.chunk_id] = embedder.embed({chunk.text}).front();
        chunks.push_back(std::move(chunk));
    }
    const auto original = index::build_indices(chunks, embeddings,
                                               index::IndexLabel::document_index,
                                               {1.2, 0.75, "mock-embed"});

    testutil::TempDir tmp("roundtrip");
    index::persist(original, tmp.path());
    const auto loaded = index::load(tmp.path());

    retrieval::RetrievalConfig cfg;
    for (int q = 0; q < 10; ++q) {
        const std::string query = testutil::synthetic_tokens(3 + gen() % 4, gen());
        const auto query_vec = embedder.embed({query}).front();
        const auto before = retrieval::retrieve_stage1(query, query_vec, original, cfg);
        const auto after = retrieval::retrieve_stage1(query, query_vec, loaded, cfg);

        c.expect(before.size() == after.size(), "top-K size changed after round-trip");
        for (std::size_t i = 0; i < before.size() && c.ok; ++i) {
            c.expect(before[i].chunk_id == after[i].chunk_id,
                     "top-K order changed at " + std::to_string(i));
            c.expect(before[i].fused == after[i].fused, "fused score changed after round-trip");
        }
    }
    return c;
}

const std::vector<std::pair<std::string, std::function<Check()>>> kCriteria = {
    {"score reproduction over fixture counts", criterion_1},
    {"hallucination rates", criterion_2},
    {"stage-1 retrieval equals brute-force fused ranking", criterion_3},
    {"BM25 matches independent reference on toy fixture", criterion_4},
    {"chunking properties at 1024/20", criterion_5},
    {"prompt fidelity against figure transcriptions", criterion_6},
    {"end-to-end mock CLI run", criterion_7},
    {"index persistence round-trip", criterion_8},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i)
            selected.push_back(std::atoi(argv[i]));
    } else {
        for (std::size_t i = 1; i <= kCriteria.size(); ++i)
            selected.push_back(static_cast<int>(i));
    }

    int failures = 0;
    for (const int n : selected) {
        if (n < 1 || n > static_cast<int>(kCriteria.size())) {
            std::cerr << "unknown criterion " << n << "\n";
            return 2;
        }
        const auto& [name, fn] = kCriteria[static_cast<std::size_t>(n - 1)];
        Check result;
        try {
            result = fn();
        } catch (const std::exception& e) {
            result.ok = false;
            result.detail = std::string("exception: ") + e.what();
        }
        if (result.ok) {
            std::cout << "[PASS] criterion " << n << ": " << name << "\n";
        } else {
            std::cout << "[FAIL] criterion " << n << ": " << name << ": " << result.detail
                      << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
