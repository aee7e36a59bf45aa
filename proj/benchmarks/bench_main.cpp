#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "veritrail/corpus.hpp"
#include "veritrail/index.hpp"
#include "veritrail/pipeline.hpp"
#include "veritrail/providers.hpp"
#include "veritrail/retrieval.hpp"

using namespace veritrail;

namespace {

std::string synthetic_text(std::size_t n_tokens, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::string out;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        if (i > 0)
            out += ' ';
        out += 'w' + std::to_string(gen() % 999);
    }
    return out;
}

struct BenchCorpus {
    index::IndexPair pair;
    std::vector<float> query_vec;
    std::string query;
};

BenchCorpus build_corpus(std::size_t n_chunks, std::size_t dim = 64) {
    providers::MockEmbeddingClient embedder(dim);
    std::mt19937_64 gen(n_chunks);

    std::vector<corpus::Chunk> chunks;
    std::map<std::string, std::vector<float>> embeddings;
    for (std::size_t i = 0; i < n_chunks; ++i) {
        corpus::Chunk c;
        c.doc_id = "b";
        c.seq = i;
        c.chunk_id = "b#" + std::to_string(i);
        c.text = synthetic_text(40 + gen() % 80, gen());
        c.token_count = corpus::tokenize(c.text).size();
        c.token_end = c.token_count;
        c.char_end = c.text.size();
        embeddings[c.chunk_id] = embedder.embed({c.text}).front();
        chunks.push_back(std::move(c));
    }

    BenchCorpus bc{index::build_indices(chunks, embeddings, index::IndexLabel::document_index),
                   {},
                   synthetic_text(6, 42)};
    bc.query_vec = embedder.embed({bc.query}).front();
    return bc;
}

void BM_Tokenize(benchmark::State& state) {
    const std::string text = synthetic_text(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(corpus::tokenize(text));
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(1 << 10)->Arg(1 << 13)->Arg(1 << 16);

void BM_ChunkDocument(benchmark::State& state) {
    corpus::DocumentSource doc;
    doc.doc_id = "bench";
    doc.body = synthetic_text(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(corpus::chunk_document(doc, {1024, 20}));
}
BENCHMARK(BM_ChunkDocument)->Arg(1 << 12)->Arg(1 << 15);

void BM_Bm25Score(benchmark::State& state) {
    const auto bc = build_corpus(static_cast<std::size_t>(state.range(0)));
    const auto terms = corpus::term_tokens(bc.query);
    std::size_t i = 0;
    std::vector<std::string> ids;
    for (const auto& [id, _] : bc.pair.chunks)
        ids.push_back(id);
    for (auto _ : state) {
        benchmark::DoNotOptimize(index::bm25_score(terms, ids[i % ids.size()], bc.pair.lexical));
        ++i;
    }
}
BENCHMARK(BM_Bm25Score)->Arg(1000);

void BM_RetrieveStage1(benchmark::State& state) {
    const auto bc = build_corpus(static_cast<std::size_t>(state.range(0)));
    const retrieval::RetrievalConfig cfg;
    for (auto _ : state)
        benchmark::DoNotOptimize(retrieval::retrieve_stage1(bc.query, bc.query_vec, bc.pair, cfg));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RetrieveStage1)->Arg(100)->Arg(1000)->Arg(5000);

void BM_RenderPca(benchmark::State& state) {
    const std::string doc_block = "[d#0]\n" + synthetic_text(1024, 3);
    const std::string ctx_block = "[s#0]\n" + synthetic_text(1024, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(pipeline::render_pca("A question?", doc_block, ctx_block));
}
BENCHMARK(BM_RenderPca);

} // namespace

BENCHMARK_MAIN();
