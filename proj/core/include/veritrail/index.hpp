#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "veritrail/corpus.hpp"

namespace veritrail::index {

/// Corpus statistics for BM25 scoring. Terms are lowercased tokens from the
/// corpus tokenizer.
struct LexicalIndex {
    std::size_t doc_count = 0;                                // N
    std::map<std::string, std::size_t> df;                    // term -> document frequency
    std::map<std::string, std::map<std::string, std::size_t>> tf; // chunk -> term -> count
    std::map<std::string, std::size_t> len;                   // chunk -> token count
    double avgdl = 0.0;
    double k1 = 1.2;
    double b = 0.75;
};

struct VectorIndex {
    std::size_t dim = 0;
    std::map<std::string, std::vector<float>> vectors; // chunk -> embedding
    std::string model_id;
};

enum class IndexLabel { document_index, context_index };

std::string to_string(IndexLabel label);
IndexLabel index_label_from_string(const std::string& text);

/// A lexical and a vector index built over the same chunk set.
struct IndexPair {
    IndexLabel label = IndexLabel::document_index;
    LexicalIndex lexical;
    VectorIndex vector;
    std::map<std::string, corpus::Chunk> chunks;
};

struct IndexBuildOptions {
    double k1 = 1.2;
    double b = 0.75;
    std::string model_id;
};

/// Builds both sub-indices over a chunk set. Every chunk needs an embedding
/// of uniform dimensionality; the result is independent of chunk order.
IndexPair build_indices(const std::vector<corpus::Chunk>& chunks,
                        const std::map<std::string, std::vector<float>>& embeddings,
                        IndexLabel label, const IndexBuildOptions& opts = {});

/// a.b / (|a||b|), accumulated in double. A zero vector scores 0 (degenerate).
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Okapi BM25 with the non-negative IDF variant
/// IDF(t) = ln((N - df + 0.5)/(df + 0.5) + 1). Repeated query terms
/// contribute once per occurrence. Query terms must be tokenized and
/// lowercased identically to indexing (see corpus::term_tokens).
double bm25_score(const std::vector<std::string>& query_terms, const std::string& chunk_id,
                  const LexicalIndex& idx);

/// Persists an IndexPair into a directory as lexical.idx, vectors.idx,
/// chunks.idx and meta.json. load(persist(x)) is score-identical to x:
/// statistics and vectors round-trip bit-exactly. Files are versioned and
/// checksummed.
void persist(const IndexPair& idx, const std::filesystem::path& dir);
IndexPair load(const std::filesystem::path& dir);

} // namespace veritrail::index
