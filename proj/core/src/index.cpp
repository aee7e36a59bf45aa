#include "veritrail/index.hpp"

#include <cmath>
#include <set>

#include "veritrail/errors.hpp"

namespace veritrail::index {

std::string to_string(IndexLabel label) {
    return label == IndexLabel::document_index ? "document_index" : "context_index";
}

IndexLabel index_label_from_string(const std::string& text) {
    if (text == "document_index")
        return IndexLabel::document_index;
    if (text == "context_index")
        return IndexLabel::context_index;
    throw ParseError("unknown index label: \"" + text + "\"");
}

IndexPair build_indices(const std::vector<corpus::Chunk>& chunks,
                        const std::map<std::string, std::vector<float>>& embeddings,
                        IndexLabel label, const IndexBuildOptions& opts) {
    if (chunks.empty())
        throw ConfigError("empty index: no chunks to index");

    IndexPair pair;
    pair.label = label;
    pair.lexical.k1 = opts.k1;
    pair.lexical.b = opts.b;
    pair.vector.model_id = opts.model_id;

    std::size_t total_len = 0;
    for (const corpus::Chunk& c : chunks) {
        if (pair.chunks.count(c.chunk_id))
            throw ConfigError("duplicate chunk_id: " + c.chunk_id);

        auto it = embeddings.find(c.chunk_id);
        if (it == embeddings.end())
            throw ConfigError("missing embedding for chunk " + c.chunk_id);
        if (pair.vector.dim == 0)
            pair.vector.dim = it->second.size();
        if (it->second.size() != pair.vector.dim)
            throw ConfigError("embedding dimension mismatch for chunk " + c.chunk_id + ": got " +
                              std::to_string(it->second.size()) + ", index dim is " +
                              std::to_string(pair.vector.dim));
        pair.vector.vectors[c.chunk_id] = it->second;

        const auto terms = corpus::term_tokens(c.text);
        auto& counts = pair.lexical.tf[c.chunk_id];
        for (const std::string& t : terms)
            ++counts[t];
        for (const auto& [term, _] : counts)
            ++pair.lexical.df[term];

        pair.lexical.len[c.chunk_id] = terms.size();
        total_len += terms.size();
        pair.chunks[c.chunk_id] = c;
    }

    pair.lexical.doc_count = chunks.size();
    pair.lexical.avgdl = static_cast<double>(total_len) / static_cast<double>(chunks.size());
    return pair;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw ConfigError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        na += static_cast<double>(a[i]) * static_cast<double>(a[i]);
        nb += static_cast<double>(b[i]) * static_cast<double>(b[i]);
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0; // degenerate zero vector
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double bm25_score(const std::vector<std::string>& query_terms, const std::string& chunk_id,
                  const LexicalIndex& idx) {
    auto tf_it = idx.tf.find(chunk_id);
    auto len_it = idx.len.find(chunk_id);
    if (tf_it == idx.tf.end() || len_it == idx.len.end())
        throw ConfigError("unknown chunk_id: " + chunk_id);

    const double n = static_cast<double>(idx.doc_count);
    const double dl = static_cast<double>(len_it->second);
    double score = 0.0;

    for (const std::string& term : query_terms) {
        auto f_it = tf_it->second.find(term);
        if (f_it == tf_it->second.end())
            continue;
        const double f = static_cast<double>(f_it->second);
        auto df_it = idx.df.find(term);
        const double df = df_it == idx.df.end() ? 0.0 : static_cast<double>(df_it->second);
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        score += idf * (f * (idx.k1 + 1.0)) / (f + idx.k1 * (1.0 - idx.b + idx.b * dl / idx.avgdl));
    }
    return score;
}

} // namespace veritrail::index
