#include "veritrail/retrieval.hpp"

#include <algorithm>

#include "veritrail/errors.hpp"

namespace veritrail::retrieval {

std::string to_string(RerankerMode mode) {
    return mode == RerankerMode::remote ? "remote" : "passthrough";
}

RerankerMode reranker_mode_from_string(const std::string& text) {
    if (text == "remote")
        return RerankerMode::remote;
    if (text == "passthrough")
        return RerankerMode::passthrough;
    throw ParseError("unknown reranker mode: \"" + text + "\"");
}

void validate(const RetrievalConfig& cfg) {
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
        throw ConfigError("alpha must lie in [0,1], got " + std::to_string(cfg.alpha));
    if (cfg.k_final < 1 || cfg.k_final > cfg.k_first)
        throw ConfigError("k_final must satisfy 1 <= k_final <= k_first (" +
                          std::to_string(cfg.k_final) + " vs " + std::to_string(cfg.k_first) +
                          ")");
}

std::map<std::string, double> normalize_scores(const std::map<std::string, double>& raw) {
    if (raw.empty())
        throw ConfigError("normalize_scores: empty score map");

    double lo = raw.begin()->second, hi = raw.begin()->second;
    for (const auto& [_, s] : raw) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }

    std::map<std::string, double> out;
    if (hi == lo) {
        for (const auto& [id, _] : raw)
            out[id] = 1.0;
        return out;
    }
    for (const auto& [id, s] : raw)
        out[id] = (s - lo) / (hi - lo);
    return out;
}

double hybrid_score(double cos_norm, double bm25_norm, double alpha) {
    return alpha * cos_norm + (1.0 - alpha) * bm25_norm;
}

std::vector<RetrievalCandidate> retrieve_stage1(const std::string& query,
                                                std::span<const float> query_vec,
                                                const index::IndexPair& idx,
                                                const RetrievalConfig& cfg) {
    validate(cfg);
    if (idx.chunks.empty())
        throw ConfigError("empty index: nothing to retrieve from");
    if (query_vec.size() != idx.vector.dim)
        throw ConfigError("query vector dimension " + std::to_string(query_vec.size()) +
                          " does not match index dim " + std::to_string(idx.vector.dim));

    const std::vector<std::string> terms = corpus::term_tokens(query);

    std::map<std::string, double> cosine_raw;
    std::map<std::string, double> bm25_raw;
    for (const auto& [id, vec] : idx.vector.vectors) {
        cosine_raw[id] = index::cosine_similarity(query_vec, vec);
        bm25_raw[id] = index::bm25_score(terms, id, idx.lexical);
    }
    const auto cosine_norm = normalize_scores(cosine_raw);
    const auto bm25_norm = normalize_scores(bm25_raw);

    std::vector<RetrievalCandidate> cands;
    cands.reserve(idx.chunks.size());
    for (const auto& [id, _] : idx.chunks) {
        RetrievalCandidate c;
        c.chunk_id = id;
        c.cosine_raw = cosine_raw.at(id);
        c.bm25_raw = bm25_raw.at(id);
        c.cosine_norm = cosine_norm.at(id);
        c.bm25_norm = bm25_norm.at(id);
        c.fused = hybrid_score(c.cosine_norm, c.bm25_norm, cfg.alpha);
        cands.push_back(std::move(c));
    }

    std::sort(cands.begin(), cands.end(), [](const RetrievalCandidate& a,
                                             const RetrievalCandidate& b) {
        if (a.fused != b.fused)
            return a.fused > b.fused;
        return a.chunk_id < b.chunk_id;
    });
    if (cands.size() > cfg.k_first)
        cands.resize(cfg.k_first);
    for (std::size_t i = 0; i < cands.size(); ++i)
        cands[i].rank = i;
    return cands;
}

std::vector<RetrievalCandidate> rerank_stage2(const std::string& query,
                                              const std::vector<RetrievalCandidate>& cands,
                                              const index::IndexPair& idx,
                                              const RetrievalConfig& cfg,
                                              providers::RerankClient* reranker) {
    validate(cfg);
    if (cands.empty())
        throw ConfigError("rerank_stage2: empty candidate list");

    std::vector<RetrievalCandidate> out = cands;
    if (cfg.reranker == RerankerMode::remote) {
        if (reranker == nullptr)
            throw ConfigError("remote reranker configured but no rerank client supplied");

        std::vector<std::string> texts;
        texts.reserve(out.size());
        for (const auto& c : out) {
            auto it = idx.chunks.find(c.chunk_id);
            if (it == idx.chunks.end())
                throw ConfigError("unknown chunk_id: " + c.chunk_id);
            texts.push_back(it->second.text);
        }

        const auto scores = reranker->rerank(query, texts);
        if (scores.size() != texts.size())
            throw ProviderError("rerank provider returned " + std::to_string(scores.size()) +
                                    " scores for " + std::to_string(texts.size()) + " documents",
                                0, 1);
        for (const auto& [pos, score] : scores) {
            if (pos >= out.size())
                throw ProviderError("rerank provider returned out-of-range index " +
                                        std::to_string(pos),
                                    0, 1);
            out[pos].rerank = score;
        }
        std::sort(out.begin(), out.end(),
                  [](const RetrievalCandidate& a, const RetrievalCandidate& b) {
                      if (*a.rerank != *b.rerank)
                          return *a.rerank > *b.rerank;
                      return a.chunk_id < b.chunk_id;
                  });
    }

    if (out.size() > cfg.k_final)
        out.resize(cfg.k_final);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i].rank = i;
    return out;
}

std::vector<RetrievalCandidate> retrieve(const std::string& query,
                                         std::span<const float> query_vec,
                                         const index::IndexPair& idx, const RetrievalConfig& cfg,
                                         providers::RerankClient* reranker) {
    return rerank_stage2(query, retrieve_stage1(query, query_vec, idx, cfg), idx, cfg, reranker);
}

} // namespace veritrail::retrieval
