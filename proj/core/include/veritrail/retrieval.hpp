#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veritrail/index.hpp"
#include "veritrail/providers.hpp"

namespace veritrail::retrieval {

enum class RerankerMode { remote, passthrough };

std::string to_string(RerankerMode mode);
RerankerMode reranker_mode_from_string(const std::string& text);

struct RetrievalConfig {
    double alpha = 0.75;    // weight of the vector leg in the fused score
    std::size_t k_first = 10;
    std::size_t k_final = 2;
    RerankerMode reranker = RerankerMode::passthrough;
};

/// Throws ConfigError unless 0 <= alpha <= 1 and 1 <= k_final <= k_first.
void validate(const RetrievalConfig& cfg);

/// One chunk with every score it picked up on the way through the stages.
struct RetrievalCandidate {
    std::string chunk_id;
    double cosine_raw = 0.0;
    double bm25_raw = 0.0;
    double cosine_norm = 0.0; // min-max normalized over the scored pool
    double bm25_norm = 0.0;
    double fused = 0.0;       // alpha*cosine_norm + (1-alpha)*bm25_norm
    std::optional<double> rerank; // populated in remote mode only
    std::size_t rank = 0;         // final ordinal, gapless from 0
};

/// Per-query min-max normalization: (s - min)/(max - min); if all scores are
/// equal every value maps to 1.0. The map must be non-empty.
std::map<std::string, double> normalize_scores(const std::map<std::string, double>& raw);

/// alpha*cos_norm + (1-alpha)*bm25_norm. Inputs lie in [0,1].
double hybrid_score(double cos_norm, double bm25_norm, double alpha);

/// Stage 1: scores every chunk on both legs, fuses, sorts by fused score
/// descending (ties: ascending chunk_id) and keeps at most k_first.
std::vector<RetrievalCandidate> retrieve_stage1(const std::string& query,
                                                std::span<const float> query_vec,
                                                const index::IndexPair& idx,
                                                const RetrievalConfig& cfg);

/// Stage 2: remote mode re-scores the stage-1 candidates via the rerank
/// provider and keeps the top k_final by rerank score; passthrough keeps the
/// stage-1 order. Provider failures surface with retry metadata; there is no
/// silent fallback to passthrough.
std::vector<RetrievalCandidate> rerank_stage2(const std::string& query,
                                              const std::vector<RetrievalCandidate>& cands,
                                              const index::IndexPair& idx,
                                              const RetrievalConfig& cfg,
                                              providers::RerankClient* reranker);

/// Both stages back to back.
std::vector<RetrievalCandidate> retrieve(const std::string& query,
                                         std::span<const float> query_vec,
                                         const index::IndexPair& idx, const RetrievalConfig& cfg,
                                         providers::RerankClient* reranker);

} // namespace veritrail::retrieval
