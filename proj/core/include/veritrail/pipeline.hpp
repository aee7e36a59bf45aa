#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "veritrail/index.hpp"
#include "veritrail/providers.hpp"
#include "veritrail/retrieval.hpp"

namespace veritrail::pipeline {

/// BCA: one retriever over user documentation. PCA: document retriever plus
/// context retriever over the standards index, feeding an extended template.
enum class Architecture { BCA, PCA };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& text);

enum class ExpectedLabel { compliant, non_compliant, partially_compliant };

std::string to_string(ExpectedLabel label);
ExpectedLabel expected_label_from_string(const std::string& text);

struct QueryRecord {
    std::string query_id;
    std::string query_str;
    std::optional<ExpectedLabel> expected_label;
};

struct PromptBundle {
    Architecture architecture = Architecture::BCA;
    std::string system;
    std::string user;
    std::vector<std::string> doc_chunk_ids;
    std::vector<std::string> ctx_chunk_ids; // empty for BCA
};

/// Throws if a known placeholder survived rendering or a required fence is
/// missing from the user prompt.
void validate_bundle(const PromptBundle& bundle);

/// A model answer plus everything needed to replay its prompt byte-exactly.
struct PipelineResponse {
    std::string query_id;
    std::string query_str;
    Architecture architecture = Architecture::BCA;
    PromptBundle bundle;
    providers::ChatExchange exchange;
    std::vector<retrieval::RetrievalCandidate> doc_candidates; // exactly those rendered
    std::vector<retrieval::RetrievalCandidate> ctx_candidates;
    std::string created_at;
};

/// Joins retrieved chunks in rank order. Each block starts with a
/// "[doc_id#seq]" source line; blocks are separated by a blank line, a ---
/// rule and another blank line.
std::string render_context_block(const std::vector<retrieval::RetrievalCandidate>& cands,
                                 const std::map<std::string, corpus::Chunk>& chunks);

PromptBundle render_bca(const std::string& query_str, const std::string& doc_block);
PromptBundle render_pca(const std::string& query_str, const std::string& doc_block,
                        const std::string& ctx_block);

struct BatchFailure {
    std::string query_id;
    std::string error;
};

struct BatchResult {
    std::vector<PipelineResponse> responses; // input order, failures omitted
    std::vector<BatchFailure> failures;
};

struct PipelineOptions {
    retrieval::RetrievalConfig retrieval;
    int concurrency = 4; // batch worker cap
    /// Timestamp source; mock runs pin this for byte-identical artifacts.
    std::function<std::string()> clock;
};

/// Query -> retrieval -> prompt -> LLM. Stateless over immutable indices;
/// the PCA's two retrievals run concurrently.
class Pipeline {
public:
    Pipeline(providers::ProviderSet providers, PipelineOptions opts);

    /// PCA requires ctx_idx; BCA ignores it and never reads it.
    PipelineResponse run_query(const QueryRecord& query, Architecture arch,
                               const index::IndexPair& doc_idx,
                               const index::IndexPair* ctx_idx) const;

    /// One response per query, input order; failures are isolated per query.
    BatchResult run_batch(const std::vector<QueryRecord>& queries, Architecture arch,
                          const index::IndexPair& doc_idx,
                          const index::IndexPair* ctx_idx) const;

    long index_queries(index::IndexLabel label) const;

private:
    std::vector<retrieval::RetrievalCandidate> retrieve_on(const std::string& query_str,
                                                           std::span<const float> query_vec,
                                                           const index::IndexPair& idx) const;

    providers::ProviderSet providers_;
    PipelineOptions opts_;
    mutable std::atomic<long> document_index_queries_{0};
    mutable std::atomic<long> context_index_queries_{0};
};

std::string utc_now_iso8601();

void to_json(nlohmann::json& j, const QueryRecord& q);
void from_json(const nlohmann::json& j, QueryRecord& q);
void to_json(nlohmann::json& j, const PromptBundle& b);
void from_json(const nlohmann::json& j, PromptBundle& b);
void to_json(nlohmann::json& j, const PipelineResponse& r);
void from_json(const nlohmann::json& j, PipelineResponse& r);

} // namespace veritrail::pipeline

namespace veritrail::retrieval {
void to_json(nlohmann::json& j, const RetrievalCandidate& c);
void from_json(const nlohmann::json& j, RetrievalCandidate& c);
} // namespace veritrail::retrieval

namespace veritrail::providers {
void to_json(nlohmann::json& j, const ChatExchange& e);
void from_json(const nlohmann::json& j, ChatExchange& e);
} // namespace veritrail::providers
