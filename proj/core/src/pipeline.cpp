#include "veritrail/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <future>
#include <thread>

#include "veritrail/errors.hpp"
#include "veritrail/prompts.hpp"

namespace veritrail::pipeline {

std::string to_string(Architecture arch) {
    return arch == Architecture::BCA ? "bca" : "pca";
}

Architecture architecture_from_string(const std::string& text) {
    if (text == "bca" || text == "BCA")
        return Architecture::BCA;
    if (text == "pca" || text == "PCA")
        return Architecture::PCA;
    throw ParseError("unknown architecture: \"" + text + "\" (expected bca or pca)");
}

std::string to_string(ExpectedLabel label) {
    switch (label) {
    case ExpectedLabel::compliant:
        return "compliant";
    case ExpectedLabel::non_compliant:
        return "non_compliant";
    case ExpectedLabel::partially_compliant:
        return "partially_compliant";
    }
    return "compliant";
}

ExpectedLabel expected_label_from_string(const std::string& text) {
    if (text == "compliant")
        return ExpectedLabel::compliant;
    if (text == "non_compliant")
        return ExpectedLabel::non_compliant;
    if (text == "partially_compliant")
        return ExpectedLabel::partially_compliant;
    throw ParseError("unknown expected_label: \"" + text + "\"");
}

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                const std::string key(tmpl.substr(i + 1, close - i - 1));
                if (auto it = values.find(key); it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

namespace {

const char* kPlaceholders[] = {"{user_docs_str}", "{context_str}", "{query_str}"};

void require_resolved(const std::string& text, const char* which) {
    for (const char* p : kPlaceholders) {
        if (text.find(p) != std::string::npos)
            throw Error(std::string("internal error: unresolved placeholder ") + p + " in " +
                        which + " prompt");
    }
}

} // namespace

void validate_bundle(const PromptBundle& bundle) {
    require_resolved(bundle.system, "system");
    require_resolved(bundle.user, "user");
    if (bundle.user.find("**User Documentation**") == std::string::npos)
        throw Error("internal error: user prompt lost its **User Documentation** fence");
    if (bundle.architecture == Architecture::PCA &&
        bundle.user.find("**Contextual Information**") == std::string::npos)
        throw Error("internal error: PCA user prompt lost its **Contextual Information** fence");
}

std::string render_context_block(const std::vector<retrieval::RetrievalCandidate>& cands,
                                 const std::map<std::string, corpus::Chunk>& chunks) {
    if (cands.empty())
        throw ConfigError("render_context_block: no candidates");

    std::string out;
    bool first = true;
    for (const auto& cand : cands) {
        auto it = chunks.find(cand.chunk_id);
        if (it == chunks.end())
            throw ConfigError("unknown chunk_id: " + cand.chunk_id);
        if (!first)
            out += "\n\n---\n\n";
        out += "[" + cand.chunk_id + "]\n" + it->second.text;
        first = false;
    }
    return out;
}

PromptBundle render_bca(const std::string& query_str, const std::string& doc_block) {
    if (query_str.empty() || doc_block.empty())
        throw ConfigError("render_bca: empty query or document block");

    PromptBundle bundle;
    bundle.architecture = Architecture::BCA;
    bundle.system = bca_system_prompt();
    bundle.user = render_template(bca_user_template(),
                                  {{"user_docs_str", doc_block}, {"query_str", query_str}});
    validate_bundle(bundle);
    return bundle;
}

PromptBundle render_pca(const std::string& query_str, const std::string& doc_block,
                        const std::string& ctx_block) {
    if (query_str.empty() || doc_block.empty() || ctx_block.empty())
        throw ConfigError("render_pca: empty query, document block or context block");

    PromptBundle bundle;
    bundle.architecture = Architecture::PCA;
    bundle.system = pca_system_prompt();
    bundle.user = render_template(pca_user_template(), {{"user_docs_str", doc_block},
                                                        {"context_str", ctx_block},
                                                        {"query_str", query_str}});
    validate_bundle(bundle);
    return bundle;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Pipeline::Pipeline(providers::ProviderSet providers, PipelineOptions opts)
    : providers_(std::move(providers)), opts_(std::move(opts)) {
    retrieval::validate(opts_.retrieval);
    if (!opts_.clock)
        opts_.clock = utc_now_iso8601;
}

long Pipeline::index_queries(index::IndexLabel label) const {
    return label == index::IndexLabel::document_index ? document_index_queries_.load()
                                                      : context_index_queries_.load();
}

std::vector<retrieval::RetrievalCandidate>
Pipeline::retrieve_on(const std::string& query_str, std::span<const float> query_vec,
                      const index::IndexPair& idx) const {
    (idx.label == index::IndexLabel::document_index ? document_index_queries_
                                                    : context_index_queries_)
        .fetch_add(1);
    providers::RerankClient* reranker =
        opts_.retrieval.reranker == retrieval::RerankerMode::remote ? providers_.reranker.get()
                                                                    : nullptr;
    return retrieval::retrieve(query_str, query_vec, idx, opts_.retrieval, reranker);
}

PipelineResponse Pipeline::run_query(const QueryRecord& query, Architecture arch,
                                     const index::IndexPair& doc_idx,
                                     const index::IndexPair* ctx_idx) const {
    if (query.query_str.empty())
        throw ConfigError("query_str must be non-empty (query_id " + query.query_id + ")");
    if (arch == Architecture::PCA && ctx_idx == nullptr)
        throw ConfigError("PCA requires a context index");
    if (!doc_idx.vector.model_id.empty() &&
        doc_idx.vector.model_id != providers_.embedder->model_id())
        throw ConfigError("query embedder \"" + providers_.embedder->model_id() +
                          "\" does not match index embedding model \"" +
                          doc_idx.vector.model_id + "\"");

    const auto query_vec = providers_.embedder->embed({query.query_str}).front();

    PipelineResponse resp;
    resp.query_id = query.query_id;
    resp.query_str = query.query_str;
    resp.architecture = arch;

    if (arch == Architecture::BCA) {
        resp.doc_candidates = retrieve_on(query.query_str, query_vec, doc_idx);
    } else {
        // the two retrievals are independent; run them concurrently
        auto doc_future = std::async(std::launch::async, [&] {
            return retrieve_on(query.query_str, query_vec, doc_idx);
        });
        auto ctx_future = std::async(std::launch::async, [&] {
            return retrieve_on(query.query_str, query_vec, *ctx_idx);
        });
        resp.doc_candidates = doc_future.get();
        resp.ctx_candidates = ctx_future.get();
    }

    const std::string doc_block = render_context_block(resp.doc_candidates, doc_idx.chunks);
    if (arch == Architecture::BCA) {
        resp.bundle = render_bca(query.query_str, doc_block);
    } else {
        const std::string ctx_block = render_context_block(resp.ctx_candidates, ctx_idx->chunks);
        resp.bundle = render_pca(query.query_str, doc_block, ctx_block);
    }
    for (const auto& c : resp.doc_candidates)
        resp.bundle.doc_chunk_ids.push_back(c.chunk_id);
    for (const auto& c : resp.ctx_candidates)
        resp.bundle.ctx_chunk_ids.push_back(c.chunk_id);

    resp.exchange = providers_.chat->complete(resp.bundle.system, resp.bundle.user);
    resp.created_at = opts_.clock();
    return resp;
}

BatchResult Pipeline::run_batch(const std::vector<QueryRecord>& queries, Architecture arch,
                                const index::IndexPair& doc_idx,
                                const index::IndexPair* ctx_idx) const {
    if (queries.empty())
        throw ConfigError("run_batch: empty query list");

    const std::size_t n = queries.size();
    std::vector<std::optional<PipelineResponse>> slots(n);
    std::vector<std::optional<std::string>> errors(n);

    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(opts_.concurrency, 1)));

    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                slots[i] = run_query(queries[i], arch, doc_idx, ctx_idx);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();

    BatchResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i])
            result.responses.push_back(std::move(*slots[i]));
        else
            result.failures.push_back({queries[i].query_id, *errors[i]});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const QueryRecord& q) {
    j = nlohmann::json{{"query_id", q.query_id}, {"query_str", q.query_str}};
    if (q.expected_label)
        j["expected_label"] = to_string(*q.expected_label);
}

void from_json(const nlohmann::json& j, QueryRecord& q) {
    j.at("query_id").get_to(q.query_id);
    j.at("query_str").get_to(q.query_str);
    if (j.contains("expected_label") && !j.at("expected_label").is_null())
        q.expected_label = expected_label_from_string(j.at("expected_label").get<std::string>());
}

void to_json(nlohmann::json& j, const PromptBundle& b) {
    j = nlohmann::json{{"architecture", to_string(b.architecture)},
                       {"system", b.system},
                       {"user", b.user},
                       {"doc_chunk_ids", b.doc_chunk_ids},
                       {"ctx_chunk_ids", b.ctx_chunk_ids}};
}

void from_json(const nlohmann::json& j, PromptBundle& b) {
    b.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    j.at("system").get_to(b.system);
    j.at("user").get_to(b.user);
    j.at("doc_chunk_ids").get_to(b.doc_chunk_ids);
    j.at("ctx_chunk_ids").get_to(b.ctx_chunk_ids);
}

void to_json(nlohmann::json& j, const PipelineResponse& r) {
    j = nlohmann::json{{"query_id", r.query_id},
                       {"query_str", r.query_str},
                       {"architecture", to_string(r.architecture)},
                       {"bundle", r.bundle},
                       {"exchange", r.exchange},
                       {"doc_candidates", r.doc_candidates},
                       {"ctx_candidates", r.ctx_candidates},
                       {"created_at", r.created_at}};
}

void from_json(const nlohmann::json& j, PipelineResponse& r) {
    j.at("query_id").get_to(r.query_id);
    j.at("query_str").get_to(r.query_str);
    r.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    j.at("bundle").get_to(r.bundle);
    j.at("exchange").get_to(r.exchange);
    j.at("doc_candidates").get_to(r.doc_candidates);
    j.at("ctx_candidates").get_to(r.ctx_candidates);
    j.at("created_at").get_to(r.created_at);
}

} // namespace veritrail::pipeline

namespace veritrail::retrieval {

void to_json(nlohmann::json& j, const RetrievalCandidate& c) {
    j = nlohmann::json{{"chunk_id", c.chunk_id},       {"cosine_raw", c.cosine_raw},
                       {"bm25_raw", c.bm25_raw},       {"cosine_norm", c.cosine_norm},
                       {"bm25_norm", c.bm25_norm},     {"fused", c.fused},
                       {"rank", c.rank}};
    j["rerank"] = c.rerank ? nlohmann::json(*c.rerank) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RetrievalCandidate& c) {
    j.at("chunk_id").get_to(c.chunk_id);
    j.at("cosine_raw").get_to(c.cosine_raw);
    j.at("bm25_raw").get_to(c.bm25_raw);
    j.at("cosine_norm").get_to(c.cosine_norm);
    j.at("bm25_norm").get_to(c.bm25_norm);
    j.at("fused").get_to(c.fused);
    j.at("rank").get_to(c.rank);
    if (j.contains("rerank") && !j.at("rerank").is_null())
        c.rerank = j.at("rerank").get<double>();
}

} // namespace veritrail::retrieval

namespace veritrail::providers {

void to_json(nlohmann::json& j, const ChatExchange& e) {
    j = nlohmann::json{
        {"system", e.system},
        {"user", e.user},
        {"answer", e.answer},
        {"model_id", e.model_id},
        {"usage",
         {{"prompt_tokens", e.usage.prompt_tokens},
          {"completion_tokens", e.usage.completion_tokens}}},
        {"latency_ms", e.latency_ms}};
}

void from_json(const nlohmann::json& j, ChatExchange& e) {
    j.at("system").get_to(e.system);
    j.at("user").get_to(e.user);
    j.at("answer").get_to(e.answer);
    j.at("model_id").get_to(e.model_id);
    j.at("usage").at("prompt_tokens").get_to(e.usage.prompt_tokens);
    j.at("usage").at("completion_tokens").get_to(e.usage.completion_tokens);
    j.at("latency_ms").get_to(e.latency_ms);
}

} // namespace veritrail::providers
