#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "veritrail/errors.hpp"

namespace veritrail::providers {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff{500}; // doubled after each failed attempt
};

struct ProviderConfig {
    std::string base_url = "https://openrouter.ai/api/v1";
    std::string api_key_env = "OPENROUTER_API_KEY"; // name only; value read from env
    std::string chat_model = "openai/gpt-4o";
    std::string embed_model = "embed-english-v3.0";
    std::string rerank_model = "rerank-english-v3.0";
    std::string judge_model = "meta-llama/llama-3.1-405b-instruct";
    int max_tokens = 2048;
    std::chrono::seconds timeout{60};
    RetryPolicy retry;
    int concurrency = 4;   // in-flight request cap per provider
    int mock_embed_dim = 64;
};

struct Usage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatExchange {
    std::string system;
    std::string user;
    std::string answer; // non-empty on success
    std::string model_id;
    Usage usage;
    long latency_ms = 0;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// One completion, temperature pinned to 0, capped at max_tokens.
    virtual ChatExchange complete(const std::string& system, const std::string& user) = 0;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    /// One vector per text, same order, uniform dimensionality. A partial
    /// batch failure fails the whole call.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
    virtual const std::string& model_id() const = 0;
};

class RerankClient {
public:
    virtual ~RerankClient() = default;
    /// One (input index, relevance score) per document.
    virtual std::vector<std::pair<std::size_t, double>>
    rerank(const std::string& query, const std::vector<std::string>& documents) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock providers. Pure functions of their inputs: a full
// pipeline run in mock mode is byte-identical across executions.
// ---------------------------------------------------------------------------

class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(std::string model_id = "mock-chat");

    /// Exact-match script: this user prompt returns this answer verbatim.
    void script(const std::string& user, const std::string& answer);
    /// Substring rule, checked in insertion order after exact matches.
    void script_contains(const std::string& needle, const std::string& answer);
    /// Requests whose user prompt contains the needle fail with ProviderError.
    void fail_when_contains(const std::string& needle, const std::string& message);
    /// Replaces the fallback used when no script matches.
    void set_fallback(std::function<std::string(const std::string&, const std::string&)> fn);

    ChatExchange complete(const std::string& system, const std::string& user) override;

    long calls() const { return calls_.load(); }

private:
    std::string model_id_;
    std::map<std::string, std::string> exact_;
    std::vector<std::pair<std::string, std::string>> contains_;
    std::vector<std::pair<std::string, std::string>> failures_;
    std::function<std::string(const std::string&, const std::string&)> fallback_;
    std::atomic<long> calls_{0};
    mutable std::mutex mutex_;
};

/// Hash-seeded unit vectors: the same text always embeds to the same vector.
class MockEmbeddingClient : public EmbeddingClient {
public:
    explicit MockEmbeddingClient(std::size_t dim = 64, std::string model_id = "mock-embed");

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    const std::string& model_id() const override { return model_id_; }

    /// Number of texts embedded so far (not batches).
    long texts_embedded() const { return texts_embedded_.load(); }

private:
    std::size_t dim_;
    std::string model_id_;
    std::atomic<long> texts_embedded_{0};
};

/// Scores each document by how many distinct query terms it shares.
class MockRerankClient : public RerankClient {
public:
    MockRerankClient() = default;

    std::vector<std::pair<std::size_t, double>>
    rerank(const std::string& query, const std::vector<std::string>& documents) override;

    long calls() const { return calls_.load(); }

private:
    std::atomic<long> calls_{0};
};

/// Wraps an EmbeddingClient with a cache keyed by (model_id, content hash).
/// For any text list, texts forwarded to the inner client never exceed the
/// number of distinct uncached texts.
class CachingEmbedder : public EmbeddingClient {
public:
    explicit CachingEmbedder(std::shared_ptr<EmbeddingClient> inner);

    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    const std::string& model_id() const override { return inner_->model_id(); }

    long cache_hits() const { return hits_.load(); }

private:
    std::shared_ptr<EmbeddingClient> inner_;
    std::map<std::uint64_t, std::vector<float>> cache_;
    std::atomic<long> hits_{0};
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// HTTP providers: generic chat-completions JSON wire shape, one client per
// service role. Secrets come from the environment variable named in the
// config and are never logged or persisted.
// ---------------------------------------------------------------------------

class HttpSession; // shared transport: base URL, auth, retry, concurrency cap

class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::shared_ptr<HttpSession> session, std::string model_id, int max_tokens);
    ChatExchange complete(const std::string& system, const std::string& user) override;

private:
    std::shared_ptr<HttpSession> session_;
    std::string model_id_;
    int max_tokens_;
};

class HttpEmbeddingClient : public EmbeddingClient {
public:
    HttpEmbeddingClient(std::shared_ptr<HttpSession> session, std::string model_id);
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    const std::string& model_id() const override { return model_id_; }

private:
    std::shared_ptr<HttpSession> session_;
    std::string model_id_;
};

class HttpRerankClient : public RerankClient {
public:
    HttpRerankClient(std::shared_ptr<HttpSession> session, std::string model_id);
    std::vector<std::pair<std::size_t, double>>
    rerank(const std::string& query, const std::vector<std::string>& documents) override;

private:
    std::shared_ptr<HttpSession> session_;
    std::string model_id_;
};

std::shared_ptr<HttpSession> make_http_session(const ProviderConfig& cfg);

/// The full client set a pipeline needs.
struct ProviderSet {
    std::shared_ptr<ChatClient> chat;
    std::shared_ptr<ChatClient> judge;
    std::shared_ptr<EmbeddingClient> embedder; // cache-wrapped
    std::shared_ptr<RerankClient> reranker;
};

ProviderSet make_mock_providers(const ProviderConfig& cfg);
ProviderSet make_http_providers(const ProviderConfig& cfg);

} // namespace veritrail::providers
