#include "veritrail/providers.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"

#include "veritrail/corpus.hpp"
#include "veritrail/hash.hpp"

#ifdef VERITRAIL_HAS_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace veritrail::providers {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Mock providers
// ---------------------------------------------------------------------------

MockChatClient::MockChatClient(std::string model_id) : model_id_(std::move(model_id)) {
    fallback_ = [](const std::string&, const std::string& user) {
        const std::string digest = fnv1a64_hex(user);
        return "Step-by-step reasoning:\n"
               "1. Reviewed the supplied documentation excerpts.\n"
               "2. Compared the question against the evidence in those excerpts.\n"
               "3. Drew a conclusion strictly from that evidence.\n"
               "Summary: deterministic mock analysis (digest " +
               digest + ").";
    };
}

void MockChatClient::script(const std::string& user, const std::string& answer) {
    std::lock_guard<std::mutex> lock(mutex_);
    exact_[user] = answer;
}

void MockChatClient::script_contains(const std::string& needle, const std::string& answer) {
    std::lock_guard<std::mutex> lock(mutex_);
    contains_.emplace_back(needle, answer);
}

void MockChatClient::fail_when_contains(const std::string& needle, const std::string& message) {
    std::lock_guard<std::mutex> lock(mutex_);
    failures_.emplace_back(needle, message);
}

void MockChatClient::set_fallback(
    std::function<std::string(const std::string&, const std::string&)> fn) {
    std::lock_guard<std::mutex> lock(mutex_);
    fallback_ = std::move(fn);
}

ChatExchange MockChatClient::complete(const std::string& system, const std::string& user) {
    calls_.fetch_add(1);

    std::optional<std::string> answer;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& [needle, message] : failures_) {
            if (user.find(needle) != std::string::npos)
                throw ProviderError(message, 503, 1);
        }
        if (auto it = exact_.find(user); it != exact_.end()) {
            answer = it->second;
        } else {
            for (const auto& [needle, scripted] : contains_) {
                if (user.find(needle) != std::string::npos) {
                    answer = scripted;
                    break;
                }
            }
        }
        if (!answer)
            answer = fallback_(system, user);
    }

    if (answer->empty())
        throw ProviderError("provider returned an empty answer", 200, 1);

    ChatExchange ex;
    ex.system = system;
    ex.user = user;
    ex.answer = *answer;
    ex.model_id = model_id_;
    ex.usage.prompt_tokens =
        static_cast<long>(corpus::tokenize(system).size() + corpus::tokenize(user).size());
    ex.usage.completion_tokens = static_cast<long>(corpus::tokenize(*answer).size());
    ex.latency_ms = 0;
    return ex;
}

MockEmbeddingClient::MockEmbeddingClient(std::size_t dim, std::string model_id)
    : dim_(dim), model_id_(std::move(model_id)) {}

std::vector<std::vector<float>> MockEmbeddingClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw ConfigError("embed: empty text list");

    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
        if (text.empty())
            throw ConfigError("embed: empty text in batch");
        std::mt19937_64 gen(fnv1a64(model_id_ + '\0' + text));
        std::vector<float> v(dim_);
        double norm = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            // uniform in [-1, 1) straight from the generator bits; no
            // distribution objects, so values are identical across platforms
            const double u = static_cast<double>(gen() >> 11) / 9007199254740992.0;
            v[i] = static_cast<float>(2.0 * u - 1.0);
            norm += static_cast<double>(v[i]) * static_cast<double>(v[i]);
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            v[0] = 1.0f;
        } else {
            for (float& x : v)
                x = static_cast<float>(x / norm);
        }
        out.push_back(std::move(v));
    }
    texts_embedded_.fetch_add(static_cast<long>(texts.size()));
    return out;
}

std::vector<std::pair<std::size_t, double>>
MockRerankClient::rerank(const std::string& query, const std::vector<std::string>& documents) {
    calls_.fetch_add(1);
    if (documents.empty())
        throw ConfigError("rerank: empty document list");

    const auto qterms = corpus::term_tokens(query);
    const std::set<std::string> unique_qterms(qterms.begin(), qterms.end());

    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(documents.size());
    for (std::size_t i = 0; i < documents.size(); ++i) {
        const auto dterms = corpus::term_tokens(documents[i]);
        const std::set<std::string> unique_dterms(dterms.begin(), dterms.end());
        double shared = 0.0;
        for (const auto& t : unique_qterms)
            if (unique_dterms.count(t))
                shared += 1.0;
        out.emplace_back(i, shared);
    }
    return out;
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<EmbeddingClient> inner)
    : inner_(std::move(inner)) {}

std::vector<std::vector<float>> CachingEmbedder::embed(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw ConfigError("embed: empty text list");

    std::lock_guard<std::mutex> lock(mutex_);

    std::vector<std::uint64_t> keys;
    keys.reserve(texts.size());
    std::vector<std::string> misses;
    std::set<std::uint64_t> missing_keys;
    for (const std::string& text : texts) {
        const std::uint64_t key = fnv1a64(inner_->model_id() + '\0' + text);
        keys.push_back(key);
        if (cache_.count(key)) {
            hits_.fetch_add(1);
        } else if (missing_keys.insert(key).second) {
            misses.push_back(text);
        }
    }

    if (!misses.empty()) {
        const auto vectors = inner_->embed(misses);
        for (std::size_t i = 0; i < misses.size(); ++i)
            cache_[fnv1a64(inner_->model_id() + '\0' + misses[i])] = vectors[i];
    }

    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const std::uint64_t key : keys)
        out.push_back(cache_.at(key));
    return out;
}

// ---------------------------------------------------------------------------
// HTTP session: base URL + auth + retry + in-flight cap, shared by the three
// role clients.
// ---------------------------------------------------------------------------

namespace {

class Gate {
public:
    explicit Gate(int limit) : limit_(limit < 1 ? 1 : limit) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [this] { return in_flight_ < limit_; });
        ++in_flight_;
    }

    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    int limit_;
    int in_flight_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct GateGuard {
    explicit GateGuard(Gate& g) : gate(g) { gate.acquire(); }
    ~GateGuard() { gate.release(); }
    Gate& gate;
};

} // namespace

class HttpSession {
public:
    explicit HttpSession(const ProviderConfig& cfg)
        : retry_(cfg.retry), timeout_(cfg.timeout), gate_(cfg.concurrency) {
        // split "https://host[:port]/base/path" into origin and path prefix
        const auto scheme_end = cfg.base_url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("base_url must include a scheme: " + cfg.base_url);
        const auto path_start = cfg.base_url.find('/', scheme_end + 3);
        origin_ = path_start == std::string::npos ? cfg.base_url : cfg.base_url.substr(0, path_start);
        base_path_ = path_start == std::string::npos ? "" : cfg.base_url.substr(path_start);
        while (!base_path_.empty() && base_path_.back() == '/')
            base_path_.pop_back();

        const char* key = std::getenv(cfg.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("environment variable " + cfg.api_key_env +
                              " is not set (required for remote providers)");
        api_key_ = key;
    }

    /// POSTs JSON with retry on connection failures, 429 and 5xx. Exponential
    /// backoff between attempts. The API key never appears in error text.
    json post_json(const std::string& path, const json& body) {
        GateGuard guard(gate_);

        httplib::Client client(origin_);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_write_timeout(timeout_);
        client.set_default_headers({{"Authorization", "Bearer " + api_key_}});

        const std::string payload = body.dump();
        auto backoff = retry_.backoff;
        int attempts = 0;
        int last_status = 0;

        while (true) {
            ++attempts;
            auto res = client.Post(base_path_ + path, payload, "application/json");
            if (res && res->status >= 200 && res->status < 300) {
                try {
                    return json::parse(res->body);
                } catch (const json::exception& e) {
                    throw ProviderError("provider returned unparseable JSON for " + path + ": " +
                                            e.what(),
                                        res->status, attempts);
                }
            }

            last_status = res ? res->status : 0;
            const bool retryable = !res || last_status == 429 || last_status >= 500;
            if (!retryable || attempts >= retry_.max_attempts) {
                std::string detail = res ? ("status " + std::to_string(last_status))
                                         : ("transport error: " + httplib::to_string(res.error()));
                throw ProviderError("request to " + path + " failed after " +
                                        std::to_string(attempts) + " attempt(s) (" + detail + ")",
                                    last_status, attempts);
            }
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }

private:
    std::string origin_;
    std::string base_path_;
    std::string api_key_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
    Gate gate_;
};

std::shared_ptr<HttpSession> make_http_session(const ProviderConfig& cfg) {
    return std::make_shared<HttpSession>(cfg);
}

HttpChatClient::HttpChatClient(std::shared_ptr<HttpSession> session, std::string model_id,
                               int max_tokens)
    : session_(std::move(session)), model_id_(std::move(model_id)), max_tokens_(max_tokens) {}

ChatExchange HttpChatClient::complete(const std::string& system, const std::string& user) {
    const json request{{"model", model_id_},
                       {"messages", json::array({json{{"role", "system"}, {"content", system}},
                                                 json{{"role", "user"}, {"content", user}}})},
                       {"max_tokens", max_tokens_},
                       {"temperature", 0}};

    const auto start = std::chrono::steady_clock::now();
    const json response = session_->post_json("/chat/completions", request);
    const auto elapsed = std::chrono::steady_clock::now() - start;

    ChatExchange ex;
    ex.system = system;
    ex.user = user;
    ex.model_id = model_id_;
    ex.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    try {
        ex.answer = response.at("choices").at(0).at("message").at("content").get<std::string>();
        if (response.contains("usage")) {
            ex.usage.prompt_tokens = response["usage"].value("prompt_tokens", 0L);
            ex.usage.completion_tokens = response["usage"].value("completion_tokens", 0L);
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat completion response: ") + e.what(), 200,
                            1);
    }
    if (ex.answer.empty())
        throw ProviderError("provider returned an empty answer", 200, 1);
    return ex;
}

HttpEmbeddingClient::HttpEmbeddingClient(std::shared_ptr<HttpSession> session,
                                         std::string model_id)
    : session_(std::move(session)), model_id_(std::move(model_id)) {}

std::vector<std::vector<float>> HttpEmbeddingClient::embed(const std::vector<std::string>& texts) {
    if (texts.empty())
        throw ConfigError("embed: empty text list");
    for (const auto& t : texts)
        if (t.empty())
            throw ConfigError("embed: empty text in batch");

    const json response =
        session_->post_json("/embeddings", json{{"model", model_id_}, {"input", texts}});

    std::vector<std::vector<float>> out(texts.size());
    std::size_t filled = 0;
    try {
        const auto& data = response.at("data");
        for (const auto& item : data) {
            const auto idx = item.at("index").get<std::size_t>();
            if (idx >= out.size())
                throw ProviderError("embedding response index out of range", 200, 1);
            out[idx] = item.at("embedding").get<std::vector<float>>();
            ++filled;
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings response: ") + e.what(), 200, 1);
    }
    if (filled != texts.size())
        throw ProviderError("embeddings response covered " + std::to_string(filled) + " of " +
                                std::to_string(texts.size()) + " inputs",
                            200, 1);
    const std::size_t dim = out.front().size();
    for (const auto& v : out)
        if (v.size() != dim)
            throw ProviderError("embeddings response has mixed dimensions", 200, 1);
    return out;
}

HttpRerankClient::HttpRerankClient(std::shared_ptr<HttpSession> session, std::string model_id)
    : session_(std::move(session)), model_id_(std::move(model_id)) {}

std::vector<std::pair<std::size_t, double>>
HttpRerankClient::rerank(const std::string& query, const std::vector<std::string>& documents) {
    if (documents.empty())
        throw ConfigError("rerank: empty document list");

    const json response = session_->post_json("/rerank", json{{"model", model_id_},
                                                              {"query", query},
                                                              {"documents", documents},
                                                              {"top_n", documents.size()}});

    std::vector<std::pair<std::size_t, double>> out;
    try {
        for (const auto& item : response.at("results")) {
            out.emplace_back(item.at("index").get<std::size_t>(),
                             item.at("relevance_score").get<double>());
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed rerank response: ") + e.what(), 200, 1);
    }
    if (out.size() != documents.size())
        throw ProviderError("rerank response covered " + std::to_string(out.size()) + " of " +
                                std::to_string(documents.size()) + " documents",
                            200, 1);
    return out;
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

ProviderSet make_mock_providers(const ProviderConfig& cfg) {
    ProviderSet set;
    set.chat = std::make_shared<MockChatClient>(cfg.chat_model);

    auto judge = std::make_shared<MockChatClient>(cfg.judge_model);
    judge->set_fallback([](const std::string&, const std::string&) {
        return std::string("factual\nEvery claim in the answer traces back to the reference "
                           "material.");
    });
    set.judge = judge;

    set.embedder = std::make_shared<CachingEmbedder>(
        std::make_shared<MockEmbeddingClient>(static_cast<std::size_t>(cfg.mock_embed_dim)));
    set.reranker = std::make_shared<MockRerankClient>();
    return set;
}

ProviderSet make_http_providers(const ProviderConfig& cfg) {
    auto session = make_http_session(cfg);
    ProviderSet set;
    set.chat = std::make_shared<HttpChatClient>(session, cfg.chat_model, cfg.max_tokens);
    set.judge = std::make_shared<HttpChatClient>(session, cfg.judge_model, cfg.max_tokens);
    set.embedder = std::make_shared<CachingEmbedder>(
        std::make_shared<HttpEmbeddingClient>(session, cfg.embed_model));
    set.reranker = std::make_shared<HttpRerankClient>(session, cfg.rerank_model);
    return set;
}

} // namespace veritrail::providers
