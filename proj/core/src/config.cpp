#include "veritrail/config.hpp"

#include <fstream>

#include "veritrail/errors.hpp"

namespace veritrail::config {

AppConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed config file " + path.string() + ": " + e.what());
    }

    AppConfig cfg;
    if (j.contains("provider")) {
        const auto& p = j.at("provider");
        auto& pc = cfg.provider;
        pc.base_url = p.value("base_url", pc.base_url);
        pc.api_key_env = p.value("api_key_env", pc.api_key_env);
        pc.chat_model = p.value("chat_model", pc.chat_model);
        pc.embed_model = p.value("embed_model", pc.embed_model);
        pc.rerank_model = p.value("rerank_model", pc.rerank_model);
        pc.judge_model = p.value("judge_model", pc.judge_model);
        pc.max_tokens = p.value("max_tokens", pc.max_tokens);
        if (pc.max_tokens <= 0)
            throw ConfigError("max_tokens must be positive");
        pc.timeout = std::chrono::seconds(p.value("timeout_s", pc.timeout.count()));
        pc.concurrency = p.value("concurrency", pc.concurrency);
        pc.mock_embed_dim = p.value("mock_embed_dim", pc.mock_embed_dim);
        if (p.contains("retry")) {
            pc.retry.max_attempts = p.at("retry").value("max_attempts", pc.retry.max_attempts);
            pc.retry.backoff =
                std::chrono::milliseconds(p.at("retry").value("backoff_ms",
                                                              pc.retry.backoff.count()));
        }
    }
    if (j.contains("retrieval")) {
        const auto& r = j.at("retrieval");
        auto& rc = cfg.retrieval;
        rc.alpha = r.value("alpha", rc.alpha);
        rc.k_first = r.value("k_first", rc.k_first);
        rc.k_final = r.value("k_final", rc.k_final);
        if (r.contains("reranker"))
            rc.reranker =
                retrieval::reranker_mode_from_string(r.at("reranker").get<std::string>());
        retrieval::validate(rc);
    }
    cfg.mock = j.value("mock", false);
    return cfg;
}

nlohmann::json config_snapshot(const AppConfig& cfg) {
    return nlohmann::json{
        {"provider",
         {{"base_url", cfg.provider.base_url},
          {"api_key_env", cfg.provider.api_key_env},
          {"chat_model", cfg.provider.chat_model},
          {"embed_model", cfg.provider.embed_model},
          {"rerank_model", cfg.provider.rerank_model},
          {"judge_model", cfg.provider.judge_model},
          {"max_tokens", cfg.provider.max_tokens},
          {"timeout_s", cfg.provider.timeout.count()},
          {"concurrency", cfg.provider.concurrency},
          {"retry",
           {{"max_attempts", cfg.provider.retry.max_attempts},
            {"backoff_ms", cfg.provider.retry.backoff.count()}}}}},
        {"retrieval",
         {{"alpha", cfg.retrieval.alpha},
          {"k_first", cfg.retrieval.k_first},
          {"k_final", cfg.retrieval.k_final},
          {"reranker", retrieval::to_string(cfg.retrieval.reranker)}}},
        {"mock", cfg.mock}};
}

providers::ProviderSet make_providers(const AppConfig& cfg) {
    return cfg.mock ? providers::make_mock_providers(cfg.provider)
                    : providers::make_http_providers(cfg.provider);
}

} // namespace veritrail::config
