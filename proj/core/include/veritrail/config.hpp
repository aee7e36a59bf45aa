#pragma once

#include <filesystem>

#include "json.hpp"

#include "veritrail/providers.hpp"
#include "veritrail/retrieval.hpp"

namespace veritrail::config {

struct AppConfig {
    providers::ProviderConfig provider;
    retrieval::RetrievalConfig retrieval;
    bool mock = false;
};

/// Loads a JSON config file with optional "provider" and "retrieval"
/// sections; absent fields keep their defaults.
AppConfig load_config_file(const std::filesystem::path& path);

/// Config snapshot for run manifests: everything except secrets (the API key
/// itself is never part of the config, only the env var name is).
nlohmann::json config_snapshot(const AppConfig& cfg);

providers::ProviderSet make_providers(const AppConfig& cfg);

} // namespace veritrail::config
