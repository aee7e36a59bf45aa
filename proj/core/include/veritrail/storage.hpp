#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "veritrail/corpus.hpp"
#include "veritrail/eval.hpp"
#include "veritrail/pipeline.hpp"

namespace veritrail::storage {

// JSONL helpers shared by every on-disk store.

template <typename T>
std::vector<T> load_jsonl(const std::filesystem::path& path);

template <typename T>
void save_jsonl(const std::filesystem::path& path, const std::vector<T>& rows);

void append_jsonl_line(const std::filesystem::path& path, const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Chunk store: the `ingest` output. Type-tagged JSONL with one line per
// document record and one per chunk.
// ---------------------------------------------------------------------------

struct ChunkStore {
    std::vector<corpus::DocumentSource> documents; // bodies omitted on disk
    std::vector<corpus::Chunk> chunks;
};

void save_chunk_store(const std::filesystem::path& path, const ChunkStore& store);
ChunkStore load_chunk_store(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run directory layout under <runs_dir>/<run_id>/:
//   manifest_<arch>.json, responses_<arch>.jsonl, verdicts_<arch>.jsonl,
//   reviews.jsonl. Aggregated report.json / report.md live in <runs_dir>.
// ---------------------------------------------------------------------------

struct RunManifest {
    std::string run_id;
    pipeline::Architecture architecture = pipeline::Architecture::BCA;
    nlohmann::json config; // snapshot minus secrets
    std::string chat_model;
    std::string index_dir;
    std::map<std::string, std::string> corpus_checksums; // index kind -> digest
    std::string started_at;
    std::string finished_at;
    long document_index_queries = 0;
    long context_index_queries = 0;
    std::size_t n_queries = 0;
    std::vector<pipeline::BatchFailure> failures;
};

struct RunPaths {
    std::filesystem::path run_dir;
    std::filesystem::path manifest;
    std::filesystem::path responses;
    std::filesystem::path verdicts;
    std::filesystem::path reviews;
};

RunPaths run_paths(const std::filesystem::path& runs_dir, const std::string& run_id,
                   pipeline::Architecture arch);

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest load_manifest(const std::filesystem::path& path);

/// Digest of an index directory's persisted files, for the run manifest.
std::string index_dir_checksum(const std::filesystem::path& dir);

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

} // namespace veritrail::storage
