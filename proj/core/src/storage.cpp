#include "veritrail/storage.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "veritrail/errors.hpp"
#include "veritrail/hash.hpp"

namespace veritrail::storage {

namespace {

std::vector<nlohmann::json> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad JSONL at " + path.string() + ":" + std::to_string(lineno) +
                              ": " + e.what());
        }
    }
    return out;
}

} // namespace

template <typename T>
std::vector<T> load_jsonl(const std::filesystem::path& path) {
    std::vector<T> out;
    for (const auto& j : read_lines(path))
        out.push_back(j.get<T>());
    return out;
}

template <typename T>
void save_jsonl(const std::filesystem::path& path, const std::vector<T>& rows) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    for (const T& row : rows)
        out << nlohmann::json(row).dump() << '\n';
}

void append_jsonl_line(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out)
        throw IoError("cannot append to " + path.string());
    out << j.dump() << '\n';
}

// explicit instantiations for the row types the stores use
template std::vector<pipeline::QueryRecord> load_jsonl(const std::filesystem::path&);
template std::vector<pipeline::PipelineResponse> load_jsonl(const std::filesystem::path&);
template std::vector<eval::JudgeVerdict> load_jsonl(const std::filesystem::path&);
template std::vector<eval::HumanReview> load_jsonl(const std::filesystem::path&);
template void save_jsonl(const std::filesystem::path&,
                         const std::vector<pipeline::QueryRecord>&);
template void save_jsonl(const std::filesystem::path&,
                         const std::vector<pipeline::PipelineResponse>&);
template void save_jsonl(const std::filesystem::path&, const std::vector<eval::JudgeVerdict>&);
template void save_jsonl(const std::filesystem::path&, const std::vector<eval::HumanReview>&);

// ---------------------------------------------------------------------------
// Chunk store
// ---------------------------------------------------------------------------

void save_chunk_store(const std::filesystem::path& path, const ChunkStore& store) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    for (const auto& doc : store.documents) {
        nlohmann::json j{{"type", "document"},
                         {"doc_id", doc.doc_id},
                         {"title", doc.title},
                         {"kind", corpus::to_string(doc.kind)},
                         {"metadata", doc.metadata}};
        out << j.dump() << '\n';
    }
    for (const auto& chunk : store.chunks) {
        nlohmann::json j = chunk;
        j["type"] = "chunk";
        out << j.dump() << '\n';
    }
}

ChunkStore load_chunk_store(const std::filesystem::path& path) {
    ChunkStore store;
    for (const auto& j : read_lines(path)) {
        const std::string type = j.value("type", "");
        if (type == "document") {
            corpus::DocumentSource doc;
            doc.doc_id = j.at("doc_id").get<std::string>();
            doc.title = j.value("title", doc.doc_id);
            doc.kind = corpus::doc_kind_from_string(j.at("kind").get<std::string>());
            if (j.contains("metadata"))
                doc.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
            store.documents.push_back(std::move(doc));
        } else if (type == "chunk") {
            store.chunks.push_back(j.get<corpus::Chunk>());
        } else {
            throw FormatError("unknown record type \"" + type + "\" in " + path.string());
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// Run directory
// ---------------------------------------------------------------------------

RunPaths run_paths(const std::filesystem::path& runs_dir, const std::string& run_id,
                   pipeline::Architecture arch) {
    RunPaths p;
    p.run_dir = runs_dir / run_id;
    const std::string suffix = pipeline::to_string(arch);
    p.manifest = p.run_dir / ("manifest_" + suffix + ".json");
    p.responses = p.run_dir / ("responses_" + suffix + ".jsonl");
    p.verdicts = p.run_dir / ("verdicts_" + suffix + ".jsonl");
    p.reviews = p.run_dir / "reviews.jsonl";
    return p;
}

void save_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << nlohmann::json(manifest).dump(2) << '\n';
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open run manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed run manifest " + path.string() + ": " + e.what());
    }
    return j.get<RunManifest>();
}

std::string index_dir_checksum(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file())
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::string digest_input;
    for (const auto& file : files) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        digest_input += file.filename().string() + ":" + fnv1a64_hex(ss.str()) + ";";
    }
    return fnv1a64_hex(digest_input);
}

void to_json(nlohmann::json& j, const RunManifest& m) {
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& f : m.failures)
        failures.push_back({{"query_id", f.query_id}, {"error", f.error}});
    j = nlohmann::json{{"run_id", m.run_id},
                       {"architecture", pipeline::to_string(m.architecture)},
                       {"config", m.config},
                       {"chat_model", m.chat_model},
                       {"index_dir", m.index_dir},
                       {"corpus_checksums", m.corpus_checksums},
                       {"started_at", m.started_at},
                       {"finished_at", m.finished_at},
                       {"index_queries",
                        {{"document_index", m.document_index_queries},
                         {"context_index", m.context_index_queries}}},
                       {"n_queries", m.n_queries},
                       {"failures", failures}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
    j.at("run_id").get_to(m.run_id);
    m.architecture = pipeline::architecture_from_string(j.at("architecture").get<std::string>());
    m.config = j.at("config");
    j.at("chat_model").get_to(m.chat_model);
    j.at("index_dir").get_to(m.index_dir);
    j.at("corpus_checksums").get_to(m.corpus_checksums);
    j.at("started_at").get_to(m.started_at);
    j.at("finished_at").get_to(m.finished_at);
    m.document_index_queries = j.at("index_queries").value("document_index", 0L);
    m.context_index_queries = j.at("index_queries").value("context_index", 0L);
    j.at("n_queries").get_to(m.n_queries);
    m.failures.clear();
    for (const auto& f : j.at("failures"))
        m.failures.push_back({f.at("query_id").get<std::string>(),
                              f.at("error").get<std::string>()});
}

} // namespace veritrail::storage
