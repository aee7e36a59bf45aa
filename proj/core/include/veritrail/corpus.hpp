#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace veritrail::corpus {

/// Which index a document feeds: user documentation goes to the document
/// index, standards/regulations go to the context index.
enum class DocKind { user_doc, standard };

std::string to_string(DocKind kind);
DocKind doc_kind_from_string(const std::string& text);

struct DocumentSource {
    std::string doc_id;
    std::string title;
    DocKind kind = DocKind::user_doc;
    std::string body;
    std::map<std::string, std::string> metadata;
};

/// One token with its byte offsets into the source text (half-open).
struct Token {
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

/// Deterministic tokenizer: maximal runs of word characters, or single
/// punctuation characters; whitespace is never a token. Bytes >= 0x80 count
/// as word characters so UTF-8 sequences are never split.
std::vector<Token> tokenize(std::string_view text);

/// Lowercased token texts, as used for lexical indexing and BM25 queries.
std::vector<std::string> term_tokens(std::string_view text);

std::string lowercase_ascii(std::string_view text);

/// A contiguous token window of a source document; the retrieval unit.
struct Chunk {
    std::string chunk_id; // "<doc_id>#<seq>"
    std::string doc_id;
    std::size_t seq = 0;
    std::size_t token_start = 0; // half-open token range
    std::size_t token_end = 0;
    std::size_t char_start = 0; // byte offsets into the document body
    std::size_t char_end = 0;
    std::string text;
    std::size_t token_count = 0;
};

struct ChunkingConfig {
    std::size_t chunk_size = 1024;
    std::size_t overlap = 20;
};

/// Loads a manifest file: a JSON array of
///   {"doc_id", "title", "kind": "user_doc"|"standard",
///    "body" | "body_path", "metadata"?}.
/// body_path is resolved relative to the manifest's directory. Order is
/// preserved. Duplicate doc_ids and empty bodies are rejected.
std::vector<DocumentSource> load_manifest(const std::filesystem::path& path);

/// Splits a document into overlapping token windows. Window starts advance
/// by chunk_size - overlap; the final window is truncated at the document
/// end. Requires overlap < chunk_size and at least one token in the body.
std::vector<Chunk> chunk_document(const DocumentSource& doc, const ChunkingConfig& cfg = {});

void to_json(nlohmann::json& j, const Chunk& c);
void from_json(const nlohmann::json& j, Chunk& c);

} // namespace veritrail::corpus
