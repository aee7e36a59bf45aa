#include "veritrail/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "veritrail/errors.hpp"

namespace veritrail::corpus {

std::string to_string(DocKind kind) {
    return kind == DocKind::user_doc ? "user_doc" : "standard";
}

DocKind doc_kind_from_string(const std::string& text) {
    if (text == "user_doc")
        return DocKind::user_doc;
    if (text == "standard")
        return DocKind::standard;
    throw ParseError("unknown document kind: \"" + text + "\" (expected user_doc or standard)");
}

namespace {

bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c >= 0x80; // non-ASCII bytes stay inside word runs
}

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

} // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (is_word_byte(c)) {
            while (i < n && is_word_byte(static_cast<unsigned char>(text[i])))
                ++i;
        } else {
            ++i; // single punctuation character
        }
        tokens.push_back(Token{std::string(text.substr(start, i - start)), start, i});
    }
    return tokens;
}

std::string lowercase_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> term_tokens(std::string_view text) {
    std::vector<std::string> terms;
    for (const Token& t : tokenize(text))
        terms.push_back(lowercase_ascii(t.text));
    return terms;
}

std::vector<DocumentSource> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest: " + path.string());

    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_array())
        throw IoError("manifest must be a JSON array: " + path.string());

    const auto base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::vector<DocumentSource> docs;
    std::set<std::string> seen;

    for (const auto& entry : doc) {
        DocumentSource d;
        try {
            d.doc_id = entry.at("doc_id").get<std::string>();
            d.title = entry.value("title", d.doc_id);
            d.kind = doc_kind_from_string(entry.at("kind").get<std::string>());
            if (entry.contains("metadata"))
                d.metadata = entry.at("metadata").get<std::map<std::string, std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed manifest entry in " + path.string() + ": " + e.what());
        }

        const bool has_body = entry.contains("body");
        const bool has_path = entry.contains("body_path");
        if (has_body == has_path)
            throw IoError("manifest entry \"" + d.doc_id +
                          "\" must have exactly one of body or body_path");
        if (has_body) {
            d.body = entry.at("body").get<std::string>();
        } else {
            const auto body_path = base_dir / entry.at("body_path").get<std::string>();
            std::ifstream body_in(body_path, std::ios::binary);
            if (!body_in)
                throw IoError("cannot read body file for \"" + d.doc_id +
                              "\": " + body_path.string());
            std::ostringstream buf;
            buf << body_in.rdbuf();
            d.body = buf.str();
        }

        if (d.body.empty())
            throw IoError("document \"" + d.doc_id + "\" has an empty body");
        if (!seen.insert(d.doc_id).second)
            throw IoError("duplicate doc_id in manifest: \"" + d.doc_id + "\"");
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<Chunk> chunk_document(const DocumentSource& doc, const ChunkingConfig& cfg) {
    if (cfg.overlap >= cfg.chunk_size)
        throw ConfigError("chunk overlap (" + std::to_string(cfg.overlap) +
                          ") must be smaller than chunk size (" + std::to_string(cfg.chunk_size) +
                          ")");

    const std::vector<Token> tokens = tokenize(doc.body);
    if (tokens.empty())
        throw IoError("document \"" + doc.doc_id + "\" has no tokens");

    const std::size_t n = tokens.size();
    const std::size_t stride = cfg.chunk_size - cfg.overlap;
    std::vector<Chunk> chunks;

    for (std::size_t seq = 0;; ++seq) {
        const std::size_t start = seq * stride;
        const std::size_t end = std::min(start + cfg.chunk_size, n);

        Chunk c;
        c.doc_id = doc.doc_id;
        c.seq = seq;
        c.chunk_id = doc.doc_id + "#" + std::to_string(seq);
        c.token_start = start;
        c.token_end = end;
        c.char_start = tokens[start].char_start;
        c.char_end = tokens[end - 1].char_end;
        c.text = doc.body.substr(c.char_start, c.char_end - c.char_start);
        c.token_count = end - start;
        chunks.push_back(std::move(c));

        if (end == n)
            break;
    }
    return chunks;
}

void to_json(nlohmann::json& j, const Chunk& c) {
    j = nlohmann::json{{"chunk_id", c.chunk_id},       {"doc_id", c.doc_id},
                       {"seq", c.seq},                 {"token_start", c.token_start},
                       {"token_end", c.token_end},     {"char_start", c.char_start},
                       {"char_end", c.char_end},       {"text", c.text},
                       {"token_count", c.token_count}};
}

void from_json(const nlohmann::json& j, Chunk& c) {
    j.at("chunk_id").get_to(c.chunk_id);
    j.at("doc_id").get_to(c.doc_id);
    j.at("seq").get_to(c.seq);
    j.at("token_start").get_to(c.token_start);
    j.at("token_end").get_to(c.token_end);
    j.at("char_start").get_to(c.char_start);
    j.at("char_end").get_to(c.char_end);
    j.at("text").get_to(c.text);
    j.at("token_count").get_to(c.token_count);
}

} // namespace veritrail::corpus
