#include <cstring>
#include <fstream>
#include <sstream>

#include "veritrail/errors.hpp"
#include "veritrail/hash.hpp"
#include "veritrail/index.hpp"

// On-disk layout: meta.json plus three sub-index files. lexical.idx and
// chunks.idx are JSON envelopes {format_version, kind, checksum, payload};
// vectors.idx is binary (magic, version, dim, count, entries, fnv1a footer)
// so embeddings round-trip bit-exactly.

namespace veritrail::index {

namespace {

constexpr int kFormatVersion = 1;
constexpr char kVectorMagic[8] = {'V', 'T', 'R', 'V', 'E', 'C', 'I', 'X'};

void write_envelope(const std::filesystem::path& path, const std::string& kind,
                    const nlohmann::json& payload) {
    nlohmann::json envelope{{"format_version", kFormatVersion},
                            {"kind", kind},
                            {"checksum", fnv1a64_hex(payload.dump())},
                            {"payload", payload}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << envelope.dump();
}

nlohmann::json read_envelope(const std::filesystem::path& path, const std::string& kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    nlohmann::json envelope;
    try {
        in >> envelope;
    } catch (const nlohmann::json::exception&) {
        throw FormatError("corrupted payload (checksum unverifiable): " + path.string());
    }
    const int version = envelope.value("format_version", -1);
    if (version != kFormatVersion)
        throw FormatError("unsupported format_version " + std::to_string(version) + " in " +
                          path.string() + " (expected " + std::to_string(kFormatVersion) + ")");
    if (envelope.value("kind", "") != kind)
        throw FormatError("unexpected index file kind in " + path.string());
    nlohmann::json payload = envelope.at("payload");
    if (envelope.value("checksum", "") != fnv1a64_hex(payload.dump()))
        throw FormatError("checksum mismatch in " + path.string());
    return payload;
}

template <typename T>
void append_raw(std::string& buf, const T& value) {
    buf.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
    if (pos + sizeof(T) > buf.size())
        throw FormatError("checksum failure: truncated file " + path.string());
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

void write_vectors(const std::filesystem::path& path, const VectorIndex& vec) {
    std::string buf;
    buf.append(kVectorMagic, sizeof(kVectorMagic));
    append_raw(buf, static_cast<std::uint32_t>(kFormatVersion));
    append_raw(buf, static_cast<std::uint32_t>(vec.dim));
    append_raw(buf, static_cast<std::uint64_t>(vec.vectors.size()));
    for (const auto& [id, v] : vec.vectors) {
        append_raw(buf, static_cast<std::uint32_t>(id.size()));
        buf.append(id);
        buf.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
    }
    const std::uint64_t digest = fnv1a64(buf);
    append_raw(buf, digest);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

VectorIndex read_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();

    if (buf.size() < sizeof(kVectorMagic) + sizeof(std::uint64_t))
        throw FormatError("checksum failure: truncated file " + path.string());
    if (std::memcmp(buf.data(), kVectorMagic, sizeof(kVectorMagic)) != 0)
        throw FormatError("not a vector index file: " + path.string());

    const std::string body = buf.substr(0, buf.size() - sizeof(std::uint64_t));
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - sizeof(std::uint64_t), sizeof(stored));
    if (fnv1a64(body) != stored)
        throw FormatError("checksum mismatch in " + path.string());

    std::size_t pos = sizeof(kVectorMagic);
    const auto version = read_raw<std::uint32_t>(body, pos, path);
    if (version != static_cast<std::uint32_t>(kFormatVersion))
        throw FormatError("unsupported format_version " + std::to_string(version) + " in " +
                          path.string());

    VectorIndex vec;
    vec.dim = read_raw<std::uint32_t>(body, pos, path);
    const auto count = read_raw<std::uint64_t>(body, pos, path);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id_len = read_raw<std::uint32_t>(body, pos, path);
        if (pos + id_len > body.size())
            throw FormatError("checksum failure: truncated file " + path.string());
        std::string id = body.substr(pos, id_len);
        pos += id_len;
        std::vector<float> v(vec.dim);
        if (pos + vec.dim * sizeof(float) > body.size())
            throw FormatError("checksum failure: truncated file " + path.string());
        std::memcpy(v.data(), body.data() + pos, vec.dim * sizeof(float));
        pos += vec.dim * sizeof(float);
        vec.vectors.emplace(std::move(id), std::move(v));
    }
    return vec;
}

} // namespace

void persist(const IndexPair& idx, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    nlohmann::json lexical{{"doc_count", idx.lexical.doc_count}, {"df", idx.lexical.df},
                           {"tf", idx.lexical.tf},               {"len", idx.lexical.len},
                           {"avgdl", idx.lexical.avgdl},         {"k1", idx.lexical.k1},
                           {"b", idx.lexical.b}};
    write_envelope(dir / "lexical.idx", "lexical", lexical);

    nlohmann::json chunks = nlohmann::json::array();
    for (const auto& [_, c] : idx.chunks)
        chunks.push_back(c);
    write_envelope(dir / "chunks.idx", "chunks", nlohmann::json{{"chunks", chunks}});

    write_vectors(dir / "vectors.idx", idx.vector);

    nlohmann::json meta{{"format_version", kFormatVersion},
                        {"label", to_string(idx.label)},
                        {"model_id", idx.vector.model_id},
                        {"dim", idx.vector.dim},
                        {"k1", idx.lexical.k1},
                        {"b", idx.lexical.b},
                        {"chunk_count", idx.chunks.size()},
                        {"term_count", idx.lexical.df.size()}};
    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
}

IndexPair load(const std::filesystem::path& dir) {
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in)
        throw IoError("cannot read " + (dir / "meta.json").string());
    nlohmann::json meta;
    try {
        meta_in >> meta;
    } catch (const nlohmann::json::exception&) {
        throw FormatError("corrupted meta.json in " + dir.string());
    }
    const int version = meta.value("format_version", -1);
    if (version != kFormatVersion)
        throw FormatError("unsupported format_version " + std::to_string(version) + " in " +
                          (dir / "meta.json").string());

    IndexPair idx;
    idx.label = index_label_from_string(meta.at("label").get<std::string>());

    const nlohmann::json lexical = read_envelope(dir / "lexical.idx", "lexical");
    lexical.at("doc_count").get_to(idx.lexical.doc_count);
    lexical.at("df").get_to(idx.lexical.df);
    lexical.at("tf").get_to(idx.lexical.tf);
    lexical.at("len").get_to(idx.lexical.len);
    lexical.at("avgdl").get_to(idx.lexical.avgdl);
    lexical.at("k1").get_to(idx.lexical.k1);
    lexical.at("b").get_to(idx.lexical.b);

    const nlohmann::json chunks = read_envelope(dir / "chunks.idx", "chunks");
    for (const auto& cj : chunks.at("chunks")) {
        corpus::Chunk c = cj.get<corpus::Chunk>();
        idx.chunks[c.chunk_id] = std::move(c);
    }

    idx.vector = read_vectors(dir / "vectors.idx");
    idx.vector.model_id = meta.at("model_id").get<std::string>();
    if (idx.vector.dim != meta.at("dim").get<std::size_t>())
        throw FormatError("vector dimension disagrees with meta.json in " + dir.string());

    // The three sub-indices must cover the identical chunk_id set.
    if (idx.chunks.size() != idx.vector.vectors.size() ||
        idx.chunks.size() != idx.lexical.tf.size() || idx.chunks.size() != idx.lexical.len.size())
        throw FormatError("sub-indices cover different chunk sets in " + dir.string());
    for (const auto& [id, _] : idx.chunks) {
        if (!idx.vector.vectors.count(id) || !idx.lexical.tf.count(id) ||
            !idx.lexical.len.count(id))
            throw FormatError("chunk " + id + " missing from a sub-index in " + dir.string());
    }
    return idx;
}

} // namespace veritrail::index
