// veritrail: compliance-verification pipeline over OT cybersecurity
// documentation. Subcommands cover the full run lifecycle: ingest -> index ->
// run/query -> judge -> review -> report.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "veritrail/config.hpp"
#include "veritrail/corpus.hpp"
#include "veritrail/errors.hpp"
#include "veritrail/eval.hpp"
#include "veritrail/index.hpp"
#include "veritrail/pipeline.hpp"
#include "veritrail/providers.hpp"
#include "veritrail/retrieval.hpp"
#include "veritrail/storage.hpp"

using namespace veritrail;

namespace {

constexpr const char* kPinnedClock = "1970-01-01T00:00:00Z";

struct CommonFlags {
    std::string config_path;
    bool mock = false;
    std::optional<double> alpha;
    std::optional<std::size_t> k_first;
    std::optional<std::size_t> k_final;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_flag("--mock", flags.mock, "force deterministic mock providers");
    cmd->add_option("--alpha", flags.alpha, "fusion weight of the vector leg [0,1]");
    cmd->add_option("--k-first", flags.k_first, "stage-1 candidate count");
    cmd->add_option("--k-final", flags.k_final, "final candidate count");
}

/// flags > config file > defaults
config::AppConfig resolve_config(const CommonFlags& flags) {
    config::AppConfig cfg;
    if (!flags.config_path.empty())
        cfg = config::load_config_file(flags.config_path);
    if (flags.alpha)
        cfg.retrieval.alpha = *flags.alpha;
    if (flags.k_first)
        cfg.retrieval.k_first = *flags.k_first;
    if (flags.k_final)
        cfg.retrieval.k_final = *flags.k_final;
    if (flags.mock)
        cfg.mock = true;
    retrieval::validate(cfg.retrieval);
    return cfg;
}

pipeline::PipelineOptions pipeline_options(const config::AppConfig& cfg) {
    pipeline::PipelineOptions opts;
    opts.retrieval = cfg.retrieval;
    opts.concurrency = cfg.provider.concurrency;
    if (cfg.mock)
        opts.clock = [] { return std::string(kPinnedClock); };
    return opts;
}

std::string now(const config::AppConfig& cfg) {
    return cfg.mock ? std::string(kPinnedClock) : pipeline::utc_now_iso8601();
}

index::IndexPair load_index_or_die(const std::filesystem::path& dir, const char* what) {
    if (!std::filesystem::exists(dir / "meta.json"))
        throw ConfigError(std::string("missing ") + what + " index at " + dir.string() +
                          " (run the index command first)");
    return index::load(dir);
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& manifest_path, const std::string& out_path,
               std::size_t chunk_size, std::size_t overlap) {
    const auto docs = corpus::load_manifest(manifest_path);

    storage::ChunkStore store;
    for (const auto& doc : docs) {
        const auto chunks = corpus::chunk_document(doc, {chunk_size, overlap});
        store.chunks.insert(store.chunks.end(), chunks.begin(), chunks.end());
        auto stripped = doc;
        stripped.body.clear(); // bodies live on in the chunks
        store.documents.push_back(std::move(stripped));
    }
    storage::save_chunk_store(out_path, store);

    std::cout << "ingested " << docs.size() << " documents into " << store.chunks.size()
              << " chunks -> " << out_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// index
// ---------------------------------------------------------------------------

std::map<std::string, std::vector<float>> embed_chunks(providers::EmbeddingClient& embedder,
                                                       const std::vector<corpus::Chunk>& chunks) {
    std::map<std::string, std::vector<float>> out;
    constexpr std::size_t kBatch = 64;
    for (std::size_t start = 0; start < chunks.size(); start += kBatch) {
        const std::size_t end = std::min(start + kBatch, chunks.size());
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i)
            texts.push_back(chunks[i].text);
        const auto vectors = embedder.embed(texts);
        for (std::size_t i = start; i < end; ++i)
            out[chunks[i].chunk_id] = vectors[i - start];
    }
    return out;
}

int cmd_index(const CommonFlags& flags, const std::string& chunks_path,
              const std::string& out_dir) {
    const auto cfg = resolve_config(flags);
    const auto store = storage::load_chunk_store(chunks_path);
    auto providers = config::make_providers(cfg);

    std::map<std::string, corpus::DocKind> kind_of;
    for (const auto& doc : store.documents)
        kind_of[doc.doc_id] = doc.kind;

    std::vector<corpus::Chunk> doc_chunks, ctx_chunks;
    for (const auto& chunk : store.chunks) {
        auto it = kind_of.find(chunk.doc_id);
        if (it == kind_of.end())
            throw FormatError("chunk " + chunk.chunk_id + " references unknown document " +
                              chunk.doc_id);
        (it->second == corpus::DocKind::user_doc ? doc_chunks : ctx_chunks).push_back(chunk);
    }
    if (doc_chunks.empty())
        throw ConfigError("no user_doc chunks in " + chunks_path +
                          "; the document index cannot be empty");

    const index::IndexBuildOptions opts{1.2, 0.75, providers.embedder->model_id()};

    const auto doc_pair = index::build_indices(doc_chunks, embed_chunks(*providers.embedder,
                                                                        doc_chunks),
                                               index::IndexLabel::document_index, opts);
    index::persist(doc_pair, std::filesystem::path(out_dir) / "document");
    std::cout << "document index: " << doc_chunks.size() << " chunks\n";

    if (!ctx_chunks.empty()) {
        const auto ctx_pair = index::build_indices(ctx_chunks, embed_chunks(*providers.embedder,
                                                                            ctx_chunks),
                                                   index::IndexLabel::context_index, opts);
        index::persist(ctx_pair, std::filesystem::path(out_dir) / "context");
        std::cout << "context index: " << ctx_chunks.size() << " chunks\n";
    } else {
        std::cout << "context index: skipped (no standard documents)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

int cmd_query(const CommonFlags& flags, const std::string& index_dir, const std::string& arch_str,
              const std::string& question) {
    const auto cfg = resolve_config(flags);
    const auto arch = pipeline::architecture_from_string(arch_str);

    const auto doc_idx = load_index_or_die(std::filesystem::path(index_dir) / "document",
                                           "document");
    std::optional<index::IndexPair> ctx_idx;
    if (arch == pipeline::Architecture::PCA)
        ctx_idx = load_index_or_die(std::filesystem::path(index_dir) / "context", "context");

    pipeline::Pipeline pipe(config::make_providers(cfg), pipeline_options(cfg));
    const auto resp = pipe.run_query({"adhoc", question, {}}, arch, doc_idx,
                                     ctx_idx ? &*ctx_idx : nullptr);

    std::cout << resp.exchange.answer << "\n\n";
    std::cout << "cited document chunks:";
    for (const auto& id : resp.bundle.doc_chunk_ids)
        std::cout << " " << id;
    std::cout << "\n";
    if (!resp.bundle.ctx_chunk_ids.empty()) {
        std::cout << "cited context chunks:";
        for (const auto& id : resp.bundle.ctx_chunk_ids)
            std::cout << " " << id;
        std::cout << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const CommonFlags& flags, const std::string& index_dir, const std::string& arch_str,
            const std::string& queries_path, const std::string& run_id,
            const std::string& runs_dir) {
    const auto cfg = resolve_config(flags);
    const auto arch = pipeline::architecture_from_string(arch_str);

    const auto doc_dir = std::filesystem::path(index_dir) / "document";
    const auto ctx_dir = std::filesystem::path(index_dir) / "context";
    const auto doc_idx = load_index_or_die(doc_dir, "document");
    std::optional<index::IndexPair> ctx_idx;
    if (arch == pipeline::Architecture::PCA)
        ctx_idx = load_index_or_die(ctx_dir, "context");

    const auto queries = storage::load_jsonl<pipeline::QueryRecord>(queries_path);
    if (queries.empty())
        throw ConfigError("query dataset is empty: " + queries_path);

    storage::RunManifest manifest;
    manifest.run_id = run_id;
    manifest.architecture = arch;
    manifest.config = config::config_snapshot(cfg);
    manifest.chat_model = cfg.provider.chat_model;
    manifest.index_dir = index_dir;
    manifest.corpus_checksums["document"] = storage::index_dir_checksum(doc_dir);
    if (std::filesystem::exists(ctx_dir))
        manifest.corpus_checksums["context"] = storage::index_dir_checksum(ctx_dir);
    manifest.started_at = now(cfg);

    pipeline::Pipeline pipe(config::make_providers(cfg), pipeline_options(cfg));
    const auto result = pipe.run_batch(queries, arch, doc_idx, ctx_idx ? &*ctx_idx : nullptr);

    manifest.finished_at = now(cfg);
    manifest.document_index_queries = pipe.index_queries(index::IndexLabel::document_index);
    manifest.context_index_queries = pipe.index_queries(index::IndexLabel::context_index);
    manifest.n_queries = queries.size();
    manifest.failures = result.failures;

    const auto paths = storage::run_paths(runs_dir, run_id, arch);
    storage::save_jsonl(paths.responses, result.responses);
    storage::save_manifest(paths.manifest, manifest);

    std::cout << "run " << run_id << " (" << pipeline::to_string(arch) << "): "
              << result.responses.size() << "/" << queries.size() << " answered -> "
              << paths.responses.string() << "\n";
    if (!result.failures.empty()) {
        nlohmann::json failed = nlohmann::json::array();
        for (const auto& f : result.failures)
            failed.push_back(f.query_id);
        std::cerr << nlohmann::json{{"error", "batch_failures"},
                                    {"message", "some queries failed"},
                                    {"query_ids", failed}}
                         .dump()
                  << "\n";
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// judge
// ---------------------------------------------------------------------------

int cmd_judge(const CommonFlags& flags, const std::string& run_id, const std::string& runs_dir,
              const std::string& arch_filter) {
    const auto cfg = resolve_config(flags);

    std::vector<pipeline::Architecture> archs;
    if (!arch_filter.empty()) {
        archs.push_back(pipeline::architecture_from_string(arch_filter));
    } else {
        for (auto arch : {pipeline::Architecture::BCA, pipeline::Architecture::PCA})
            if (std::filesystem::exists(storage::run_paths(runs_dir, run_id, arch).manifest))
                archs.push_back(arch);
    }
    if (archs.empty())
        throw ConfigError("no run manifests found for run " + run_id + " under " + runs_dir);

    auto providers = config::make_providers(cfg);
    int exit_code = 0;

    for (const auto arch : archs) {
        const auto paths = storage::run_paths(runs_dir, run_id, arch);
        const auto manifest = storage::load_manifest(paths.manifest);
        const auto responses = storage::load_jsonl<pipeline::PipelineResponse>(paths.responses);

        const auto doc_idx =
            load_index_or_die(std::filesystem::path(manifest.index_dir) / "document", "document");
        std::optional<index::IndexPair> ctx_idx;
        const auto ctx_dir = std::filesystem::path(manifest.index_dir) / "context";
        if (std::filesystem::exists(ctx_dir / "meta.json"))
            ctx_idx = index::load(ctx_dir);

        auto texts_for = [&](const pipeline::PipelineResponse& resp) {
            std::vector<std::string> texts;
            for (const auto& id : resp.bundle.doc_chunk_ids)
                texts.push_back(doc_idx.chunks.at(id).text);
            for (const auto& id : resp.bundle.ctx_chunk_ids) {
                if (!ctx_idx)
                    throw ConfigError("response cites context chunks but no context index exists");
                texts.push_back(ctx_idx->chunks.at(id).text);
            }
            return texts;
        };

        const auto result = eval::judge_batch(responses, texts_for, *providers.judge,
                                              cfg.provider.concurrency);
        storage::save_jsonl(paths.verdicts, result.verdicts);

        std::cout << "judged run " << run_id << " (" << pipeline::to_string(arch) << "): "
                  << result.verdicts.size() << "/" << responses.size() << " verdicts -> "
                  << paths.verdicts.string() << "\n";
        if (!result.failures.empty()) {
            nlohmann::json failed = nlohmann::json::array();
            for (const auto& f : result.failures)
                failed.push_back(f.query_id);
            std::cerr << nlohmann::json{{"error", "judge_failures"},
                                        {"message", "some verdicts could not be parsed"},
                                        {"query_ids", failed}}
                             .dump()
                      << "\n";
            exit_code = 3;
        }
    }
    return exit_code;
}

// ---------------------------------------------------------------------------
// review
// ---------------------------------------------------------------------------

eval::Correctness parse_correctness_input(const std::string& text) {
    if (text == "c" || text == "correct")
        return eval::Correctness::correct;
    if (text == "p" || text == "partial" || text == "partially_correct")
        return eval::Correctness::partially_correct;
    if (text == "n" || text == "not" || text == "not_correct")
        return eval::Correctness::not_correct;
    throw ParseError("unknown correctness grade: \"" + text + "\"");
}

eval::Reasoning parse_reasoning_input(const std::string& text) {
    if (text == "s" || text == "strongest")
        return eval::Reasoning::strongest;
    if (text == "m" || text == "moderate")
        return eval::Reasoning::moderate;
    if (text == "w" || text == "weakest")
        return eval::Reasoning::weakest;
    throw ParseError("unknown reasoning grade: \"" + text + "\"");
}

int cmd_review(const std::string& run_id, const std::string& runs_dir,
               const std::string& arch_str, const std::string& reviewer,
               const std::string& only_query) {
    const auto arch = pipeline::architecture_from_string(arch_str);
    const auto paths = storage::run_paths(runs_dir, run_id, arch);
    const auto responses = storage::load_jsonl<pipeline::PipelineResponse>(paths.responses);

    std::set<std::string> known;
    for (const auto& r : responses)
        known.insert(r.query_id);

    eval::ReviewStore store(paths.reviews);
    std::size_t recorded = 0;

    for (const auto& resp : responses) {
        if (!only_query.empty() && resp.query_id != only_query)
            continue;

        std::cout << "\n=== " << resp.query_id << " (" << pipeline::to_string(arch) << ") ===\n";
        std::cout << "question: " << resp.query_str << "\n\n";
        std::cout << "answer:\n" << resp.exchange.answer << "\n\n";
        std::cout << "retrieved chunks:";
        for (const auto& id : resp.bundle.doc_chunk_ids)
            std::cout << " " << id;
        for (const auto& id : resp.bundle.ctx_chunk_ids)
            std::cout << " " << id;
        std::cout << "\n";

        eval::HumanReview review;
        review.query_id = resp.query_id;
        review.architecture = arch;
        review.reviewer = reviewer;

        bool eof = false;
        auto ask = [&](const char* prompt, auto parse, auto& field) {
            std::string line;
            while (true) {
                std::cout << prompt << std::flush;
                if (!std::getline(std::cin, line)) {
                    eof = true;
                    return;
                }
                try {
                    field = parse(line);
                    return;
                } catch (const ParseError& e) {
                    std::cout << e.what() << "\n";
                }
            }
        };
        ask("correctness [c/p/n]: ", parse_correctness_input, review.correctness);
        if (eof)
            break;
        ask("reasoning [s/m/w]: ", parse_reasoning_input, review.reasoning);
        if (eof)
            break;
        std::cout << "rationale: " << std::flush;
        if (!std::getline(std::cin, review.rationale))
            break;

        eval::record_review(store, review, known);
        ++recorded;
    }

    std::cout << "\nrecorded " << recorded << " reviews -> " << paths.reviews.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& runs_dir, const std::string& out_dir) {
    if (!std::filesystem::is_directory(runs_dir))
        throw ConfigError("no runs found under " + runs_dir);

    std::vector<eval::RunEvalInputs> inputs;

    std::vector<std::filesystem::path> run_dirs;
    for (const auto& entry : std::filesystem::directory_iterator(runs_dir))
        if (entry.is_directory())
            run_dirs.push_back(entry.path());
    std::sort(run_dirs.begin(), run_dirs.end());

    for (const auto& run_dir : run_dirs) {
        for (auto arch : {pipeline::Architecture::BCA, pipeline::Architecture::PCA}) {
            const auto paths = storage::run_paths(runs_dir, run_dir.filename().string(), arch);
            if (!std::filesystem::exists(paths.manifest))
                continue;
            const auto manifest = storage::load_manifest(paths.manifest);

            eval::RunEvalInputs input;
            input.architecture = pipeline::to_string(arch);
            input.model_id = manifest.chat_model;
            if (std::filesystem::exists(paths.verdicts))
                input.verdicts = storage::load_jsonl<eval::JudgeVerdict>(paths.verdicts);
            if (std::filesystem::exists(paths.reviews)) {
                eval::ReviewStore store(paths.reviews);
                for (const auto& review : store.latest())
                    if (review.architecture == arch)
                        input.reviews.push_back(review);
            }
            inputs.push_back(std::move(input));
        }
    }
    if (inputs.empty())
        throw ConfigError("no runs found under " + runs_dir);

    const auto rows = eval::build_report(inputs);
    const auto markdown = eval::render_report_markdown(rows);
    const auto json_doc = eval::report_to_json(rows);

    const std::filesystem::path out = out_dir.empty() ? runs_dir : out_dir;
    std::filesystem::create_directories(out);
    {
        std::ofstream md(out / "report.md", std::ios::trunc);
        md << markdown;
        std::ofstream js(out / "report.json", std::ios::trunc);
        js << json_doc.dump(2) << '\n';
    }

    std::cout << markdown;
    std::cout << "report -> " << (out / "report.json").string() << "\n";
    return 0;
}

const char* error_category(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e))
        return "config";
    if (dynamic_cast<const IoError*>(&e))
        return "io";
    if (dynamic_cast<const FormatError*>(&e))
        return "format";
    if (dynamic_cast<const ProviderError*>(&e))
        return "provider";
    if (dynamic_cast<const ParseError*>(&e))
        return "parse";
    return "internal";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compliance-verification pipeline for OT cybersecurity documentation"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "chunk a document manifest into a chunk store");
    std::string manifest_path, ingest_out = "chunks.jsonl";
    std::size_t chunk_size = 1024, overlap = 20;
    ingest->add_option("--manifest", manifest_path, "manifest JSON file")->required();
    ingest->add_option("--out", ingest_out, "chunk store output path");
    ingest->add_option("--chunk-size", chunk_size, "window size in tokens");
    ingest->add_option("--overlap", overlap, "window overlap in tokens");

    // index
    auto* index_cmd = app.add_subcommand("index", "embed chunks and build the two index pairs");
    CommonFlags index_flags;
    std::string chunks_path = "chunks.jsonl", index_out = "indices";
    index_cmd->add_option("--chunks", chunks_path, "chunk store path");
    index_cmd->add_option("--out", index_out, "index output directory");
    add_common_flags(index_cmd, index_flags);

    // query
    auto* query_cmd = app.add_subcommand("query", "answer one ad-hoc question");
    CommonFlags query_flags;
    std::string query_index_dir = "indices", query_arch = "bca", question;
    query_cmd->add_option("--index-dir", query_index_dir, "index directory");
    query_cmd->add_option("--arch", query_arch, "bca or pca");
    query_cmd->add_option("--question", question, "the question to answer")->required();
    add_common_flags(query_cmd, query_flags);

    // run
    auto* run_cmd = app.add_subcommand("run", "answer a query dataset and store the responses");
    CommonFlags run_flags;
    std::string run_index_dir = "indices", run_arch = "bca", queries_path, run_id,
                runs_dir = "runs";
    run_cmd->add_option("--index-dir", run_index_dir, "index directory");
    run_cmd->add_option("--arch", run_arch, "bca or pca");
    run_cmd->add_option("--queries", queries_path, "query dataset (JSONL)")->required();
    run_cmd->add_option("--run-id", run_id, "run identifier")->required();
    run_cmd->add_option("--runs-dir", runs_dir, "runs root directory");
    add_common_flags(run_cmd, run_flags);

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "LLM-judge a stored run for hallucinations");
    CommonFlags judge_flags;
    std::string judge_run_id, judge_runs_dir = "runs", judge_arch;
    judge_cmd->add_option("--run-id", judge_run_id, "run identifier")->required();
    judge_cmd->add_option("--runs-dir", judge_runs_dir, "runs root directory");
    judge_cmd->add_option("--arch", judge_arch, "restrict to one architecture");
    add_common_flags(judge_cmd, judge_flags);

    // review
    auto* review_cmd = app.add_subcommand("review", "interactively grade a stored run");
    std::string review_run_id, review_runs_dir = "runs", review_arch = "bca", reviewer,
                review_query;
    review_cmd->add_option("--run-id", review_run_id, "run identifier")->required();
    review_cmd->add_option("--runs-dir", review_runs_dir, "runs root directory");
    review_cmd->add_option("--arch", review_arch, "bca or pca");
    review_cmd->add_option("--reviewer", reviewer, "reviewer name")->required();
    review_cmd->add_option("--query-id", review_query, "review a single query");

    // report
    auto* report_cmd = app.add_subcommand("report", "aggregate verdicts and reviews into a report");
    std::string report_runs_dir = "runs", report_out;
    report_cmd->add_option("--runs-dir", report_runs_dir, "runs root directory");
    report_cmd->add_option("--out-dir", report_out, "report output directory (default: runs dir)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest)
            return cmd_ingest(manifest_path, ingest_out, chunk_size, overlap);
        if (*index_cmd)
            return cmd_index(index_flags, chunks_path, index_out);
        if (*query_cmd)
            return cmd_query(query_flags, query_index_dir, query_arch, question);
        if (*run_cmd)
            return cmd_run(run_flags, run_index_dir, run_arch, queries_path, run_id, runs_dir);
        if (*judge_cmd)
            return cmd_judge(judge_flags, judge_run_id, judge_runs_dir, judge_arch);
        if (*review_cmd)
            return cmd_review(review_run_id, review_runs_dir, review_arch, reviewer,
                              review_query);
        if (*report_cmd)
            return cmd_report(report_runs_dir, report_out);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", error_category(e)}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
