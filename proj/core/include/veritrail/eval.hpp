#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "veritrail/pipeline.hpp"
#include "veritrail/providers.hpp"

namespace veritrail::eval {

enum class Verdict { factual, hallucinated };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& text);

struct JudgeVerdict {
    std::string query_id;
    Verdict verdict = Verdict::factual;
    std::string rationale;
    std::string judge_model;
};

enum class Correctness { correct, partially_correct, not_correct };
enum class Reasoning { strongest, moderate, weakest };

std::string to_string(Correctness c);
Correctness correctness_from_string(const std::string& text);
std::string to_string(Reasoning r);
Reasoning reasoning_from_string(const std::string& text);

struct HumanReview {
    std::string query_id;
    pipeline::Architecture architecture = pipeline::Architecture::BCA;
    Correctness correctness = Correctness::correct;
    Reasoning reasoning = Reasoning::moderate;
    std::string rationale;
    std::string reviewer;
};

// Judge prompt construction and strict verdict parsing. The judge sees the
// question, the answer, and all retrieved chunk texts, and must put exactly
// `factual` or `hallucinated` on the first line of its reply.
std::string judge_system_prompt();
std::string judge_user_prompt(const std::string& question,
                              const std::vector<std::string>& reference_texts,
                              const std::string& answer);

/// Parses the constrained verdict token. Throws ParseError instead of ever
/// defaulting a verdict.
std::pair<Verdict, std::string> parse_judge_output(const std::string& text);

/// Runs the judge over one response. Retries a malformed output once, then
/// throws ParseError.
JudgeVerdict judge_hallucination(const pipeline::PipelineResponse& resp,
                                 const std::vector<std::string>& reference_texts,
                                 providers::ChatClient& judge);

struct JudgeBatchResult {
    std::vector<JudgeVerdict> verdicts; // input order, failures omitted
    std::vector<pipeline::BatchFailure> failures;
};

/// Judges a whole run with bounded concurrency. Failures are isolated per
/// query. reference_texts_for resolves a response's chunk ids to chunk texts.
JudgeBatchResult
judge_batch(const std::vector<pipeline::PipelineResponse>& responses,
            const std::function<std::vector<std::string>(const pipeline::PipelineResponse&)>&
                reference_texts_for,
            providers::ChatClient& judge, int concurrency = 4);

// ---------------------------------------------------------------------------
// Human review store: append-only audit log on disk, latest-wins view in
// memory, keyed by (query_id, architecture, reviewer).
// ---------------------------------------------------------------------------

class ReviewStore {
public:
    /// Opens (and replays) the JSONL audit log at the given path.
    explicit ReviewStore(std::filesystem::path audit_path);

    void record(const HumanReview& review);

    std::vector<HumanReview> latest() const;
    std::size_t size() const { return latest_.size(); }
    std::size_t audit_size() const { return audit_count_; }

private:
    std::filesystem::path audit_path_;
    std::map<std::string, HumanReview> latest_; // key: query_id|arch|reviewer
    std::size_t audit_count_ = 0;
};

/// Validates against the run's known queries, then upserts into the store.
void record_review(ReviewStore& store, const HumanReview& review,
                   const std::set<std::string>& known_query_ids);

// ---------------------------------------------------------------------------
// Score arithmetic.
// ---------------------------------------------------------------------------

struct CorrectnessCounts {
    std::size_t correct = 0;
    std::size_t partially_correct = 0;
    std::size_t not_correct = 0;
    std::size_t total() const { return correct + partially_correct + not_correct; }
};

struct ReasoningCounts {
    std::size_t strongest = 0;
    std::size_t moderate = 0;
    std::size_t weakest = 0;
    std::size_t total() const { return strongest + moderate + weakest; }
};

/// (correct + 0.5*partially_correct) / total. Rejects all-zero counts.
double score_correctness(const CorrectnessCounts& counts);

/// Same mapping over strongest/moderate/weakest.
double score_reasoning(const ReasoningCounts& counts);

/// n_hallucinated / total. Rejects empty input.
double hallucination_rate(const std::vector<JudgeVerdict>& verdicts);

struct ScoreReport {
    std::string architecture;
    std::string model_id;
    std::size_t n_factual = 0;
    std::size_t n_hallucinated = 0;
    std::optional<double> hallucination_rate;
    CorrectnessCounts correctness_counts;
    std::optional<double> correctness_score;
    ReasoningCounts reasoning_counts;
    std::optional<double> reasoning_score;
};

struct RunEvalInputs {
    std::string architecture;
    std::string model_id;
    std::vector<JudgeVerdict> verdicts;
    std::vector<HumanReview> reviews;
};

/// One row per (architecture, model), sorted; raw values unrounded.
std::vector<ScoreReport> build_report(const std::vector<RunEvalInputs>& runs);

/// Markdown table; rates rendered at 3 decimals, scores at 2, missing as n/a.
std::string render_report_markdown(const std::vector<ScoreReport>& rows);

nlohmann::json report_to_json(const std::vector<ScoreReport>& rows);

void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);
void to_json(nlohmann::json& j, const HumanReview& r);
void from_json(const nlohmann::json& j, HumanReview& r);

} // namespace veritrail::eval
