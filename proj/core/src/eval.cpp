#include "veritrail/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "veritrail/errors.hpp"

namespace veritrail::eval {

std::string to_string(Verdict v) {
    return v == Verdict::factual ? "factual" : "hallucinated";
}

Verdict verdict_from_string(const std::string& text) {
    if (text == "factual")
        return Verdict::factual;
    if (text == "hallucinated")
        return Verdict::hallucinated;
    throw ParseError("unknown verdict: \"" + text + "\"");
}

std::string to_string(Correctness c) {
    switch (c) {
    case Correctness::correct:
        return "correct";
    case Correctness::partially_correct:
        return "partially_correct";
    case Correctness::not_correct:
        return "not_correct";
    }
    return "correct";
}

Correctness correctness_from_string(const std::string& text) {
    if (text == "correct")
        return Correctness::correct;
    if (text == "partially_correct")
        return Correctness::partially_correct;
    if (text == "not_correct")
        return Correctness::not_correct;
    throw ParseError("unknown correctness grade: \"" + text +
                     "\" (expected correct, partially_correct or not_correct)");
}

std::string to_string(Reasoning r) {
    switch (r) {
    case Reasoning::strongest:
        return "strongest";
    case Reasoning::moderate:
        return "moderate";
    case Reasoning::weakest:
        return "weakest";
    }
    return "moderate";
}

Reasoning reasoning_from_string(const std::string& text) {
    if (text == "strongest")
        return Reasoning::strongest;
    if (text == "moderate")
        return Reasoning::moderate;
    if (text == "weakest")
        return Reasoning::weakest;
    throw ParseError("unknown reasoning grade: \"" + text +
                     "\" (expected strongest, moderate or weakest)");
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

std::string judge_system_prompt() {
    return "You are a strict grounding judge. You will be given a question, reference "
           "material, and an answer written by another assistant. Decide whether every "
           "factual claim in the answer is supported by the reference material.\n"
           "Output format:\n"
           "- The first line must be exactly `factual` or `hallucinated` (lowercase, nothing "
           "else on that line).\n"
           "- The following lines must give a short rationale for the verdict.";
}

std::string judge_user_prompt(const std::string& question,
                              const std::vector<std::string>& reference_texts,
                              const std::string& answer) {
    std::string refs;
    for (std::size_t i = 0; i < reference_texts.size(); ++i) {
        if (i > 0)
            refs += "\n\n";
        refs += "(" + std::to_string(i + 1) + ")\n" + reference_texts[i];
    }
    return "**Question:**\n" + question + "\n\n**Reference Material:**\n" + refs +
           "\n\n**Answer:**\n" + answer +
           "\n\nDoes every claim in the answer trace back to the reference material? Reply "
           "`factual` if so, or `hallucinated` otherwise. Put the verdict alone on the first "
           "line, then explain.";
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string strip_wrapping(std::string token) {
    while (!token.empty() && (token.front() == '`' || token.front() == '*'))
        token.erase(token.begin());
    while (!token.empty() && (token.back() == '`' || token.back() == '*'))
        token.pop_back();
    return token;
}

} // namespace

std::pair<Verdict, std::string> parse_judge_output(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string first;
    std::string rest;
    bool found = false;
    while (std::getline(in, line)) {
        if (!found) {
            if (trim(line).empty())
                continue;
            first = trim(line);
            found = true;
        } else {
            rest += line + "\n";
        }
    }
    if (!found)
        throw ParseError("judge output is empty");

    const std::string token = strip_wrapping(first);
    if (token != "factual" && token != "hallucinated")
        throw ParseError("judge output does not start with a `factual`/`hallucinated` verdict "
                         "line (got \"" +
                         first + "\")");
    return {verdict_from_string(token), trim(rest)};
}

JudgeVerdict judge_hallucination(const pipeline::PipelineResponse& resp,
                                 const std::vector<std::string>& reference_texts,
                                 providers::ChatClient& judge) {
    if (resp.exchange.answer.empty())
        throw ConfigError("response for query " + resp.query_id + " has an empty answer");
    if (reference_texts.empty())
        throw ConfigError("response for query " + resp.query_id + " has no retrieved chunks");

    const std::string system = judge_system_prompt();
    const std::string user =
        judge_user_prompt(resp.query_str, reference_texts, resp.exchange.answer);

    for (int attempt = 0;; ++attempt) {
        const auto exchange = judge.complete(system, user);
        try {
            const auto [verdict, rationale] = parse_judge_output(exchange.answer);
            return JudgeVerdict{resp.query_id, verdict, rationale, exchange.model_id};
        } catch (const ParseError& e) {
            if (attempt >= 1)
                throw ParseError("judge output unparseable for query " + resp.query_id +
                                 " after retry: " + e.what());
        }
    }
}

JudgeBatchResult
judge_batch(const std::vector<pipeline::PipelineResponse>& responses,
            const std::function<std::vector<std::string>(const pipeline::PipelineResponse&)>&
                reference_texts_for,
            providers::ChatClient& judge, int concurrency) {
    const std::size_t n = responses.size();
    std::vector<std::optional<JudgeVerdict>> slots(n);
    std::vector<std::optional<std::string>> errors(n);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                slots[i] = judge_hallucination(responses[i], reference_texts_for(responses[i]),
                                               judge);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(concurrency, 1)));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back(work);
    for (auto& t : pool)
        t.join();

    JudgeBatchResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i])
            result.verdicts.push_back(std::move(*slots[i]));
        else
            result.failures.push_back({responses[i].query_id, *errors[i]});
    }
    return result;
}

// ---------------------------------------------------------------------------
// Review store
// ---------------------------------------------------------------------------

namespace {

std::string review_key(const HumanReview& r) {
    return r.query_id + "|" + pipeline::to_string(r.architecture) + "|" + r.reviewer;
}

} // namespace

ReviewStore::ReviewStore(std::filesystem::path audit_path) : audit_path_(std::move(audit_path)) {
    std::ifstream in(audit_path_);
    if (!in)
        return; // fresh store
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        HumanReview review = nlohmann::json::parse(line).get<HumanReview>();
        latest_[review_key(review)] = review;
        ++audit_count_;
    }
}

void ReviewStore::record(const HumanReview& review) {
    if (audit_path_.has_parent_path())
        std::filesystem::create_directories(audit_path_.parent_path());
    std::ofstream out(audit_path_, std::ios::app);
    if (!out)
        throw IoError("cannot append to review store " + audit_path_.string());
    out << nlohmann::json(review).dump() << '\n';
    latest_[review_key(review)] = review;
    ++audit_count_;
}

std::vector<HumanReview> ReviewStore::latest() const {
    std::vector<HumanReview> out;
    out.reserve(latest_.size());
    for (const auto& [_, r] : latest_)
        out.push_back(r);
    return out;
}

void record_review(ReviewStore& store, const HumanReview& review,
                   const std::set<std::string>& known_query_ids) {
    if (!known_query_ids.count(review.query_id))
        throw ConfigError("review references unknown query_id \"" + review.query_id + "\"");
    if (review.reviewer.empty())
        throw ConfigError("review is missing a reviewer name");
    store.record(review);
}

// ---------------------------------------------------------------------------
// Scores
// ---------------------------------------------------------------------------

double score_correctness(const CorrectnessCounts& counts) {
    const std::size_t total = counts.total();
    if (total == 0)
        throw ConfigError("score_correctness: all counts are zero");
    return (static_cast<double>(counts.correct) +
            0.5 * static_cast<double>(counts.partially_correct)) /
           static_cast<double>(total);
}

double score_reasoning(const ReasoningCounts& counts) {
    const std::size_t total = counts.total();
    if (total == 0)
        throw ConfigError("score_reasoning: all counts are zero");
    return (static_cast<double>(counts.strongest) +
            0.5 * static_cast<double>(counts.moderate)) /
           static_cast<double>(total);
}

double hallucination_rate(const std::vector<JudgeVerdict>& verdicts) {
    if (verdicts.empty())
        throw ConfigError("hallucination_rate: no verdicts");
    std::size_t hallucinated = 0;
    for (const auto& v : verdicts)
        if (v.verdict == Verdict::hallucinated)
            ++hallucinated;
    return static_cast<double>(hallucinated) / static_cast<double>(verdicts.size());
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

std::vector<ScoreReport> build_report(const std::vector<RunEvalInputs>& runs) {
    std::map<std::pair<std::string, std::string>, ScoreReport> rows;

    for (const auto& run : runs) {
        auto& row = rows[{run.architecture, run.model_id}];
        row.architecture = run.architecture;
        row.model_id = run.model_id;
        for (const auto& v : run.verdicts) {
            if (v.verdict == Verdict::factual)
                ++row.n_factual;
            else
                ++row.n_hallucinated;
        }
        for (const auto& r : run.reviews) {
            switch (r.correctness) {
            case Correctness::correct:
                ++row.correctness_counts.correct;
                break;
            case Correctness::partially_correct:
                ++row.correctness_counts.partially_correct;
                break;
            case Correctness::not_correct:
                ++row.correctness_counts.not_correct;
                break;
            }
            switch (r.reasoning) {
            case Reasoning::strongest:
                ++row.reasoning_counts.strongest;
                break;
            case Reasoning::moderate:
                ++row.reasoning_counts.moderate;
                break;
            case Reasoning::weakest:
                ++row.reasoning_counts.weakest;
                break;
            }
        }
    }

    std::vector<ScoreReport> out;
    out.reserve(rows.size());
    for (auto& [_, row] : rows) {
        const std::size_t judged = row.n_factual + row.n_hallucinated;
        if (judged > 0)
            row.hallucination_rate =
                static_cast<double>(row.n_hallucinated) / static_cast<double>(judged);
        if (row.correctness_counts.total() > 0)
            row.correctness_score = score_correctness(row.correctness_counts);
        if (row.reasoning_counts.total() > 0)
            row.reasoning_score = score_reasoning(row.reasoning_counts);
        out.push_back(std::move(row));
    }
    return out; // map iteration order: sorted by (architecture, model)
}

namespace {

std::string fixed(double value, int decimals) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(decimals);
    ss << value;
    return ss.str();
}

std::string upper(std::string s) {
    for (char& c : s)
        if (c >= 'a' && c <= 'z')
            c = static_cast<char>(c - 'a' + 'A');
    return s;
}

} // namespace

std::string render_report_markdown(const std::vector<ScoreReport>& rows) {
    std::string md = "| Architecture | Model | Hallucination | Correctness | Reasoning |\n"
                     "|---|---|---|---|---|\n";
    for (const auto& row : rows) {
        md += "| " + upper(row.architecture) + " | " + row.model_id + " | ";
        md += row.hallucination_rate ? fixed(*row.hallucination_rate, 3) : std::string("n/a");
        md += " | ";
        md += row.correctness_score ? fixed(*row.correctness_score, 2) : std::string("n/a");
        md += " | ";
        md += row.reasoning_score ? fixed(*row.reasoning_score, 2) : std::string("n/a");
        md += " |\n";
    }
    return md;
}

nlohmann::json report_to_json(const std::vector<ScoreReport>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json j{{"architecture", row.architecture},
                         {"model", row.model_id},
                         {"n_factual", row.n_factual},
                         {"n_hallucinated", row.n_hallucinated},
                         {"correctness_counts",
                          {{"correct", row.correctness_counts.correct},
                           {"partially_correct", row.correctness_counts.partially_correct},
                           {"not_correct", row.correctness_counts.not_correct}}},
                         {"reasoning_counts",
                          {{"strongest", row.reasoning_counts.strongest},
                           {"moderate", row.reasoning_counts.moderate},
                           {"weakest", row.reasoning_counts.weakest}}}};
        j["hallucination_rate"] =
            row.hallucination_rate ? nlohmann::json(*row.hallucination_rate) : nullptr;
        j["correctness_score"] =
            row.correctness_score ? nlohmann::json(*row.correctness_score) : nullptr;
        j["reasoning_score"] =
            row.reasoning_score ? nlohmann::json(*row.reasoning_score) : nullptr;
        out.push_back(std::move(j));
    }
    return nlohmann::json{{"rows", out}};
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const JudgeVerdict& v) {
    j = nlohmann::json{{"query_id", v.query_id},
                       {"verdict", to_string(v.verdict)},
                       {"rationale", v.rationale},
                       {"judge_model", v.judge_model}};
}

void from_json(const nlohmann::json& j, JudgeVerdict& v) {
    j.at("query_id").get_to(v.query_id);
    v.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    j.at("rationale").get_to(v.rationale);
    j.at("judge_model").get_to(v.judge_model);
}

void to_json(nlohmann::json& j, const HumanReview& r) {
    j = nlohmann::json{{"query_id", r.query_id},
                       {"architecture", pipeline::to_string(r.architecture)},
                       {"correctness", to_string(r.correctness)},
                       {"reasoning", to_string(r.reasoning)},
                       {"rationale", r.rationale},
                       {"reviewer", r.reviewer}};
}

void from_json(const nlohmann::json& j, HumanReview& r) {
    j.at("query_id").get_to(r.query_id);
    r.architecture = pipeline::architecture_from_string(j.at("architecture").get<std::string>());
    r.correctness = correctness_from_string(j.at("correctness").get<std::string>());
    r.reasoning = reasoning_from_string(j.at("reasoning").get<std::string>());
    j.at("rationale").get_to(r.rationale);
    j.at("reviewer").get_to(r.reviewer);
}

} // namespace veritrail::eval
