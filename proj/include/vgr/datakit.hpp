#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vgr/feature_pool.hpp"
#include "vgr/geometry.hpp"
#include "vgr/sample.hpp"

namespace vgr {

// --- answer scoring ------------------------------------------------------

// Levenshtein edit distance (insert/delete/substitute, unit cost).
size_t edit_distance(std::string_view a, std::string_view b);

inline constexpr double kDefaultAnlsThreshold = 0.5;

// Normalized Levenshtein similarity with the standard cutoff: scores below
// tau collapse to 0. Case-folded and whitespace-trimmed; both-empty gives 1.
double anls(std::string_view prediction, std::string_view truth,
            double tau = kDefaultAnlsThreshold);
double anls(std::string_view prediction, const std::vector<std::string>& truths,
            double tau = kDefaultAnlsThreshold);

// --- judges --------------------------------------------------------------

inline constexpr int kJudgeAcceptThreshold = 3;  // scores are integers 0..5

struct JudgeRequest {
    enum class Task { correctness, grounding };
    Task task;
    std::string prompt;
    std::optional<std::vector<uint8_t>> image_bytes;
};

// Returns a score 0..5, or nullopt if the judge is unavailable / the
// response does not parse (sample gets deferred, not rejected).
class JudgeClient {
  public:
    virtual ~JudgeClient() = default;
    virtual std::optional<int> score(const JudgeRequest& request) = 0;
};

// Deterministic mock: score = hash(seed, prompt) mod 6.
class MockJudge : public JudgeClient {
  public:
    explicit MockJudge(uint64_t seed) : seed_(seed) {}
    std::optional<int> score(const JudgeRequest& request) override;

  private:
    uint64_t seed_;
};

// Always returns the same score; handy in tests.
class FixedJudge : public JudgeClient {
  public:
    explicit FixedJudge(std::optional<int> value) : value_(value) {}
    std::optional<int> score(const JudgeRequest&) override { return value_; }

  private:
    std::optional<int> value_;
};

// POSTs {"prompt": ..., "image_b64": ...} to the configured URL and parses
// an integer 0..5 from the response body (either a bare integer or a JSON
// object with a "score" field).
class HttpJudge : public JudgeClient {
  public:
    explicit HttpJudge(std::string url) : url_(std::move(url)) {}
    std::optional<int> score(const JudgeRequest& request) override;

  private:
    std::string url_;
};

// Clamp-parse arbitrary judge output text into an integer 0..5.
std::optional<int> parse_judge_score(std::string_view text);

// --- verdicts ------------------------------------------------------------

enum class Stage { format, correctness, grounding };
enum class Outcome { pass, reject, rewritten, deferred };

struct Verdict {
    Stage stage;
    Outcome outcome;
    std::optional<double> score;  // ANLS in [0,1] or judge score 0..5
    std::string reason;           // required for reject
    std::vector<std::string> warnings;

    std::string to_json() const;
};

const char* stage_name(Stage s);
const char* outcome_name(Outcome o);

struct CurationConfig {
    double anls_tau = kDefaultAnlsThreshold;
    double anls_pass_cutoff = 1.0;    // score >= this passes outright
    double anls_reject_cutoff = 0.0;  // score <= this rejects; between -> rewrite
    int judge_threshold = kJudgeAcceptThreshold;
    double expand_margin = kDefaultExpandMargin;
    // frame used to clamp/crop grounding boxes when no image file is present
    ImageFrame default_frame = {};
    std::string image_dir;  // optional; empty disables pixel loading
};

Verdict verify_format(const SampleRecord& sample);
Verdict verify_correctness(const SampleRecord& sample, JudgeClient& judge,
                           const CurationConfig& config, std::string* rewritten_answer = nullptr);
Verdict verify_grounding(const SampleRecord& sample, const std::optional<Image>& image,
                         JudgeClient& judge, const CurationConfig& config);

// Extracts the text following the final-answer marker, if present.
std::optional<std::string> extract_final_answer(std::string_view reasoning);

// --- pipeline ------------------------------------------------------------

struct StageCounts {
    int in = 0, pass = 0, reject = 0, rewritten = 0, deferred = 0;
};

struct PipelineReport {
    int input_count = 0;
    StageCounts format, correctness, grounding;
    int survivors = 0;
    double pass_rate = 0;  // survivors / input (0 for empty input)
    std::map<std::string, int> per_source;
    struct RejectEntry {
        std::string id;
        Stage stage;
        std::string reason;
    };
    std::vector<RejectEntry> rejected;

    std::string to_json() const;
};

struct PipelineResult {
    PipelineReport report;
    std::vector<SampleRecord> survivors;  // verdicts attached, rewrites applied
};

// Format -> correctness -> grounding, rejects short-circuit; input order is
// preserved and the whole run is deterministic given a deterministic judge.
PipelineResult run_pipeline(const std::vector<SampleParseResult>& records, JudgeClient& judge,
                            const CurationConfig& config);

// --- statistics ----------------------------------------------------------

struct StatsTable {
    std::map<std::string, int> per_source;
    std::map<std::string, int> per_type;  // ScienceQA | General VQA | OCR | other
    int total = 0;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

StatsTable dataset_stats(const std::vector<SampleParseResult>& records);

// --- rewriting hooks -----------------------------------------------------

enum class RewriteMode { ground_truth_align, reasoning_chain };

// Builds the prompt handed to an external rewriter model; applying it is
// outside this library.
std::string rewrite_request(const SampleRecord& sample, RewriteMode mode);

// Re-runs the format gate on a rewriter response; the sample stays rejected
// unless the response passes.
Verdict accept_rewrite(const SampleRecord& sample, const std::string& rewritten_reasoning);

}  // namespace vgr
