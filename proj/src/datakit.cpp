#include "vgr/datakit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vgr/replay_parser.hpp"

namespace vgr {

using nlohmann::json;

// --- answer scoring ------------------------------------------------------

size_t edit_distance(std::string_view a, std::string_view b) {
    const size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

static std::string fold(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    for (char& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

double anls(std::string_view prediction, std::string_view truth, double tau) {
    std::string p = fold(prediction), t = fold(truth);
    if (p.empty() && t.empty()) return 1.0;
    size_t d = edit_distance(p, t);
    double nls = 1.0 - double(d) / double(std::max(p.size(), t.size()));
    return nls >= tau ? nls : 0.0;
}

double anls(std::string_view prediction, const std::vector<std::string>& truths, double tau) {
    double best = 0.0;
    for (const auto& t : truths) best = std::max(best, anls(prediction, t, tau));
    return best;
}

// --- judges --------------------------------------------------------------

std::optional<int> parse_judge_score(std::string_view text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            int v = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                v = v * 10 + (text[i] - '0');
                if (v > 1000) break;
                ++i;
            }
            return std::clamp(v, 0, 5);
        }
    }
    return std::nullopt;
}

static uint64_t mix64(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

std::optional<int> MockJudge::score(const JudgeRequest& request) {
    uint64_t h = mix64(seed_);
    for (char c : request.prompt) h = mix64(h ^ uint64_t(static_cast<unsigned char>(c)));
    return int(h % 6);
}

// --- verdicts ------------------------------------------------------------

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::format: return "format";
        case Stage::correctness: return "correctness";
        case Stage::grounding: return "grounding";
    }
    return "unknown";
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::pass: return "pass";
        case Outcome::reject: return "reject";
        case Outcome::rewritten: return "rewritten";
        case Outcome::deferred: return "deferred";
    }
    return "unknown";
}

std::string Verdict::to_json() const {
    json j;
    j["stage"] = stage_name(stage);
    j["outcome"] = outcome_name(outcome);
    if (score) j["score"] = *score;
    if (!reason.empty()) j["reason"] = reason;
    if (!warnings.empty()) j["warnings"] = warnings;
    return j.dump();
}

std::optional<std::string> extract_final_answer(std::string_view reasoning) {
    for (std::string_view marker : {"Final Answer:", "Final answer:"}) {
        size_t pos = reasoning.rfind(marker);
        if (pos == std::string_view::npos) continue;
        std::string_view tail = reasoning.substr(pos + marker.size());
        size_t nl = tail.find('\n');
        if (nl != std::string_view::npos) tail = tail.substr(0, nl);
        size_t b = 0, e = tail.size();
        while (b < e && std::isspace(static_cast<unsigned char>(tail[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(tail[e - 1]))) --e;
        return std::string(tail.substr(b, e - b));
    }
    return std::nullopt;
}

Verdict verify_format(const SampleRecord& sample) {
    Verdict v{Stage::format, Outcome::pass, std::nullopt, "", {}};
    auto answer = extract_final_answer(sample.reasoning);
    if (!answer || answer->empty()) {
        v.outcome = Outcome::reject;
        v.reason = "missing_final_answer";
        return v;
    }
    for (const auto& ev : parse_stream(sample.reasoning)) {
        if (ev.kind == StreamEvent::Kind::signal_malformed ||
            ev.kind == StreamEvent::Kind::incomplete) {
            v.outcome = Outcome::reject;
            SignalError err = ev.kind == StreamEvent::Kind::incomplete ? SignalError::empty_body
                                                                       : ev.error;
            v.reason = std::string("bad_box_") + signal_error_name(err);
            return v;
        }
    }
    return v;
}

Verdict verify_correctness(const SampleRecord& sample, JudgeClient& judge,
                           const CurationConfig& config, std::string* rewritten_answer) {
    Verdict v{Stage::correctness, Outcome::pass, std::nullopt, "", {}};
    if (sample.task_type == SampleRecord::TaskType::closed_ended) {
        std::string answer = sample.final_answer;
        if (answer.empty()) {
            answer = extract_final_answer(sample.reasoning).value_or("");
        }
        double score = anls(answer, sample.ground_truth, config.anls_tau);
        v.score = score;
        if (score >= config.anls_pass_cutoff) {
            return v;
        }
        if (score > config.anls_reject_cutoff) {
            // inaccurate, not wrong: swap in the ground truth
            v.outcome = Outcome::rewritten;
            if (rewritten_answer && !sample.ground_truth.empty()) {
                *rewritten_answer = sample.ground_truth.front();
            }
            return v;
        }
        v.outcome = Outcome::reject;
        v.reason = "wrong_answer";
        return v;
    }

    JudgeRequest req;
    req.task = JudgeRequest::Task::correctness;
    req.prompt = "Rate 0-5 how well the reasoning and answer match the reference.\nQuestion: " +
                 sample.question + "\nReference: " +
                 (sample.ground_truth.empty() ? "" : sample.ground_truth.front()) +
                 "\nAnswer: " + sample.final_answer + "\nReasoning: " + sample.reasoning;
    auto score = judge.score(req);
    if (!score) {
        v.outcome = Outcome::deferred;
        v.reason = "judge_unavailable";
        return v;
    }
    v.score = double(*score);
    if (*score < config.judge_threshold) {
        v.outcome = Outcome::reject;
        v.reason = "judge_score_below_threshold";
    }
    return v;
}

Verdict verify_grounding(const SampleRecord& sample, const std::optional<Image>& image,
                         JudgeClient& judge, const CurationConfig& config) {
    Verdict v{Stage::grounding, Outcome::pass, std::nullopt, "", {}};

    ImageFrame frame = config.default_frame;
    if (image) {
        frame.width = image->width;
        frame.height = image->height;
        frame.patch_size = image->width;  // clamp-only frame; cell mapping unused here
        frame.patch_stride = 1;
    }

    int index = 0;
    bool any_signal = false;
    for (const auto& ev : parse_stream(sample.reasoning)) {
        if (ev.kind != StreamEvent::Kind::signal_complete) continue;
        any_signal = true;
        const ReplaySignal& sig = *ev.signal;

        BoxResult validated = validate_box(sig.x1, sig.y1, sig.x2, sig.y2, frame);
        if (!validated.ok()) {
            v.outcome = Outcome::reject;
            v.reason = "empty_crop";
            v.warnings.push_back("signal " + std::to_string(index));
            return v;
        }
        PixelBox expanded = expand_box(validated.box, frame, config.expand_margin);
        if (expanded.area() <= 0) {
            v.outcome = Outcome::reject;
            v.reason = "empty_crop";
            v.warnings.push_back("signal " + std::to_string(index));
            return v;
        }

        if (!sig.label) {
            v.warnings.push_back("unlabeled_signal_" + std::to_string(index));
            ++index;
            continue;
        }

        JudgeRequest req;
        req.task = JudgeRequest::Task::grounding;
        req.prompt = "Rate 0-5 how well the cropped region matches the label.\nLabel: " +
                     *sig.label + "\nRegion: " + render_signal(sig, SignalFormat::bare_array);
        if (image) {
            Image crop = crop_image(*image, expanded);
            if (crop.empty()) {
                v.outcome = Outcome::reject;
                v.reason = "empty_crop";
                return v;
            }
            req.image_bytes = crop.pixels;
        }
        auto score = judge.score(req);
        if (!score) {
            v.outcome = Outcome::deferred;
            v.reason = "judge_unavailable";
            return v;
        }
        v.score = double(*score);
        if (*score < config.judge_threshold) {
            v.outcome = Outcome::reject;
            v.reason = "grounding_mismatch";
            v.warnings.push_back("signal " + std::to_string(index));
            return v;
        }
        ++index;
    }
    if (!any_signal) {
        v.warnings.push_back("no_grounding");
    }
    return v;
}

// --- pipeline ------------------------------------------------------------

static std::optional<Image> load_sample_image(const SampleRecord& sample,
                                              const CurationConfig& config) {
    if (config.image_dir.empty() || sample.image.empty()) return std::nullopt;
    std::string path = config.image_dir + "/" + sample.image;
    std::ifstream probe(path, std::ios::binary);
    if (!probe) return std::nullopt;
    try {
        return read_ppm(path);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

PipelineResult run_pipeline(const std::vector<SampleParseResult>& records, JudgeClient& judge,
                            const CurationConfig& config) {
    PipelineResult result;
    PipelineReport& rep = result.report;
    rep.input_count = int(records.size());

    for (const auto& rec : records) {
        ++rep.format.in;
        if (!rec.ok()) {
            ++rep.format.reject;
            rep.rejected.push_back({"", Stage::format, "schema"});
            continue;
        }
        SampleRecord sample = *rec.sample;
        sample.verdicts_json.clear();  // verdicts are recomputed on every run

        Verdict fv = verify_format(sample);
        sample.verdicts_json.push_back(fv.to_json());
        if (fv.outcome == Outcome::reject) {
            ++rep.format.reject;
            rep.rejected.push_back({sample.id, Stage::format, fv.reason});
            continue;
        }
        ++rep.format.pass;

        ++rep.correctness.in;
        std::string rewritten_answer;
        Verdict cv = verify_correctness(sample, judge, config, &rewritten_answer);
        sample.verdicts_json.push_back(cv.to_json());
        if (cv.outcome == Outcome::reject) {
            ++rep.correctness.reject;
            rep.rejected.push_back({sample.id, Stage::correctness, cv.reason});
            continue;
        }
        if (cv.outcome == Outcome::deferred) {
            ++rep.correctness.deferred;
            continue;
        }
        if (cv.outcome == Outcome::rewritten) {
            ++rep.correctness.rewritten;
            if (!rewritten_answer.empty()) sample.final_answer = rewritten_answer;
        } else {
            ++rep.correctness.pass;
        }

        ++rep.grounding.in;
        std::optional<Image> image = load_sample_image(sample, config);
        Verdict gv = verify_grounding(sample, image, judge, config);
        sample.verdicts_json.push_back(gv.to_json());
        if (gv.outcome == Outcome::reject) {
            ++rep.grounding.reject;
            rep.rejected.push_back({sample.id, Stage::grounding, gv.reason});
            continue;
        }
        if (gv.outcome == Outcome::deferred) {
            ++rep.grounding.deferred;
            continue;
        }
        ++rep.grounding.pass;

        ++rep.survivors;
        ++rep.per_source[sample.source];
        result.survivors.push_back(std::move(sample));
    }

    rep.pass_rate = rep.input_count > 0 ? double(rep.survivors) / rep.input_count : 0.0;
    return result;
}

static json stage_json(const StageCounts& s) {
    return {{"in", s.in}, {"pass", s.pass}, {"reject", s.reject},
            {"rewritten", s.rewritten}, {"deferred", s.deferred}};
}

std::string PipelineReport::to_json() const {
    json j;
    j["input_count"] = input_count;
    j["stages"] = {{"format", stage_json(format)},
                   {"correctness", stage_json(correctness)},
                   {"grounding", stage_json(grounding)}};
    j["survivors"] = survivors;
    j["pass_rate"] = pass_rate;
    j["per_source"] = per_source;
    json rej = json::array();
    for (const auto& r : rejected) {
        rej.push_back({{"id", r.id}, {"stage", stage_name(r.stage)}, {"reason", r.reason}});
    }
    j["rejected"] = rej;
    return j.dump(2);
}

// --- statistics ----------------------------------------------------------

StatsTable dataset_stats(const std::vector<SampleParseResult>& records) {
    static const char* kKnownTypes[] = {"ScienceQA", "General VQA", "OCR"};
    StatsTable t;
    for (const auto& rec : records) {
        if (!rec.ok()) {
            t.warnings.push_back("unreadable record: " + rec.error);
            continue;
        }
        const SampleRecord& s = *rec.sample;
        ++t.total;
        ++t.per_source[s.source.empty() ? "unknown" : s.source];
        bool known = std::find(std::begin(kKnownTypes), std::end(kKnownTypes), s.data_type) !=
                     std::end(kKnownTypes);
        if (known) {
            ++t.per_type[s.data_type];
        } else {
            ++t.per_type["other"];
            t.warnings.push_back("unknown data_type '" + s.data_type + "' on " + s.id);
        }
    }
    return t;
}

std::string StatsTable::to_json() const {
    json j;
    j["total"] = total;
    j["per_source"] = per_source;
    j["per_type"] = per_type;
    if (!warnings.empty()) j["warnings"] = warnings;
    return j.dump(2);
}

// --- rewriting hooks -----------------------------------------------------

std::string rewrite_request(const SampleRecord& sample, RewriteMode mode) {
    std::ostringstream out;
    const std::string gt = sample.ground_truth.empty() ? "" : sample.ground_truth.front();
    if (mode == RewriteMode::ground_truth_align) {
        out << "Rewrite the reasoning and the answer below so the final answer matches the "
               "ground truth. Keep every <sot>...<eot> region reference unchanged and mention "
               "each region before using its content. End with a single line starting with "
               "\"Final answer:\" that states the ground truth.\n"
            << "Question: " << sample.question << "\n"
            << "Ground truth: " << gt << "\n"
            << "Original answer: " << sample.final_answer << "\n"
            << "Original reasoning: " << sample.reasoning << "\n";
    } else {
        out << "Rewrite the reasoning chain so that all thinking is enclosed within "
               "<think></think> tags, every <sot>...<eot> region reference is kept exactly as "
               "written and appears at most once, and the response ends with a single line "
               "starting with \"Final answer:\".\n"
            << "Question: " << sample.question << "\n"
            << "Ground truth: " << gt << "\n"
            << "Original reasoning: " << sample.reasoning << "\n";
    }
    return out.str();
}

Verdict accept_rewrite(const SampleRecord& sample, const std::string& rewritten_reasoning) {
    SampleRecord candidate = sample;
    candidate.reasoning = rewritten_reasoning;
    Verdict v = verify_format(candidate);
    if (v.outcome == Outcome::pass) {
        v.outcome = Outcome::rewritten;
    }
    return v;
}

}  // namespace vgr
