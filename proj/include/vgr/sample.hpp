#pragma once

#include <optional>
#include <string>
#include <vector>

namespace vgr {

// One curated training example, as stored in VGR-SFT JSONL files.
// Fixed field names: id, image, question, reasoning, final_answer,
// ground_truth, task_type, source, data_type.
struct SampleRecord {
    std::string id;
    std::string image;  // path or opaque reference
    std::string question;
    std::string reasoning;  // reasoning text with embedded <sot>...<eot> signals
    std::string final_answer;
    std::vector<std::string> ground_truth;
    enum class TaskType { closed_ended, open_ended };
    TaskType task_type = TaskType::closed_ended;
    std::string source;
    std::string data_type;

    // Verdicts accumulated by the curation pipeline, carried through on
    // surviving records. Opaque JSON strings at this layer.
    std::vector<std::string> verdicts_json;
};

struct SampleParseResult {
    std::optional<SampleRecord> sample;
    std::string error;
    bool ok() const { return sample.has_value(); }
};

SampleParseResult parse_sample_json(const std::string& line);
std::string sample_to_json(const SampleRecord& sample);

std::vector<SampleParseResult> read_jsonl(const std::string& path);

}  // namespace vgr
