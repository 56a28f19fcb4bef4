#include "vgr/sample.hpp"

#include <fstream>

#include <json.hpp>

namespace vgr {

using nlohmann::json;

SampleParseResult parse_sample_json(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return {std::nullopt, "invalid JSON"};
    }
    SampleRecord s;
    try {
        s.id = j.at("id").get<std::string>();
        s.image = j.value("image", "");
        s.question = j.value("question", "");
        s.reasoning = j.at("reasoning").get<std::string>();
        s.final_answer = j.value("final_answer", "");
        if (j.contains("ground_truth")) {
            if (j["ground_truth"].is_array()) {
                s.ground_truth = j["ground_truth"].get<std::vector<std::string>>();
            } else {
                s.ground_truth = {j["ground_truth"].get<std::string>()};
            }
        }
        std::string tt = j.value("task_type", "closed_ended");
        if (tt == "closed_ended") {
            s.task_type = SampleRecord::TaskType::closed_ended;
        } else if (tt == "open_ended") {
            s.task_type = SampleRecord::TaskType::open_ended;
        } else {
            return {std::nullopt, "unknown task_type: " + tt};
        }
        s.source = j.value("source", "");
        s.data_type = j.value("data_type", "");
        if (j.contains("verdicts") && j["verdicts"].is_array()) {
            for (const auto& v : j["verdicts"]) s.verdicts_json.push_back(v.dump());
        }
    } catch (const json::exception& e) {
        return {std::nullopt, e.what()};
    }
    return {std::move(s), ""};
}

std::string sample_to_json(const SampleRecord& s) {
    json j;
    j["id"] = s.id;
    j["image"] = s.image;
    j["question"] = s.question;
    j["reasoning"] = s.reasoning;
    j["final_answer"] = s.final_answer;
    j["ground_truth"] = s.ground_truth;
    j["task_type"] =
        s.task_type == SampleRecord::TaskType::closed_ended ? "closed_ended" : "open_ended";
    j["source"] = s.source;
    j["data_type"] = s.data_type;
    if (!s.verdicts_json.empty()) {
        json arr = json::array();
        for (const auto& v : s.verdicts_json) arr.push_back(json::parse(v));
        j["verdicts"] = arr;
    }
    return j.dump();
}

std::vector<SampleParseResult> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
    std::vector<SampleParseResult> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(parse_sample_json(line));
    }
    return out;
}

}  // namespace vgr
