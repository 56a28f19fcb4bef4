#include <json.hpp>

#include "vgr/datakit.hpp"

#include <httplib.h>

namespace vgr {

namespace {

// base64 for the optional image payload
std::string b64_encode(const std::vector<uint8_t>& data) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        uint32_t v = data[i] << 16 | data[i + 1] << 8 | data[i + 2];
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += tbl[v & 63];
    }
    if (i + 1 == data.size()) {
        uint32_t v = data[i] << 16;
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        uint32_t v = data[i] << 16 | data[i + 1] << 8;
        out += tbl[v >> 18];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += "=";
    }
    return out;
}

}  // namespace

std::optional<int> HttpJudge::score(const JudgeRequest& request) {
    // split "http://host:port/path" into client base and path
    size_t scheme = url_.find("://");
    if (scheme == std::string::npos) return std::nullopt;
    size_t slash = url_.find('/', scheme + 3);
    std::string base = slash == std::string::npos ? url_ : url_.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : url_.substr(slash);

    nlohmann::json body;
    body["task"] = request.task == JudgeRequest::Task::correctness ? "correctness" : "grounding";
    body["prompt"] = request.prompt;
    if (request.image_bytes) body["image_b64"] = b64_encode(*request.image_bytes);

    httplib::Client client(base);
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res || res->status != 200) return std::nullopt;

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (!j.is_discarded()) {
        if (j.is_number_integer()) return std::clamp(int(j.get<int64_t>()), 0, 5);
        if (j.is_object() && j.contains("score") && j["score"].is_number()) {
            return std::clamp(int(j["score"].get<double>()), 0, 5);
        }
    }
    return parse_judge_score(res->body);
}

}  // namespace vgr
