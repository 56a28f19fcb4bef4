#include "vgr/replay_parser.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include <json.hpp>

namespace vgr {

const char* signal_error_name(SignalError e) {
    switch (e) {
        case SignalError::none: return "none";
        case SignalError::arity: return "arity";
        case SignalError::not_a_number: return "not_a_number";
        case SignalError::bad_json: return "bad_json";
        case SignalError::empty_body: return "empty_body";
        case SignalError::non_finite: return "non_finite";
        case SignalError::stray_eot: return "stray_eot";
        case SignalError::out_of_frame: return "out_of_frame";
    }
    return "unknown";
}

static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

static bool parse_number(std::string_view tok, double& out) {
    tok = trim(tok);
    if (tok.empty()) return false;
    std::string buf(tok);
    char* end = nullptr;
    out = std::strtod(buf.c_str(), &end);
    return end == buf.c_str() + buf.size();
}

static SignalParseResult make_signal(const double (&v)[4], std::optional<std::string> label,
                                     SignalFormat format, bool swap_xy_order) {
    for (double x : v) {
        if (!std::isfinite(x)) return {std::nullopt, SignalError::non_finite};
    }
    ReplaySignal sig;
    if (swap_xy_order) {
        // appendix ordering [x1, x2, y1, y2]
        sig.x1 = v[0];
        sig.x2 = v[1];
        sig.y1 = v[2];
        sig.y2 = v[3];
    } else {
        sig.x1 = v[0];
        sig.y1 = v[1];
        sig.x2 = v[2];
        sig.y2 = v[3];
    }
    sig.label = std::move(label);
    sig.format = format;
    return {sig, SignalError::none};
}

SignalParseResult parse_signal_body(std::string_view body, bool swap_xy_order) {
    body = trim(body);
    if (body.empty()) return {std::nullopt, SignalError::empty_body};

    if (body.front() == '{') {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("bbox_2d") ||
            !j["bbox_2d"].is_array()) {
            return {std::nullopt, SignalError::bad_json};
        }
        const auto& arr = j["bbox_2d"];
        if (arr.size() != 4) return {std::nullopt, SignalError::arity};
        double v[4];
        for (size_t i = 0; i < 4; ++i) {
            if (!arr[i].is_number()) return {std::nullopt, SignalError::not_a_number};
            v[i] = arr[i].get<double>();
        }
        std::optional<std::string> label;
        if (j.contains("label") && j["label"].is_string()) {
            label = j["label"].get<std::string>();
        }
        return make_signal(v, std::move(label), SignalFormat::json_object, swap_xy_order);
    }

    if (body.front() != '[' || body.back() != ']') {
        return {std::nullopt, SignalError::not_a_number};
    }
    body.remove_prefix(1);
    body.remove_suffix(1);

    double v[4];
    size_t count = 0;
    size_t pos = 0;
    while (true) {
        size_t comma = body.find(',', pos);
        std::string_view tok = body.substr(pos, comma == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : comma - pos);
        if (count >= 4) return {std::nullopt, SignalError::arity};
        if (!parse_number(tok, v[count])) return {std::nullopt, SignalError::not_a_number};
        ++count;
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (count != 4) return {std::nullopt, SignalError::arity};
    return make_signal(v, std::nullopt, SignalFormat::bare_array, swap_xy_order);
}

static std::string format_coord(double v) {
    if (std::floor(v) == v && std::fabs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    return nlohmann::json(v).dump();  // shortest round-trip double text
}

static nlohmann::json coord_json(double v) {
    if (std::floor(v) == v && std::fabs(v) < 1e15) {
        return nlohmann::json(static_cast<long long>(v));
    }
    return nlohmann::json(v);
}

std::string render_signal(const ReplaySignal& signal, SignalFormat format) {
    std::string out(kSotMarker);
    if (format == SignalFormat::bare_array) {
        out += "[" + format_coord(signal.x1) + ", " + format_coord(signal.y1) + ", " +
               format_coord(signal.x2) + ", " + format_coord(signal.y2) + "]";
    } else {
        nlohmann::json j;
        j["bbox_2d"] = {coord_json(signal.x1), coord_json(signal.y1), coord_json(signal.x2),
                        coord_json(signal.y2)};
        if (signal.label) j["label"] = *signal.label;
        out += j.dump();
    }
    out += kEotMarker;
    return out;
}

std::string render_signal(const ReplaySignal& signal) {
    return render_signal(signal, signal.format);
}

// Longest suffix of s that is a proper prefix of either marker; those bytes
// must stay buffered because the next chunk may complete the marker.
static size_t marker_prefix_holdback(std::string_view s) {
    const size_t max_len = std::min(s.size(), kSotMarker.size() - 1);
    for (size_t len = max_len; len >= 1; --len) {
        std::string_view tail = s.substr(s.size() - len);
        if (kSotMarker.substr(0, len) == tail || kEotMarker.substr(0, len) == tail) {
            return len;
        }
    }
    return 0;
}

void StreamParser::reset() {
    buffer_.clear();
    consumed_ = 0;
    in_signal_ = false;
    signal_raw_.clear();
    signal_begin_ = 0;
}

std::vector<StreamEvent> StreamParser::feed(std::string_view chunk) {
    buffer_.append(chunk);
    std::vector<StreamEvent> out;
    scan(out);
    return out;
}

void StreamParser::scan(std::vector<StreamEvent>& out) {
    while (true) {
        if (in_signal_) {
            size_t eot = buffer_.find(kEotMarker);
            if (eot == std::string::npos) {
                // keep everything buffered until the closing marker shows up
                return;
            }
            std::string body = buffer_.substr(0, eot);
            signal_raw_ += body;
            signal_raw_.append(kEotMarker);
            size_t span_len = eot + kEotMarker.size();
            buffer_.erase(0, span_len);
            consumed_ += span_len;
            in_signal_ = false;

            SignalParseResult parsed = parse_signal_body(body, opts_.swap_xy_order);
            StreamEvent ev;
            ev.raw = std::move(signal_raw_);
            signal_raw_.clear();
            if (parsed.ok()) {
                ev.kind = StreamEvent::Kind::signal_complete;
                ev.signal = *parsed.signal;
                ev.signal->span_begin = signal_begin_;
                ev.signal->span_end = consumed_;
            } else {
                ev.kind = StreamEvent::Kind::signal_malformed;
                ev.error = parsed.error;
            }
            out.push_back(std::move(ev));
            continue;
        }

        size_t sot = buffer_.find(kSotMarker);
        size_t eot = buffer_.find(kEotMarker);
        if (eot < sot) {
            // stray <eot> outside any signal
            if (eot > 0) {
                out.push_back({StreamEvent::Kind::text_run, buffer_.substr(0, eot), {}, {}});
            }
            out.push_back({StreamEvent::Kind::signal_malformed, std::string(kEotMarker), {},
                           SignalError::stray_eot});
            buffer_.erase(0, eot + kEotMarker.size());
            consumed_ += eot + kEotMarker.size();
            continue;
        }
        if (sot != std::string::npos) {
            if (sot > 0) {
                out.push_back({StreamEvent::Kind::text_run, buffer_.substr(0, sot), {}, {}});
            }
            signal_begin_ = consumed_ + sot;
            signal_raw_.assign(kSotMarker);
            buffer_.erase(0, sot + kSotMarker.size());
            consumed_ += sot + kSotMarker.size();
            in_signal_ = true;
            continue;
        }

        // No marker: flush all but a possible marker prefix at the tail.
        size_t hold = marker_prefix_holdback(buffer_);
        size_t emit = buffer_.size() - hold;
        if (emit > 0) {
            out.push_back({StreamEvent::Kind::text_run, buffer_.substr(0, emit), {}, {}});
            buffer_.erase(0, emit);
            consumed_ += emit;
        }
        return;
    }
}

std::vector<StreamEvent> StreamParser::finish() {
    std::vector<StreamEvent> out;
    if (in_signal_) {
        signal_raw_ += buffer_;
        out.push_back({StreamEvent::Kind::incomplete, std::move(signal_raw_), {}, {}});
    } else if (!buffer_.empty()) {
        out.push_back({StreamEvent::Kind::text_run, buffer_, {}, {}});
    }
    reset();
    return out;
}

std::vector<StreamEvent> parse_stream(std::string_view text, StreamParser::Options opts) {
    StreamParser parser(opts);
    std::vector<StreamEvent> out = parser.feed(text);
    auto tail = parser.finish();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

std::vector<StreamEvent> TokenStreamParser::feed_token(int token_id, std::string_view decoded_text) {
    if (token_id == sot_id_) return inner_.feed(kSotMarker);
    if (token_id == eot_id_) return inner_.feed(kEotMarker);
    return inner_.feed(decoded_text);
}

}  // namespace vgr
