#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vgr/geometry.hpp"

namespace vgr {

inline constexpr std::string_view kSotMarker = "<sot>";
inline constexpr std::string_view kEotMarker = "<eot>";

enum class SignalFormat { bare_array, json_object };

// One parsed grounding region: raw coordinates (continuous, unclamped) plus
// the optional label and the syntax it arrived in.
struct ReplaySignal {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    std::optional<std::string> label;
    SignalFormat format = SignalFormat::bare_array;
    size_t span_begin = 0;  // byte offset of '<' of <sot> in the stream
    size_t span_end = 0;    // one past '>' of <eot>

    // Finiteness-checked, swap-repaired box; clamping happens against a frame.
    PixelBox box() const { return {x1, y1, x2, y2}; }
};

enum class SignalError {
    none,
    arity,          // box array length != 4
    not_a_number,   // non-numeric coordinate
    bad_json,       // body starts with '{' but is not valid JSON / lacks bbox_2d
    empty_body,
    non_finite,
    stray_eot,      // <eot> with no open <sot>
    out_of_frame,   // box validation against the pool frame failed
};

const char* signal_error_name(SignalError e);

struct StreamEvent {
    enum class Kind { text_run, signal_complete, signal_malformed, incomplete };
    Kind kind;
    std::string raw;  // exact source bytes; concatenation over all events reproduces the input
    std::optional<ReplaySignal> signal;        // set for signal_complete
    SignalError error = SignalError::none;     // set for signal_malformed
};

// Parses the body between <sot> and <eot>: either a bare 4-number array or a
// JSON object with key "bbox_2d" (label optional, unknown keys ignored).
// swap_xy_order reinterprets bare arrays as [x1, x2, y1, y2].
struct SignalParseResult {
    std::optional<ReplaySignal> signal;
    SignalError error = SignalError::none;
    bool ok() const { return signal.has_value(); }
};
SignalParseResult parse_signal_body(std::string_view body, bool swap_xy_order = false);

// Canonical serialization; parse(render(s)) reproduces box and label exactly.
std::string render_signal(const ReplaySignal& signal, SignalFormat format);
std::string render_signal(const ReplaySignal& signal) ;

// Incremental recognizer for <sot>...<eot> spans. Chunks may split markers at
// any byte. One instance per stream; not safe for concurrent feeding.
class StreamParser {
  public:
    struct Options {
        bool swap_xy_order = false;
    };

    StreamParser() = default;
    explicit StreamParser(Options opts) : opts_(opts) {}

    std::vector<StreamEvent> feed(std::string_view chunk);

    // Flushes buffered state at end of stream; an unclosed <sot> yields an
    // `incomplete` event carrying the raw remainder.
    std::vector<StreamEvent> finish();

    void reset();

  private:
    void scan(std::vector<StreamEvent>& out);

    Options opts_;
    std::string buffer_;     // unconsumed bytes
    size_t consumed_ = 0;    // stream offset of buffer_[0]
    bool in_signal_ = false;
    std::string signal_raw_;  // accumulated raw span including <sot>
    size_t signal_begin_ = 0;
};

// Single-shot convenience.
std::vector<StreamEvent> parse_stream(std::string_view text, StreamParser::Options opts = {});

// Token-id front end: markers arrive as dedicated ids, everything else as its
// decoded text. Lets the same recognizer run on raw token streams.
class TokenStreamParser {
  public:
    TokenStreamParser(int sot_id, int eot_id, StreamParser::Options opts = {})
        : sot_id_(sot_id), eot_id_(eot_id), inner_(opts) {}

    std::vector<StreamEvent> feed_token(int token_id, std::string_view decoded_text);
    std::vector<StreamEvent> finish() { return inner_.finish(); }

  private:
    int sot_id_;
    int eot_id_;
    StreamParser inner_;
};

}  // namespace vgr
