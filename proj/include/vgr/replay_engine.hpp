#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vgr/feature_pool.hpp"
#include "vgr/replay_parser.hpp"
#include "vgr/sample.hpp"

namespace vgr {

struct ReplayPolicy {
    int max_replays = 8;
    int max_tokens_per_replay = 256;
    enum class OnInvalid { skip, halt };
    OnInvalid on_invalid = OnInvalid::skip;
};

// Backend contract: the engine pulls chunks and pushes replay injections back
// into the generator's context; an injection is acknowledged before the next
// chunk is requested.
class Generator {
  public:
    virtual ~Generator() = default;

    // nullopt signals end of generation.
    virtual std::optional<std::string> next_chunk() = 0;

    // token_count cells of `channels` floats each, flattened row-major.
    virtual void accept_injection(std::span<const float> values, int token_count, int channels) = 0;
};

// Deterministic generator driven by a fixed chunk script; records the
// injections it was handed.
class ScriptedGenerator : public Generator {
  public:
    explicit ScriptedGenerator(std::vector<std::string> chunks) : chunks_(std::move(chunks)) {}

    std::optional<std::string> next_chunk() override;
    void accept_injection(std::span<const float> values, int token_count, int channels) override;

    struct Injection {
        std::vector<float> values;
        int token_count;
        int channels;
    };
    const std::vector<Injection>& injections() const { return injections_; }

  private:
    std::vector<std::string> chunks_;
    size_t next_ = 0;
    std::vector<Injection> injections_;
};

struct TranscriptElement {
    enum class Kind { text_run, signal, malformed, replay };
    Kind kind;
    std::string raw;                     // source bytes for text/signal/malformed
    std::optional<ReplaySignal> signal;  // for signal
    SignalError error = SignalError::none;
    std::vector<float> tokens;           // for replay: injected values
    int token_count = 0;
    int channels = 0;
    std::optional<PixelBox> source_box;  // clamped box the replay was sliced from
};

enum class TerminationReason { completed, backend_error, policy_halt };

struct Transcript {
    std::vector<TranscriptElement> elements;
    TerminationReason reason = TerminationReason::completed;
    int replay_count = 0;
    int signals_over_cap = 0;
    std::string backend_error_message;

    // Generator output with injected runs stripped; byte-exact.
    std::string raw_output() const;
    std::string to_jsonl() const;
};

Transcript run_generation(Generator& generator, const FeaturePool& pool,
                          const ReplayPolicy& policy = {});

struct SftElement {
    enum class Kind { prompt_text, image_input, signal, response_text, replayed_image };
    Kind kind;
    std::string text;   // prompt/signal/response payload
    int token_count = 1;
    bool loss_mask = false;  // true: supervised with cross-entropy
};

struct SftSequence {
    std::vector<SftElement> elements;
    int replayed_runs = 0;

    std::string to_jsonl() const;
};

struct SftBuildResult {
    std::optional<SftSequence> sequence;
    std::string error;  // diagnostics when the sample is rejected
    bool ok() const { return sequence.has_value(); }
};

// Assembles prompt + image tokens + response interleaved with replayed runs,
// with the loss mask true exactly on signal and response text elements.
// Malformed signals reject the sample: training data must be clean.
SftBuildResult build_sft_sequence(const SampleRecord& sample, const FeaturePool& pool,
                                  const ReplayPolicy& policy = {});

const char* sft_kind_name(SftElement::Kind k);
const char* transcript_kind_name(TranscriptElement::Kind k);
const char* termination_reason_name(TerminationReason r);

}  // namespace vgr
