#include "vgr/replay_engine.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace vgr {

std::optional<std::string> ScriptedGenerator::next_chunk() {
    if (next_ >= chunks_.size()) return std::nullopt;
    return chunks_[next_++];
}

void ScriptedGenerator::accept_injection(std::span<const float> values, int token_count,
                                         int channels) {
    injections_.push_back({{values.begin(), values.end()}, token_count, channels});
}

const char* transcript_kind_name(TranscriptElement::Kind k) {
    switch (k) {
        case TranscriptElement::Kind::text_run: return "text_run";
        case TranscriptElement::Kind::signal: return "signal";
        case TranscriptElement::Kind::malformed: return "malformed";
        case TranscriptElement::Kind::replay: return "replay";
    }
    return "unknown";
}

const char* termination_reason_name(TerminationReason r) {
    switch (r) {
        case TerminationReason::completed: return "completed";
        case TerminationReason::backend_error: return "backend_error";
        case TerminationReason::policy_halt: return "policy_halt";
    }
    return "unknown";
}

std::string Transcript::raw_output() const {
    std::string out;
    for (const auto& el : elements) {
        if (el.kind != TranscriptElement::Kind::replay) out += el.raw;
    }
    return out;
}

std::string Transcript::to_jsonl() const {
    std::ostringstream out;
    for (const auto& el : elements) {
        nlohmann::json j;
        j["kind"] = transcript_kind_name(el.kind);
        if (el.kind == TranscriptElement::Kind::replay) {
            j["token_count"] = el.token_count;
            j["channels"] = el.channels;
            j["values"] = el.tokens;
            if (el.source_box) {
                j["box"] = {el.source_box->x1, el.source_box->y1, el.source_box->x2,
                            el.source_box->y2};
            }
        } else {
            j["raw"] = el.raw;
            if (el.kind == TranscriptElement::Kind::malformed) {
                j["error"] = signal_error_name(el.error);
            }
        }
        out << j.dump() << "\n";
    }
    nlohmann::json tail;
    tail["kind"] = "summary";
    tail["reason"] = termination_reason_name(reason);
    tail["replay_count"] = replay_count;
    tail["signals_over_cap"] = signals_over_cap;
    if (!backend_error_message.empty()) tail["backend_error"] = backend_error_message;
    out << tail.dump() << "\n";
    return out.str();
}

namespace {

// Handles one completed signal on the inference path. Returns false to halt.
bool handle_signal(const StreamEvent& ev, const FeaturePool& pool, const ReplayPolicy& policy,
                   Generator& generator, Transcript& transcript) {
    TranscriptElement sig_el;
    sig_el.raw = ev.raw;
    sig_el.signal = ev.signal;

    const ReplaySignal& sig = *ev.signal;
    BoxResult validated = validate_box(sig.x1, sig.y1, sig.x2, sig.y2, pool.frame);
    if (!validated.ok()) {
        sig_el.kind = TranscriptElement::Kind::malformed;
        sig_el.error = validated.error == BoxError::malformed ? SignalError::non_finite
                                                             : SignalError::out_of_frame;
        transcript.elements.push_back(std::move(sig_el));
        return policy.on_invalid == ReplayPolicy::OnInvalid::skip;
    }

    sig_el.kind = TranscriptElement::Kind::signal;
    transcript.elements.push_back(std::move(sig_el));

    if (transcript.replay_count >= policy.max_replays) {
        ++transcript.signals_over_cap;
        return true;
    }

    TokenGrid pooled = replay_slice(pool, validated.box);
    TranscriptElement rep;
    rep.kind = TranscriptElement::Kind::replay;
    rep.token_count = int(pooled.cell_count());
    rep.channels = pooled.channels;
    rep.tokens = std::move(pooled.values);
    rep.source_box = validated.box;
    if (rep.token_count > policy.max_tokens_per_replay) {
        rep.token_count = policy.max_tokens_per_replay;
        rep.tokens.resize(size_t(rep.token_count) * rep.channels);
    }
    generator.accept_injection(rep.tokens, rep.token_count, rep.channels);
    transcript.elements.push_back(std::move(rep));
    ++transcript.replay_count;
    return true;
}

void append_events(std::vector<StreamEvent>&& events, const FeaturePool& pool,
                   const ReplayPolicy& policy, Generator& generator, Transcript& transcript,
                   bool& halted) {
    for (auto& ev : events) {
        switch (ev.kind) {
            case StreamEvent::Kind::text_run:
            case StreamEvent::Kind::incomplete:
                transcript.elements.push_back(
                    {TranscriptElement::Kind::text_run, std::move(ev.raw)});
                break;
            case StreamEvent::Kind::signal_malformed: {
                TranscriptElement el;
                el.kind = TranscriptElement::Kind::malformed;
                el.raw = std::move(ev.raw);
                el.error = ev.error;
                transcript.elements.push_back(std::move(el));
                if (policy.on_invalid == ReplayPolicy::OnInvalid::halt) halted = true;
                break;
            }
            case StreamEvent::Kind::signal_complete:
                if (!handle_signal(ev, pool, policy, generator, transcript)) halted = true;
                break;
        }
        if (halted) break;
    }
}

}  // namespace

Transcript run_generation(Generator& generator, const FeaturePool& pool,
                          const ReplayPolicy& policy) {
    Transcript transcript;
    StreamParser parser;
    bool halted = false;

    while (!halted) {
        std::optional<std::string> chunk;
        try {
            chunk = generator.next_chunk();
        } catch (const std::exception& e) {
            transcript.reason = TerminationReason::backend_error;
            transcript.backend_error_message = e.what();
            auto tail = parser.finish();
            append_events(std::move(tail), pool, policy, generator, transcript, halted);
            return transcript;
        }
        if (!chunk) break;
        append_events(parser.feed(*chunk), pool, policy, generator, transcript, halted);
    }
    if (!halted) {
        append_events(parser.finish(), pool, policy, generator, transcript, halted);
    }
    transcript.reason = halted ? TerminationReason::policy_halt : TerminationReason::completed;
    return transcript;
}

const char* sft_kind_name(SftElement::Kind k) {
    switch (k) {
        case SftElement::Kind::prompt_text: return "prompt_text";
        case SftElement::Kind::image_input: return "image_input";
        case SftElement::Kind::signal: return "signal";
        case SftElement::Kind::response_text: return "response_text";
        case SftElement::Kind::replayed_image: return "replayed_image";
    }
    return "unknown";
}

std::string SftSequence::to_jsonl() const {
    std::ostringstream out;
    for (const auto& el : elements) {
        nlohmann::json j;
        j["kind"] = sft_kind_name(el.kind);
        j["mask"] = el.loss_mask;
        j["token_count"] = el.token_count;
        if (!el.text.empty()) j["text"] = el.text;
        out << j.dump() << "\n";
    }
    return out.str();
}

SftBuildResult build_sft_sequence(const SampleRecord& sample, const FeaturePool& pool,
                                  const ReplayPolicy& policy) {
    SftSequence seq;
    seq.elements.push_back({SftElement::Kind::prompt_text, sample.question, 1, false});

    seq.elements.push_back({SftElement::Kind::image_input, "snapshot",
                            pool.snapshot_token_count(), false});
    for (size_t i = 0; i < pool.pooled_locals.size(); ++i) {
        seq.elements.push_back({SftElement::Kind::image_input, "crop_" + std::to_string(i),
                                int(pool.pooled_locals[i].cell_count()), false});
    }

    int replays = 0;
    for (const auto& ev : parse_stream(sample.reasoning)) {
        switch (ev.kind) {
            case StreamEvent::Kind::text_run:
                seq.elements.push_back({SftElement::Kind::response_text, ev.raw, 1, true});
                break;
            case StreamEvent::Kind::signal_complete: {
                const ReplaySignal& sig = *ev.signal;
                BoxResult validated = validate_box(sig.x1, sig.y1, sig.x2, sig.y2, pool.frame);
                if (!validated.ok()) {
                    return {std::nullopt, "invalid box in training signal: " +
                                              std::string(box_error_name(validated.error))};
                }
                if (replays >= policy.max_replays) {
                    return {std::nullopt, "training sample exceeds replay cap"};
                }
                seq.elements.push_back({SftElement::Kind::signal, ev.raw, 1, true});
                int count = replay_token_count(pool, validated.box);
                count = std::min(count, policy.max_tokens_per_replay);
                seq.elements.push_back({SftElement::Kind::replayed_image, "", count, false});
                ++replays;
                break;
            }
            case StreamEvent::Kind::signal_malformed:
            case StreamEvent::Kind::incomplete:
                return {std::nullopt, std::string("malformed signal in training text: ") +
                                          signal_error_name(ev.error)};
        }
    }
    seq.replayed_runs = replays;
    return {std::move(seq), ""};
}

}  // namespace vgr
