#include <random>

#include <doctest.h>

#include "vgr/replay_engine.hpp"

using namespace vgr;

namespace {

FeaturePool toy_pool(int rows = 1, int cols = 1, int channels = 1) {
    GridSpec grid;
    grid.rows = rows;
    grid.cols = cols;
    grid.resized_w = cols * 336;
    grid.resized_h = rows * 336;
    grid.original_w = grid.resized_w;
    grid.original_h = grid.resized_h;
    ToyCoordinateEncoder encoder(24, channels);
    return build_pool(grid, encoder, PoolingConfig{});
}

struct ThrowingGenerator : Generator {
    int remaining;
    explicit ThrowingGenerator(int chunks_before_failure) : remaining(chunks_before_failure) {}
    std::optional<std::string> next_chunk() override {
        if (remaining-- <= 0) throw std::runtime_error("backend fell over");
        return std::string("chunk <sot>[0,0,28,28]<eot> ");
    }
    void accept_injection(std::span<const float>, int, int) override {}
};

}  // namespace

TEST_CASE("single replay injection") {
    FeaturePool pool = toy_pool();
    ScriptedGenerator gen({"see <sot>[0,0,28,28]<eot> then answer"});
    Transcript t = run_generation(gen, pool);

    CHECK(t.reason == TerminationReason::completed);
    CHECK(t.replay_count == 1);
    REQUIRE(gen.injections().size() == 1);
    // 2x2 cells pooled 2x2 -> one token
    CHECK(gen.injections()[0].token_count == 1);
    CHECK(t.raw_output() == "see <sot>[0,0,28,28]<eot> then answer");
}

TEST_CASE("injected values equal replay_tokens output") {
    FeaturePool pool = toy_pool(2, 2);
    ScriptedGenerator gen({"a<sot>[14,14,", "200,200]<eot>b<sot>[0,0,672,672]<eot>"});
    Transcript t = run_generation(gen, pool);
    REQUIRE(gen.injections().size() == 2);

    std::vector<std::vector<float>> expected = {
        replay_tokens(pool, validate_box(14, 14, 200, 200, pool.frame).box),
        replay_tokens(pool, validate_box(0, 0, 672, 672, pool.frame).box),
    };
    // second injection exceeds the default 256-token cap and is truncated
    expected[1].resize(256 * pool.unified.channels);
    CHECK(gen.injections()[0].values == expected[0]);
    CHECK(gen.injections()[1].values == expected[1]);

    int replay_seen = 0;
    for (const auto& el : t.elements) {
        if (el.kind == TranscriptElement::Kind::replay) {
            CHECK(el.tokens == expected[replay_seen]);
            ++replay_seen;
        }
    }
    CHECK(replay_seen == 2);
}

TEST_CASE("replay cap") {
    FeaturePool pool = toy_pool();
    std::vector<std::string> chunks;
    for (int i = 0; i < 9; ++i) chunks.push_back("<sot>[0,0,30,30]<eot> ");
    ScriptedGenerator gen(chunks);
    Transcript t = run_generation(gen, pool);
    CHECK(t.replay_count == 8);
    CHECK(t.signals_over_cap == 1);
    CHECK(gen.injections().size() == 8);
    CHECK(t.reason == TerminationReason::completed);
}

TEST_CASE("invalid signal handling") {
    FeaturePool pool = toy_pool();
    SUBCASE("skip runs to completion") {
        ScriptedGenerator gen({"x<sot>[1,2]<eot>y"});
        Transcript t = run_generation(gen, pool);
        CHECK(t.reason == TerminationReason::completed);
        CHECK(t.replay_count == 0);
        CHECK(gen.injections().empty());
        CHECK(t.raw_output() == "x<sot>[1,2]<eot>y");
    }
    SUBCASE("halt stops the run") {
        ReplayPolicy policy;
        policy.on_invalid = ReplayPolicy::OnInvalid::halt;
        ScriptedGenerator gen({"x<sot>[1,2]<eot>y"});
        Transcript t = run_generation(gen, pool, policy);
        CHECK(t.reason == TerminationReason::policy_halt);
    }
    SUBCASE("out-of-frame box is recorded uninjected") {
        ScriptedGenerator gen({"x<sot>[400,400,500,500]<eot>y"});
        Transcript t = run_generation(gen, pool);
        CHECK(t.replay_count == 0);
        CHECK(t.raw_output() == "x<sot>[400,400,500,500]<eot>y");
    }
}

TEST_CASE("backend failure terminates with reason") {
    FeaturePool pool = toy_pool();
    ThrowingGenerator gen(2);
    Transcript t = run_generation(gen, pool);
    CHECK(t.reason == TerminationReason::backend_error);
    CHECK(t.backend_error_message == "backend fell over");
    CHECK(t.replay_count == 2);
}

TEST_CASE("same script, pool, policy give identical transcripts") {
    FeaturePool pool = toy_pool(2, 1);
    std::vector<std::string> script = {"a <sot>[5,5,", "100,100]<eot> b"};
    ScriptedGenerator g1(script), g2(script);
    Transcript t1 = run_generation(g1, pool), t2 = run_generation(g2, pool);
    CHECK(t1.to_jsonl() == t2.to_jsonl());
}

TEST_CASE("sft sequence assembly") {
    FeaturePool pool = toy_pool();  // 1x1 grid: snapshot-only input
    SampleRecord sample;
    sample.id = "s1";
    sample.question = "what is in the corner?";

    SUBCASE("one signal over a 4x4-cell region") {
        sample.reasoning = "look at <sot>[14,14,70,70]<eot> to see it. Final answer: a cat";
        auto result = build_sft_sequence(sample, pool);
        REQUIRE(result.ok());
        const SftSequence& seq = *result.sequence;

        int replay_runs = 0, image_tokens = 0;
        for (const auto& el : seq.elements) {
            switch (el.kind) {
                case SftElement::Kind::signal:
                case SftElement::Kind::response_text:
                    CHECK(el.loss_mask);
                    break;
                case SftElement::Kind::replayed_image:
                    CHECK(!el.loss_mask);
                    CHECK(el.token_count == 4);  // 4x4 cells pooled 2x2
                    ++replay_runs;
                    break;
                case SftElement::Kind::image_input:
                    CHECK(!el.loss_mask);
                    image_tokens += el.token_count;
                    break;
                case SftElement::Kind::prompt_text:
                    CHECK(!el.loss_mask);
                    break;
            }
        }
        CHECK(replay_runs == 1);
        CHECK(image_tokens == 144);

        // the replayed run immediately follows its signal
        for (size_t i = 0; i < seq.elements.size(); ++i) {
            if (seq.elements[i].kind == SftElement::Kind::signal) {
                REQUIRE(i + 1 < seq.elements.size());
                CHECK(seq.elements[i + 1].kind == SftElement::Kind::replayed_image);
            }
        }
    }

    SUBCASE("no signals: every response element is supervised") {
        sample.reasoning = "plain reasoning. Final answer: 42";
        auto result = build_sft_sequence(sample, pool);
        REQUIRE(result.ok());
        for (const auto& el : result.sequence->elements) {
            bool expect_mask = el.kind == SftElement::Kind::response_text;
            CHECK(el.loss_mask == expect_mask);
            CHECK(el.kind != SftElement::Kind::replayed_image);
        }
    }

    SUBCASE("malformed training signal rejects the sample") {
        sample.reasoning = "bad <sot>[1,2]<eot> box";
        auto result = build_sft_sequence(sample, pool);
        CHECK(!result.ok());
        CHECK(!result.error.empty());
    }
}
