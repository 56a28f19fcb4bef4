#include <random>
#include <string>

#include <doctest.h>

#include "vgr/replay_parser.hpp"

using namespace vgr;

namespace {

std::string reconstruct(const std::vector<StreamEvent>& events) {
    std::string out;
    for (const auto& ev : events) out += ev.raw;
    return out;
}

// Event sequence with adjacent text runs coalesced, for chunking comparisons.
std::vector<StreamEvent> coalesce(std::vector<StreamEvent> events) {
    std::vector<StreamEvent> out;
    for (auto& ev : events) {
        if (ev.kind == StreamEvent::Kind::text_run && !out.empty() &&
            out.back().kind == StreamEvent::Kind::text_run) {
            out.back().raw += ev.raw;
        } else {
            out.push_back(std::move(ev));
        }
    }
    return out;
}

std::vector<StreamEvent> parse_chunked(const std::string& input,
                                       const std::vector<size_t>& cuts) {
    StreamParser parser;
    std::vector<StreamEvent> events;
    size_t pos = 0;
    for (size_t cut : cuts) {
        auto part = parser.feed(std::string_view(input).substr(pos, cut - pos));
        events.insert(events.end(), part.begin(), part.end());
        pos = cut;
    }
    auto part = parser.feed(std::string_view(input).substr(pos));
    events.insert(events.end(), part.begin(), part.end());
    auto tail = parser.finish();
    events.insert(events.end(), tail.begin(), tail.end());
    return coalesce(std::move(events));
}

bool events_equal(const std::vector<StreamEvent>& a, const std::vector<StreamEvent>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].kind != b[i].kind || a[i].raw != b[i].raw || a[i].error != b[i].error)
            return false;
        if (a[i].signal.has_value() != b[i].signal.has_value()) return false;
        if (a[i].signal && (a[i].signal->x1 != b[i].signal->x1 ||
                            a[i].signal->y2 != b[i].signal->y2))
            return false;
    }
    return true;
}

std::string random_input(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces = {
        "plain text ", "<sot>", "<eot>", "[1, 2, 3, 4]", "<so", "t>", "<eo",
        "{\"bbox_2d\":[5,6,7,8],\"label\":\"cat\"}", "[9,9]", "more words", "<", ">", "[", "]",
        "<sot>[10, 20, 110, 220]<eot>", "\n", "x"};
    std::uniform_int_distribution<size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> len(0, 8);
    std::string out;
    int n = len(rng);
    for (int i = 0; i < n; ++i) out += pieces[pick(rng)];
    return out;
}

}  // namespace

TEST_CASE("signal body parsing") {
    SUBCASE("bare array") {
        auto r = parse_signal_body("[10, 20, 110, 220]");
        REQUIRE(r.ok());
        CHECK(r.signal->x1 == 10);
        CHECK(r.signal->y1 == 20);
        CHECK(r.signal->x2 == 110);
        CHECK(r.signal->y2 == 220);
        CHECK(r.signal->format == SignalFormat::bare_array);
        CHECK(!r.signal->label);
    }
    SUBCASE("json object") {
        auto r = parse_signal_body(R"({"bbox_2d":[10,20,110,220],"label":"cat"})");
        REQUIRE(r.ok());
        CHECK(r.signal->x2 == 110);
        CHECK(r.signal->format == SignalFormat::json_object);
        CHECK(r.signal->label == "cat");
    }
    SUBCASE("unknown json keys are ignored") {
        auto r = parse_signal_body(R"({"bbox_2d":[1,2,3,4],"extra":true})");
        CHECK(r.ok());
    }
    SUBCASE("errors") {
        CHECK(parse_signal_body("[1, 2, three, 4]").error == SignalError::not_a_number);
        CHECK(parse_signal_body("[1, 2]").error == SignalError::arity);
        CHECK(parse_signal_body("[1,2,3,4,5]").error == SignalError::arity);
        CHECK(parse_signal_body(R"({"bbox_2d":[1,2,3]})").error == SignalError::arity);
        CHECK(parse_signal_body(R"({"bbox":[1,2,3,4]})").error == SignalError::bad_json);
        CHECK(parse_signal_body("{not json").error == SignalError::bad_json);
        CHECK(parse_signal_body("").error == SignalError::empty_body);
        CHECK(parse_signal_body("  [1,2,3,nan]  ").error == SignalError::non_finite);
    }
    SUBCASE("decimals and whitespace") {
        auto r = parse_signal_body("  [ 1.5 , 2.25, 3, 4 ]  ");
        REQUIRE(r.ok());
        CHECK(r.signal->x1 == 1.5);
        CHECK(r.signal->y1 == 2.25);
    }
    SUBCASE("swapped coordinate order mode") {
        auto r = parse_signal_body("[1, 2, 3, 4]", /*swap_xy_order=*/true);
        REQUIRE(r.ok());
        CHECK(r.signal->x1 == 1);
        CHECK(r.signal->x2 == 2);
        CHECK(r.signal->y1 == 3);
        CHECK(r.signal->y2 == 4);
    }
}

TEST_CASE("stream events") {
    SUBCASE("passthrough") {
        auto events = parse_stream("no signals here");
        REQUIRE(events.size() == 1);
        CHECK(events[0].kind == StreamEvent::Kind::text_run);
        CHECK(events[0].raw == "no signals here");
    }
    SUBCASE("split markers reassemble") {
        StreamParser parser;
        auto e1 = parser.feed("<so");
        auto e2 = parser.feed("t>[1,2,3,4]<eo");
        auto e3 = parser.feed("t>");
        CHECK(e1.empty());
        CHECK(e2.empty());
        REQUIRE(e3.size() == 1);
        CHECK(e3[0].kind == StreamEvent::Kind::signal_complete);
        CHECK(e3[0].signal->x1 == 1);
        CHECK(e3[0].signal->y2 == 4);
        CHECK(parser.finish().empty());
    }
    SUBCASE("wrong arity is malformed, not fatal") {
        auto events = parse_stream("<sot>[1,2]<eot>tail");
        REQUIRE(events.size() == 2);
        CHECK(events[0].kind == StreamEvent::Kind::signal_malformed);
        CHECK(events[0].error == SignalError::arity);
        CHECK(events[1].raw == "tail");
    }
    SUBCASE("stray eot") {
        auto events = parse_stream("abc<eot>def");
        REQUIRE(events.size() == 3);
        CHECK(events[1].kind == StreamEvent::Kind::signal_malformed);
        CHECK(events[1].error == SignalError::stray_eot);
    }
    SUBCASE("unclosed sot is incomplete") {
        auto events = parse_stream("text <sot>[1,2,3");
        REQUIRE(events.size() == 2);
        CHECK(events[0].kind == StreamEvent::Kind::text_run);
        CHECK(events[1].kind == StreamEvent::Kind::incomplete);
        CHECK(events[1].raw == "<sot>[1,2,3");
    }
    SUBCASE("byte spans are recorded") {
        auto events = parse_stream("ab<sot>[1,2,3,4]<eot>");
        REQUIRE(events.size() == 2);
        CHECK(events[1].signal->span_begin == 2);
        CHECK(events[1].signal->span_end == 21);
    }
}

TEST_CASE("chunking invariance and reconstruction over random inputs") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        std::string input = random_input(rng);
        auto whole = coalesce(parse_stream(input));
        CHECK(reconstruct(whole) == input);

        std::vector<size_t> cuts;
        if (!input.empty()) {
            std::uniform_int_distribution<size_t> pos(0, input.size());
            std::uniform_int_distribution<int> ncuts(0, 6);
            int n = ncuts(rng);
            for (int i = 0; i < n; ++i) cuts.push_back(pos(rng));
            std::sort(cuts.begin(), cuts.end());
        }
        auto chunked = parse_chunked(input, cuts);
        CHECK(events_equal(whole, chunked));
    }
}

TEST_CASE("fuzzing arbitrary bytes never aborts") {
    std::mt19937_64 rng(123);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<size_t> len(0, 64);
    for (int trial = 0; trial < 10000; ++trial) {
        std::string input;
        size_t n = len(rng);
        for (size_t i = 0; i < n; ++i) input += char(byte(rng));
        auto events = parse_stream(input);
        CHECK(reconstruct(events) == input);
    }
}

TEST_CASE("render round-trips") {
    SUBCASE("canonical forms") {
        ReplaySignal s;
        s.x1 = 1; s.y1 = 2; s.x2 = 3; s.y2 = 4;
        CHECK(render_signal(s, SignalFormat::bare_array) == "<sot>[1, 2, 3, 4]<eot>");
        s.label = "cat";
        CHECK(render_signal(s, SignalFormat::json_object) ==
              R"(<sot>{"bbox_2d":[1,2,3,4],"label":"cat"}<eot>)");
    }
    SUBCASE("random signals round-trip exactly") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> coord(-10, 1000);
        std::uniform_int_distribution<int> fmt(0, 1), integral(0, 1), labeled(0, 1);
        for (int trial = 0; trial < 1000; ++trial) {
            ReplaySignal s;
            auto gen = [&] {
                double v = coord(rng);
                return integral(rng) ? std::round(v) : v;
            };
            s.x1 = gen(); s.y1 = gen(); s.x2 = gen(); s.y2 = gen();
            SignalFormat f = fmt(rng) ? SignalFormat::json_object : SignalFormat::bare_array;
            if (f == SignalFormat::json_object && labeled(rng)) s.label = "thing";
            std::string text = render_signal(s, f);
            auto events = parse_stream(text);
            REQUIRE(events.size() == 1);
            REQUIRE(events[0].kind == StreamEvent::Kind::signal_complete);
            const ReplaySignal& back = *events[0].signal;
            CHECK(back.x1 == s.x1);
            CHECK(back.y1 == s.y1);
            CHECK(back.x2 == s.x2);
            CHECK(back.y2 == s.y2);
            CHECK(back.label == s.label);
            CHECK(back.format == f);
        }
    }
}

TEST_CASE("token-id front end") {
    TokenStreamParser parser(1001, 1002);
    std::vector<StreamEvent> events;
    auto push = [&](std::vector<StreamEvent> evs) {
        events.insert(events.end(), evs.begin(), evs.end());
    };
    push(parser.feed_token(7, "look here "));
    push(parser.feed_token(1001, ""));
    push(parser.feed_token(8, "[1,2,"));
    push(parser.feed_token(9, "3,4]"));
    push(parser.feed_token(1002, ""));
    push(parser.finish());
    REQUIRE(events.size() == 2);
    CHECK(events[0].raw == "look here ");
    CHECK(events[1].kind == StreamEvent::Kind::signal_complete);
    CHECK(events[1].signal->y2 == 4);
}
