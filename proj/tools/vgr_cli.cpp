// Command-line front end: token budgets, replay simulation, detection-loss
// evaluation, dataset validation, and dataset statistics.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vgr/datakit.hpp"
#include "vgr/det_loss.hpp"
#include "vgr/feature_pool.hpp"
#include "vgr/replay_engine.hpp"

using nlohmann::json;

namespace {

struct BudgetArgs {
    int crops = 20;
    int patch = 336;
    int stride = 14;
    int snapshot_pool = 2;
    int local_pool = 4;
    int baseline_crops = 4;
    bool table = false;
};

int run_budget(const BudgetArgs& a) {
    vgr::PoolingConfig pooling;
    pooling.snapshot_stride = a.snapshot_pool;
    pooling.local_stride = a.local_pool;
    vgr::BudgetReport r = vgr::token_budget(a.crops, a.patch / a.stride, pooling, a.baseline_crops);
    if (a.table) {
        std::printf("snapshot_tokens  %d\n", r.snapshot_tokens);
        std::printf("local_tokens     %d\n", r.local_tokens);
        std::printf("total            %d\n", r.total);
        std::printf("baseline_total   %d\n", r.baseline_total);
        std::printf("ratio            %.4f\n", r.ratio);
    } else {
        json j = {{"snapshot_tokens", r.snapshot_tokens},
                  {"local_tokens", r.local_tokens},
                  {"total", r.total},
                  {"baseline_total", r.baseline_total},
                  {"ratio", r.ratio}};
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

struct SimulateArgs {
    std::string script;
    std::string out;
    int width = 336;
    int height = 336;
    int patch = 336;
    int stride = 14;
    int channels = 4;
    int max_replays = 8;
    int max_tokens = 256;
    std::string on_invalid = "skip";
};

std::vector<std::string> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open script: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    json j = json::parse(text, nullptr, false);
    if (!j.is_discarded()) {
        if (j.is_array()) return j.get<std::vector<std::string>>();
        if (j.is_object() && j.contains("chunks")) {
            return j["chunks"].get<std::vector<std::string>>();
        }
    }
    return {text};  // plain text file: one chunk
}

int run_simulate(const SimulateArgs& a) {
    vgr::GridSpec grid;
    grid.cols = a.width / a.patch;
    grid.rows = a.height / a.patch;
    grid.resized_w = a.width;
    grid.resized_h = a.height;
    grid.original_w = a.width;
    grid.original_h = a.height;
    if (grid.cols < 1 || grid.rows < 1 || grid.cols * a.patch != a.width ||
        grid.rows * a.patch != a.height) {
        std::cerr << "simulate: width/height must be positive multiples of --patch\n";
        return 2;
    }

    vgr::ToyCoordinateEncoder encoder(a.patch / a.stride, a.channels);
    vgr::FeaturePool pool = vgr::build_pool(grid, encoder, vgr::PoolingConfig{});

    vgr::ReplayPolicy policy;
    policy.max_replays = a.max_replays;
    policy.max_tokens_per_replay = a.max_tokens;
    policy.on_invalid = a.on_invalid == "halt" ? vgr::ReplayPolicy::OnInvalid::halt
                                               : vgr::ReplayPolicy::OnInvalid::skip;

    vgr::ScriptedGenerator generator(load_script(a.script));
    vgr::Transcript transcript = vgr::run_generation(generator, pool, policy);

    if (a.out.empty()) {
        std::cout << transcript.to_jsonl();
    } else {
        std::ofstream out(a.out);
        out << transcript.to_jsonl();
        if (!out) {
            std::cerr << "simulate: cannot write " << a.out << "\n";
            return 1;
        }
    }
    return 0;
}

struct LossArgs {
    std::vector<double> pred;
    std::vector<double> gt;
    double beta = vgr::kDefaultDetBeta;
    std::string form = "corner";
    bool table = false;
};

int run_loss(const LossArgs& a) {
    auto to_center = [&](const std::vector<double>& v) {
        if (a.form == "center") return vgr::CenterBox{v[0], v[1], v[2], v[3]};
        return vgr::corners_to_center(vgr::PixelBox{v[0], v[1], v[2], v[3]});
    };
    vgr::LossValue r = vgr::det_loss(to_center(a.pred), to_center(a.gt), a.beta);
    if (a.table) {
        std::printf("l1     %.6f\ngiou   %.6f\ntotal  %.6f\n", r.l1, r.giou, r.total);
    } else {
        json j = {{"l1", r.l1}, {"giou", r.giou}, {"total", r.total}, {"beta", r.beta}};
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

struct ValidateArgs {
    std::string dataset;
    bool mock_judge = false;
    uint64_t seed = 0;
    std::string judge_url;
    std::string image_dir;
    std::string out;
    std::string report;
    double expand_margin = vgr::kDefaultExpandMargin;
    int frame_width = 336;
    int frame_height = 336;
};

int run_validate(const ValidateArgs& a) {
    std::unique_ptr<vgr::JudgeClient> judge;
    if (a.mock_judge || a.judge_url.empty()) {
        judge = std::make_unique<vgr::MockJudge>(a.seed);
    } else {
        judge = std::make_unique<vgr::HttpJudge>(a.judge_url);
    }

    vgr::CurationConfig config;
    config.expand_margin = a.expand_margin;
    config.image_dir = a.image_dir;
    config.default_frame = {a.frame_width, a.frame_height, a.frame_width, 1};

    auto records = vgr::read_jsonl(a.dataset);
    vgr::PipelineResult result = vgr::run_pipeline(records, *judge, config);

    std::string report = result.report.to_json();
    if (a.report.empty()) {
        std::cout << report << "\n";
    } else {
        std::ofstream out(a.report);
        out << report << "\n";
    }
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        for (const auto& s : result.survivors) out << vgr::sample_to_json(s) << "\n";
    }
    return result.report.rejected.empty() ? 0 : 1;
}

int run_stats(const std::string& dataset, bool table) {
    vgr::StatsTable t = vgr::dataset_stats(vgr::read_jsonl(dataset));
    if (table) {
        for (const auto& [k, v] : t.per_source) std::printf("source %-20s %d\n", k.c_str(), v);
        for (const auto& [k, v] : t.per_type) std::printf("type   %-20s %d\n", k.c_str(), v);
        std::printf("total  %d\n", t.total);
    } else {
        std::cout << t.to_json() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective visual feature replay toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (TOML/INI key=value); flags win");
    app.allow_config_extras(true);

    BudgetArgs budget;
    auto* cmd_budget = app.add_subcommand("budget", "Token budget accounting");
    cmd_budget->add_option("--crops", budget.crops, "Local crop count");
    cmd_budget->add_option("--patch", budget.patch, "Crop size p in pixels");
    cmd_budget->add_option("--stride", budget.stride, "Vision patch stride s in pixels");
    cmd_budget->add_option("--snapshot-pool", budget.snapshot_pool, "Snapshot pooling stride");
    cmd_budget->add_option("--local-pool", budget.local_pool, "Local crop pooling stride");
    cmd_budget->add_option("--baseline-crops", budget.baseline_crops, "Unpooled baseline crops");
    cmd_budget->add_flag("--table", budget.table, "Human-readable output");

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Replay-injection run over a scripted generator");
    cmd_sim->add_option("script", sim.script, "Script file (JSON chunks or plain text)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--out", sim.out, "Transcript JSONL output (default stdout)");
    cmd_sim->add_option("--width", sim.width, "Resized image width");
    cmd_sim->add_option("--height", sim.height, "Resized image height");
    cmd_sim->add_option("--patch", sim.patch, "Crop size p");
    cmd_sim->add_option("--stride", sim.stride, "Vision patch stride s");
    cmd_sim->add_option("--channels", sim.channels, "Feature channels");
    cmd_sim->add_option("--max-replays", sim.max_replays, "Replay cap per generation");
    cmd_sim->add_option("--max-tokens-per-replay", sim.max_tokens, "Token cap per replay");
    cmd_sim->add_option("--on-invalid", sim.on_invalid, "skip|halt")
        ->check(CLI::IsMember({"skip", "halt"}));

    LossArgs loss;
    auto* cmd_loss = app.add_subcommand("loss", "Detection loss for a box pair");
    cmd_loss->add_option("--pred", loss.pred, "Predicted box x1,y1,x2,y2 (normalized)")
        ->required()
        ->delimiter(',')
        ->expected(4);
    cmd_loss->add_option("--gt", loss.gt, "Ground-truth box x1,y1,x2,y2 (normalized)")
        ->required()
        ->delimiter(',')
        ->expected(4);
    cmd_loss->add_option("--beta", loss.beta, "GIoU weight");
    cmd_loss->add_option("--form", loss.form, "corner|center")
        ->check(CLI::IsMember({"corner", "center"}));
    cmd_loss->add_flag("--table", loss.table, "Human-readable output");

    ValidateArgs val;
    auto* cmd_val = app.add_subcommand("validate", "Run the curation pipeline on a JSONL dataset");
    cmd_val->add_option("dataset", val.dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
    cmd_val->add_flag("--mock-judge", val.mock_judge, "Use the deterministic in-process judge");
    cmd_val->add_option("--seed", val.seed, "Mock judge seed");
    cmd_val->add_option("--judge-url", val.judge_url, "Remote judge endpoint")
        ->envname("VGR_JUDGE_URL");
    cmd_val->add_option("--image-dir", val.image_dir, "Directory with sample images (PPM)");
    cmd_val->add_option("--out", val.out, "Write surviving samples to this JSONL file");
    cmd_val->add_option("--report", val.report, "Write the report here instead of stdout");
    cmd_val->add_option("--expand-margin", val.expand_margin, "Grounding crop expansion fraction");
    cmd_val->add_option("--frame-width", val.frame_width, "Fallback frame width");
    cmd_val->add_option("--frame-height", val.frame_height, "Fallback frame height");

    std::string stats_dataset;
    bool stats_table = false;
    auto* cmd_stats = app.add_subcommand("stats", "Per-source / per-type dataset counts");
    cmd_stats->add_option("dataset", stats_dataset, "JSONL dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_stats->add_flag("--table", stats_table, "Human-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*cmd_budget) return run_budget(budget);
        if (*cmd_sim) return run_simulate(sim);
        if (*cmd_loss) return run_loss(loss);
        if (*cmd_val) return run_validate(val);
        if (*cmd_stats) return run_stats(stats_dataset, stats_table);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
