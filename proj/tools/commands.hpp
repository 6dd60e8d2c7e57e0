#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace blinkwild::cli {

/// Every knob a subcommand can take. Each command reads the fields it needs;
/// the whole config is serialised into the outputs with its hash.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path manifest;
    std::filesystem::path model;
    std::filesystem::path out;
    std::filesystem::path frames;
    std::filesystem::path predictions;
    std::filesystem::path truth;

    // Dataset.
    int target_len = 10;
    int train_blink = 100;
    int train_nonblink = 100;
    int test_blink = 40;
    int test_nonblink = 40;
    int clip_length = 10;
    int streams = 0;
    int stream_length = 50;
    std::string split = "test";

    // Model and training.
    int layers = 2;
    int scales = 2;
    int hidden = 64;
    int margin = 4;
    std::string loss = "asoftmax";
    int steps = 50000;
    int batch = 32;
    int patch = 24;

    // Detection and evaluation.
    int window = 10;
    int stride = 1;
    double conf_thresh = 0.5;
    double iou_thresh = 0.33;
    double track_thresh = 0.25;
    double overlap = 0.5;

    // Benchmark.
    int bench_frames = 600;
    int warmup = 50;
};

/// Canonical JSON of every field, tagged with the subcommand name.
std::string config_json(const RunConfig& config, const std::string& command);

/// FNV-1a 64 of config_json, as 16 lowercase hex digits.
std::string config_hash(const RunConfig& config, const std::string& command);

int cmd_polish(const RunConfig& config, std::ostream& log);
int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);
int cmd_detect(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);

/// Parses arguments and dispatches. Returns the process exit code: 0 on
/// success, 1 on a runtime error, the parser's code on bad usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blinkwild::cli
