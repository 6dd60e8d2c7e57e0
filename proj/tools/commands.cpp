#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "blinkwild/dataset.hpp"
#include "blinkwild/error.hpp"
#include "blinkwild/eval.hpp"
#include "blinkwild/io.hpp"
#include "blinkwild/mslstm.hpp"
#include "blinkwild/pipeline.hpp"
#include "blinkwild/random.hpp"
#include "blinkwild/synth.hpp"

namespace blinkwild::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kManifestName = "manifest.tsv";

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, message);
}

void require_path(const fs::path& p, const char* flag) {
    require(!p.empty(), std::string(flag) + " is required");
}

// Directory output built under `<out>.partial` and renamed into place on
// commit. An existing target is only replaced when it is empty or holds a
// previous dataset (has a manifest); anything else is left alone.
class StagedDirectory {
public:
    explicit StagedDirectory(fs::path target) : target_(std::move(target)) {
        require_path(target_, "--out");
        if (fs::exists(target_)) {
            const bool replaceable =
                fs::is_directory(target_) && (fs::is_empty(target_) || fs::exists(target_ / kManifestName));
            require(replaceable, "refusing to replace " + target_.string() + ": not an earlier output directory");
        }
        staging_ = target_;
        staging_ += ".partial";
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    StagedDirectory(const StagedDirectory&) = delete;
    StagedDirectory& operator=(const StagedDirectory&) = delete;
    ~StagedDirectory() {
        if (!committed_) {
            std::error_code ignored;
            fs::remove_all(staging_, ignored);
        }
    }

    const fs::path& path() const { return staging_; }

    void commit() {
        fs::remove_all(target_);
        fs::rename(staging_, target_);
        committed_ = true;
    }

private:
    fs::path target_;
    fs::path staging_;
    bool committed_ = false;
};

MsLstmHyper hyper_from(const RunConfig& c) {
    MsLstmHyper h;
    h.layers = c.layers;
    h.scales = c.scales;
    h.hidden = c.hidden;
    h.margin = c.margin;
    validate_hyper(h);
    return h;
}

EyeSize patch_from(const RunConfig& c) {
    require(c.patch >= 3, "--patch must be at least 3");
    return {c.patch, c.patch};
}

TrackParams track_from(const RunConfig& c) {
    TrackParams p;
    p.relocalize_below = c.track_thresh;
    return p;
}

Clip load_entry(const Manifest& manifest, const ManifestEntry& entry) {
    try {
        return load_clip(manifest.resolve(entry), entry.label, entry.source_id);
    } catch (const Error& e) {
        throw Error(e.kind(), "clip " + entry.source_id + " (" + entry.clip_dir.generic_string() + "): " + e.what());
    }
}

std::vector<GrayFrame> load_frame_dir(const fs::path& dir) {
    std::vector<GrayFrame> frames;
    for (std::size_t i = 0;; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04zu.pgm", i);
        const fs::path p = dir / name;
        if (!fs::exists(p)) break;
        frames.push_back(read_pgm(p));
    }
    if (frames.empty()) throw Error(ErrorKind::MissingAsset, dir.string() + " holds no frame_0000.pgm");
    return frames;
}

struct Stats {
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
};

Stats summarize(std::vector<double> ms) {
    Stats s;
    if (ms.empty()) return s;
    std::sort(ms.begin(), ms.end());
    s.mean = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
    const std::size_t n = ms.size();
    s.median = n % 2 == 1 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95 = ms[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

void write_config(const RunConfig& config, const std::string& command, const fs::path& path) {
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(config_json(config, command));
    j["config_hash"] = config_hash(config, command);
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace

std::string config_json(const RunConfig& c, const std::string& command) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = c.seed;
    j["manifest"] = c.manifest.generic_string();
    j["model"] = c.model.generic_string();
    j["out"] = c.out.generic_string();
    j["frames"] = c.frames.generic_string();
    j["predictions"] = c.predictions.generic_string();
    j["truth"] = c.truth.generic_string();
    j["target_len"] = c.target_len;
    j["train_blink"] = c.train_blink;
    j["train_nonblink"] = c.train_nonblink;
    j["test_blink"] = c.test_blink;
    j["test_nonblink"] = c.test_nonblink;
    j["clip_length"] = c.clip_length;
    j["streams"] = c.streams;
    j["stream_length"] = c.stream_length;
    j["split"] = c.split;
    j["layers"] = c.layers;
    j["scales"] = c.scales;
    j["hidden"] = c.hidden;
    j["margin"] = c.margin;
    j["loss"] = c.loss;
    j["steps"] = c.steps;
    j["batch"] = c.batch;
    j["patch"] = c.patch;
    j["window"] = c.window;
    j["stride"] = c.stride;
    j["conf_thresh"] = c.conf_thresh;
    j["iou_thresh"] = c.iou_thresh;
    j["track_thresh"] = c.track_thresh;
    j["overlap"] = c.overlap;
    j["bench_frames"] = c.bench_frames;
    j["warmup"] = c.warmup;
    return j.dump();
}

std::string config_hash(const RunConfig& config, const std::string& command) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_json(config, command)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int cmd_polish(const RunConfig& config, std::ostream& log) {
    require_path(config.manifest, "--manifest");
    require(config.target_len >= 1, "--target-len must be positive");
    const Manifest input = load_manifest(config.manifest);
    StagedDirectory out(config.out);
    Manifest result;
    result.base_dir = out.path();
    std::set<std::string> names;
    for (const ManifestEntry& entry : input.entries) {
        const Clip clip = load_entry(input, entry);
        const std::string name = entry.clip_dir.filename().string();
        require(names.insert(name).second, "two manifest entries share the clip directory name " + name);
        const std::size_t closed = clip.closed_index.value_or((clip.length() - 1) / 2);
        try {
            save_clip(polish_clip(clip, config.target_len, closed), out.path() / "clips" / name);
        } catch (const Error& e) {
            throw Error(e.kind(), "clip " + entry.source_id + ": " + e.what());
        }
        result.entries.push_back({fs::path("clips") / name, entry.label, entry.split, entry.source_id});
    }
    save_manifest(result, out.path() / kManifestName);
    out.commit();
    log << "polished " << result.entries.size() << " clips to " << config.target_len << " frames\n";
    return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
    require(config.train_blink >= 0 && config.train_nonblink >= 0 && config.test_blink >= 0 &&
                config.test_nonblink >= 0,
            "clip counts must be non-negative");
    require(config.clip_length >= 3, "--length must be at least 3");
    StagedDirectory out(config.out);
    Manifest manifest;
    struct Group {
        Split split;
        Label label;
        int count;
        std::uint64_t stream;
    };
    // Blink and non-blink clip i of one split share a seed, hence an identity.
    const Group groups[] = {
        {Split::Train, Label::Blink, config.train_blink, 1'000'000},
        {Split::Train, Label::NonBlink, config.train_nonblink, 1'000'000},
        {Split::Test, Label::Blink, config.test_blink, 2'000'000},
        {Split::Test, Label::NonBlink, config.test_nonblink, 2'000'000},
    };
    for (const Group& g : groups) {
        for (int i = 0; i < g.count; ++i) {
            const std::uint64_t seed = mix_seed(config.seed, g.stream + static_cast<std::uint64_t>(i));
            const Clip clip = synth_clip(seed, g.label, config.clip_length);
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%s_%04d", std::string(to_string(g.split)).c_str(),
                          g.label == Label::Blink ? "blink" : "nonblink", i);
            save_clip(clip, out.path() / "clips" / name);
            manifest.entries.push_back({fs::path("clips") / name, g.label, g.split, clip.source_id});
        }
    }
    require(config.streams >= 0, "--streams must be non-negative");
    require(config.streams == 0 || config.stream_length >= 30, "--stream-length must be at least 30");
    for (int i = 0; i < config.streams; ++i) {
        // Even streams hold one blink somewhere in the middle, odd ones none.
        const std::uint64_t seed = mix_seed(config.seed, 3'000'000 + static_cast<std::uint64_t>(i));
        std::vector<double> centers;
        if (i % 2 == 0) centers.push_back(Rng(mix_seed(seed, 11)).uniform(12.0, config.stream_length - 13.0));
        const SynthStream stream = synth_stream(seed, config.stream_length, centers);
        char name[32];
        std::snprintf(name, sizeof(name), "stream_%04d", i);
        const fs::path dir = out.path() / "streams" / name;
        save_clip(stream.clip, dir);
        std::string truth = "eye,start,end\n";
        for (const FrameInterval& b : stream.blinks) {
            for (Eye eye : kEyes) {
                truth += std::string(to_string(eye)) + ',' + std::to_string(b.start) + ',' + std::to_string(b.end) + '\n';
            }
        }
        write_file_atomic(dir / "truth.csv", truth);
    }
    save_manifest(manifest, out.path() / kManifestName);
    out.commit();
    log << "wrote " << manifest.entries.size() << " synthetic clips and " << config.streams << " streams\n";
    return 0;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
    require_path(config.manifest, "--manifest");
    require_path(config.out, "--out");
    const MsLstmHyper hyper = hyper_from(config);
    const EyeSize patch = patch_from(config);
    const Manifest manifest = load_manifest(config.manifest);
    std::vector<TrainingSample> samples;
    for (const ManifestEntry& entry : manifest.entries) {
        if (entry.split != Split::Train) continue;
        const Clip clip = load_entry(manifest, entry);
        // Annotated crops plus the tracked crops verification will feed the model.
        for (Eye eye : kEyes) {
            if (auto seq = annotated_sequence(clip, eye, patch)) samples.push_back({std::move(*seq), clip.label});
        }
        for (auto& seq : tracked_sequences(clip, AnnotationLocator(clip.annotations), {track_from(config), patch})) {
            if (seq) samples.push_back({std::move(*seq), clip.label});
        }
    }
    TrainConfig tc;
    tc.max_steps = config.steps;
    tc.batch_size = config.batch;
    tc.seed = config.seed;
    tc.loss = parse_loss_kind(config.loss);
    const auto start = Clock::now();
    const TrainResult result = train(hyper, samples, tc, [&](int step, double loss) {
        if (step % 1000 == 0 || step == tc.max_steps) log << "step " << step << " loss " << format_double(loss) << '\n';
    });
    fs::create_directories(config.out);
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        csv += std::to_string(i + 1) + ',' + format_double(result.loss_history[i]) + '\n';
    }
    write_file_atomic(config.out / "loss.csv", csv);
    save_model(result.model, config.out / "model.msl");
    write_config(config, "train", config.out / "train_config.json");
    log << "trained on " << samples.size() << " eye sequences in " << seconds_since(start) << " s\n";
    return 0;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    require_path(config.manifest, "--manifest");
    require_path(config.model, "--model");
    require_path(config.out, "--out");
    require(config.split == "train" || config.split == "test" || config.split == "all",
            "--split must be train, test or all");
    const auto start = Clock::now();
    const Manifest manifest = load_manifest(config.manifest);
    const MsLstmModel model = load_model(config.model);
    VerifyParams params;
    params.track = track_from(config);
    params.patch_size = patch_from(config);

    EvalReport report;
    std::ostringstream rows;
    rows << "source_id,clip,label,eye,predicted,confidence,lost,localization\n";
    for (const ManifestEntry& entry : manifest.entries) {
        if (config.split != "all" && to_string(entry.split) != config.split) continue;
        const Clip clip = load_entry(manifest, entry);
        const AnnotationLocator locator(clip.annotations);
        const ClipVerification v = verify_clip_tracked(clip, locator, model, params);
        for (Eye eye : kEyes) {
            const int e = static_cast<int>(eye);
            const EyeVerdict& verdict = v.verdicts[e];
            EyeReport& r = report.eyes[e];
            const bool positive = clip.label == Label::Blink;
            const bool predicted = verdict.label == Label::Blink;
            if (positive && predicted) ++r.counts.tp;
            if (positive && !predicted) ++r.counts.fn;
            if (!positive && predicted) ++r.counts.fp;
            const LocalizationOutcome loc = classify_localization(clip.annotations, v.tracks[e], eye);
            ++r.localization.n_all;
            if (loc == LocalizationOutcome::Miss) ++r.localization.n_miss;
            if (loc == LocalizationOutcome::Error) ++r.localization.n_err;
            rows << entry.source_id << ',' << entry.clip_dir.generic_string() << ',' << to_string(clip.label) << ','
                 << to_string(eye) << ',' << to_string(verdict.label) << ',' << format_double(verdict.confidence) << ','
                 << (verdict.lost ? 1 : 0) << ','
                 << (loc == LocalizationOutcome::Correct ? "correct" : loc == LocalizationOutcome::Miss ? "miss" : "error")
                 << '\n';
        }
    }
    finalize_report(report);
    report.meta = {config.seed, config_hash(config, "verify"), "verify", seconds_since(start)};
    fs::create_directories(config.out);
    write_file_atomic(config.out / "predictions.csv", rows.str());
    emit_report(report, config.out / "report");
    for (Eye eye : kEyes) {
        const EyeReport& r = report.eyes[static_cast<int>(eye)];
        log << to_string(eye) << ": recall " << format_double(r.metrics.recall) << " precision "
            << format_double(r.metrics.precision) << " f1 " << format_double(r.metrics.f1) << " fr "
            << (r.fr ? format_double(*r.fr) : std::string("n/a")) << '\n';
    }
    return 0;
}

int cmd_detect(const RunConfig& config, std::ostream& log) {
    require_path(config.frames, "--frames");
    require_path(config.model, "--model");
    require_path(config.out, "--out");
    const std::vector<GrayFrame> frames = load_frame_dir(config.frames);
    const MsLstmModel model = load_model(config.model);
    DetectParams params;
    params.window = config.window;
    params.stride = config.stride;
    params.conf_thresh = config.conf_thresh;
    params.iou_thresh = config.iou_thresh;
    params.track = track_from(config);
    params.patch_size = patch_from(config);
    std::unique_ptr<EyeLocator> locator;
    if (fs::exists(config.frames / "annotations.csv")) {
        locator = std::make_unique<AnnotationLocator>(read_annotations(config.frames / "annotations.csv"));
    } else {
        log << "no annotations.csv next to the frames; eyes cannot be located\n";
        locator = std::make_unique<NullLocator>();
    }
    const DetectResult result = detect_stream(frames, *locator, model, params);
    write_events_csv(result.events, config.out);
    log << frames.size() << " frames, " << result.windows_evaluated[0] << " + " << result.windows_evaluated[1]
        << " windows, " << result.proposals.size() << " proposals, " << result.events.size() << " events\n";
    return 0;
}

namespace {

struct TruthRow {
    Eye eye;
    FrameInterval interval;
};

std::vector<TruthRow> read_truth_csv(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "eye,start,end") {
        throw Error(ErrorKind::Parse, path.string() + ": expected header eye,start,end");
    }
    std::vector<TruthRow> rows;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        try {
            if (f.size() != 3) throw Error(ErrorKind::Parse, "expected 3 fields");
            TruthRow r{parse_eye(f[0]), {static_cast<int>(parse_int(f[1])), static_cast<int>(parse_int(f[2]))}};
            if (r.interval.start > r.interval.end) throw Error(ErrorKind::Parse, "start after end");
            rows.push_back(r);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void eval_verification(const std::string& text, const fs::path& path, EvalReport& report) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        try {
            if (f.size() != 8) throw Error(ErrorKind::Parse, "expected 8 fields");
            const bool positive = parse_label(f[2]) == Label::Blink;
            const bool predicted = parse_label(f[4]) == Label::Blink;
            EyeReport& r = report.eyes[static_cast<int>(parse_eye(f[3]))];
            if (positive && predicted) ++r.counts.tp;
            if (positive && !predicted) ++r.counts.fn;
            if (!positive && predicted) ++r.counts.fp;
            ++r.localization.n_all;
            if (f[7] == "miss") {
                ++r.localization.n_miss;
            } else if (f[7] == "error") {
                ++r.localization.n_err;
            } else if (f[7] != "correct") {
                throw Error(ErrorKind::Parse, "unknown localization outcome");
            }
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

int cmd_eval(const RunConfig& config, std::ostream& log) {
    require_path(config.predictions, "--predictions");
    require_path(config.out, "--out");
    const auto start = Clock::now();
    const std::string text = read_text_file(config.predictions);
    const std::string header = text.substr(0, text.find('\n'));
    EvalReport report;
    std::optional<std::vector<PrPoint>> curve;
    if (header == "source_id,clip,label,eye,predicted,confidence,lost,localization") {
        eval_verification(text, config.predictions, report);
    } else if (header == "eye,start,end,confidence") {
        require_path(config.truth, "--truth");
        const std::vector<BlinkEvent> events = read_events_csv(config.predictions);
        const std::vector<TruthRow> truth = read_truth_csv(config.truth);
        std::vector<ScoredInterval> detections;
        for (const BlinkEvent& e : events) detections.push_back({static_cast<std::size_t>(e.eye), e.interval(), e.confidence});
        std::vector<TruthInterval> truths;
        for (const TruthRow& t : truth) truths.push_back({static_cast<std::size_t>(t.eye), t.interval});
        const ApResult ap = average_precision(detections, truths, config.overlap);
        if (ap.undefined) {
            report.warnings.push_back("no detections and no ground truth, AP set to 0");
        }
        report.ap = ap.ap;
        curve = pr_curve(detections, truths, config.overlap);
        // Counts at the operating threshold, matched independently per eye.
        for (Eye eye : kEyes) {
            std::vector<ScoredInterval> kept;
            for (const ScoredInterval& d : detections) {
                if (d.group == static_cast<std::size_t>(eye) && d.confidence >= config.conf_thresh) kept.push_back(d);
            }
            std::vector<TruthInterval> eye_truth;
            for (const TruthInterval& t : truths) {
                if (t.group == static_cast<std::size_t>(eye)) eye_truth.push_back(t);
            }
            const ApResult m = average_precision(kept, eye_truth, config.overlap);
            EyeReport& r = report.eyes[static_cast<int>(eye)];
            r.counts.tp = std::count(m.true_positive.begin(), m.true_positive.end(), true);
            r.counts.fp = static_cast<std::int64_t>(kept.size()) - r.counts.tp;
            r.counts.fn = static_cast<std::int64_t>(eye_truth.size()) - r.counts.tp;
        }
    } else {
        throw Error(ErrorKind::Parse, config.predictions.string() + ": unrecognised header '" + header + "'");
    }
    const std::vector<std::string> extra = report.warnings;
    finalize_report(report);
    report.warnings.insert(report.warnings.end(), extra.begin(), extra.end());
    report.meta = {config.seed, config_hash(config, "eval"), "eval", seconds_since(start)};
    fs::create_directories(config.out);
    emit_report(report, config.out / "report");
    if (curve) write_pr_curve(*curve, config.out / "pr_curve.csv");
    for (Eye eye : kEyes) {
        const EyeReport& r = report.eyes[static_cast<int>(eye)];
        log << to_string(eye) << ": recall " << format_double(r.metrics.recall) << " precision "
            << format_double(r.metrics.precision) << " f1 " << format_double(r.metrics.f1) << '\n';
    }
    if (report.ap) log << "ap " << format_double(*report.ap) << '\n';
    return 0;
}

int cmd_bench(const RunConfig& config, std::ostream& log) {
    require(config.warmup >= 0, "--warmup must be non-negative");
    require(config.bench_frames > config.warmup + 1, "--bench-frames must exceed --warmup");
    require(config.window >= config.scales + 1, "--window too short for --scales");
    const EyeSize patch = patch_from(config);
    const MsLstmModel model =
        config.model.empty() ? MsLstmModel::initialize(hyper_from(config), config.seed) : load_model(config.model);

    std::vector<GrayFrame> frames;
    std::vector<AnnotationRecord> annotations;
    if (!config.manifest.empty()) {
        // Clips are played back to back, repeating until enough frames exist.
        const Manifest manifest = load_manifest(config.manifest);
        require(!manifest.entries.empty(), "manifest is empty");
        while (frames.size() < static_cast<std::size_t>(config.bench_frames)) {
            for (const ManifestEntry& entry : manifest.entries) {
                Clip clip = load_entry(manifest, entry);
                for (std::size_t i = 0; i < clip.length(); ++i) {
                    clip.annotations[i].frame_index = frames.size();
                    annotations.push_back(clip.annotations[i]);
                    frames.push_back(std::move(clip.frames[i]));
                }
                if (frames.size() >= static_cast<std::size_t>(config.bench_frames)) break;
            }
        }
        frames.resize(static_cast<std::size_t>(config.bench_frames));
        annotations.resize(frames.size());
    } else {
        std::vector<double> blinks;
        for (int c = 30; c + 10 < config.bench_frames; c += 45) blinks.push_back(c);
        SynthStream s = synth_stream(mix_seed(config.seed, 9), config.bench_frames, blinks);
        frames = std::move(s.clip.frames);
        annotations = std::move(s.clip.annotations);
    }
    const AnnotationLocator locator(annotations);
    const TrackParams track = track_from(config);
    std::array<EyeTracker, 2> trackers{EyeTracker(locator, Eye::Left, track), EyeTracker(locator, Eye::Right, track)};
    std::array<std::vector<LbpHistogram>, 2> appearance;
    std::array<std::vector<bool>, 2> valid;
    std::vector<double> t_track;
    std::vector<double> t_feat;
    std::vector<double> t_infer;
    std::vector<double> t_total;
    const auto window = static_cast<std::size_t>(config.window);
    double sink = 0.0;
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto a = Clock::now();
        std::array<std::optional<EyeBox>, 2> boxes;
        for (Eye eye : kEyes) boxes[static_cast<int>(eye)] = trackers[static_cast<int>(eye)].step(frames[t]);
        const auto b = Clock::now();
        for (int e = 0; e < 2; ++e) {
            appearance[e].push_back(boxes[e] ? frame_appearance(frames[t], *boxes[e], patch) : LbpHistogram{});
            valid[e].push_back(boxes[e].has_value());
        }
        const auto c = Clock::now();
        if (t + 1 >= window) {
            for (int e = 0; e < 2; ++e) {
                const std::size_t first = t + 1 - window;
                if (!std::all_of(valid[e].begin() + static_cast<std::ptrdiff_t>(first), valid[e].end(),
                                 [](bool v) { return v; })) {
                    continue;
                }
                const FeatureSequence seq = sequence_from_appearance(std::span(appearance[e]).subspan(first, window));
                sink += predict(model, seq).confidence;
            }
        }
        const auto d = Clock::now();
        if (t < static_cast<std::size_t>(config.warmup)) continue;
        auto ms = [](Clock::time_point x, Clock::time_point y) {
            return std::chrono::duration<double, std::milli>(y - x).count();
        };
        t_track.push_back(ms(a, b));
        t_feat.push_back(ms(b, c));
        t_infer.push_back(ms(c, d));
        t_total.push_back(ms(a, d));
    }
    const std::pair<const char*, std::vector<double>*> stages[] = {
        {"tracking", &t_track}, {"feature_extraction", &t_feat}, {"inference", &t_infer}, {"total", &t_total}};
    std::ostringstream csv;
    csv << "stage,frames,mean_ms,median_ms,p95_ms\n";
    log << std::left << std::setw(20) << "stage" << std::right << std::setw(10) << "mean_ms" << std::setw(12)
        << "median_ms" << std::setw(10) << "p95_ms" << '\n';
    for (const auto& [name, values] : stages) {
        const Stats s = summarize(*values);
        csv << name << ',' << values->size() << ',' << format_double(s.mean) << ',' << format_double(s.median) << ','
            << format_double(s.p95) << '\n';
        log << std::left << std::setw(20) << name << std::right << std::fixed << std::setprecision(3) << std::setw(10)
            << s.mean << std::setw(12) << s.median << std::setw(10) << s.p95 << '\n';
    }
    log.unsetf(std::ios::floatfield);
    log << "frames timed: " << t_total.size() << " (first " << config.warmup << " discarded)\n";
    if (sink < 0.0) log << '\n';  // keeps the predictions observable
    if (!config.out.empty()) write_file_atomic(config.out, csv.str());
    return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig config;
    CLI::App app{"Eyeblink detection toolkit: synthetic data, training, verification, detection and evaluation.",
                 "blinkwild"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);

    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", config.seed, "Seed for all randomness"); };
    auto add_model_shape = [&](CLI::App* sub) {
        sub->add_option("--layers", config.layers, "Stacked LSTM layers");
        sub->add_option("--scales", config.scales, "Last top-layer outputs fed to the classifier");
        sub->add_option("--hidden", config.hidden, "LSTM hidden units");
        sub->add_option("--margin", config.margin, "Angular margin m");
    };
    auto add_tracking = [&](CLI::App* sub) {
        sub->add_option("--track-thresh", config.track_thresh, "Tracker score below which eyes are re-located");
        sub->add_option("--patch", config.patch, "Eye patch side in pixels");
    };

    CLI::App* polish = app.add_subcommand("polish", "Cut or extend every clip of a manifest to a fixed length");
    polish->add_option("--manifest", config.manifest, "Input manifest")->required();
    polish->add_option("--out", config.out, "Output dataset directory")->required();
    polish->add_option("--target-len", config.target_len, "Frames per polished clip");
    add_seed(polish);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic blink/non-blink dataset");
    synth->add_option("--out", config.out, "Output dataset directory")->required();
    add_seed(synth);
    synth->add_option("--train-blink", config.train_blink, "Blink clips in the train split");
    synth->add_option("--train-nonblink", config.train_nonblink, "Non-blink clips in the train split");
    synth->add_option("--test-blink", config.test_blink, "Blink clips in the test split");
    synth->add_option("--test-nonblink", config.test_nonblink, "Non-blink clips in the test split");
    synth->add_option("--length", config.clip_length, "Frames per clip");
    synth->add_option("--streams", config.streams, "Untrimmed streams to add (even ones contain one blink)");
    synth->add_option("--stream-length", config.stream_length, "Frames per stream");

    CLI::App* train_cmd = app.add_subcommand("train", "Train the classifier on the train split");
    train_cmd->add_option("--manifest", config.manifest, "Dataset manifest")->required();
    train_cmd->add_option("--out", config.out, "Output directory for model.msl and loss.csv")->required();
    add_seed(train_cmd);
    add_model_shape(train_cmd);
    train_cmd->add_option("--loss", config.loss, "Training loss")->check(CLI::IsMember({"softmax", "asoftmax"}));
    train_cmd->add_option("--steps", config.steps, "ADAM steps");
    train_cmd->add_option("--batch", config.batch, "Mini-batch size");
    add_tracking(train_cmd);

    CLI::App* verify = app.add_subcommand("verify", "Classify polished clips with annotation-backed eye locations");
    verify->add_option("--manifest", config.manifest, "Dataset manifest")->required();
    verify->add_option("--model", config.model, "Trained model file")->required();
    verify->add_option("--out", config.out, "Output directory for predictions and report")->required();
    verify->add_option("--split", config.split, "Split to evaluate")->check(CLI::IsMember({"train", "test", "all"}));
    add_seed(verify);
    add_tracking(verify);

    CLI::App* detect = app.add_subcommand("detect", "Find blinks in an untrimmed frame sequence");
    detect->add_option("--frames", config.frames, "Directory of frame_NNNN.pgm files (and annotations.csv)")
        ->required();
    detect->add_option("--model", config.model, "Trained model file")->required();
    detect->add_option("--out", config.out, "Output events CSV")->required();
    detect->add_option("--window", config.window, "Sliding window length in frames");
    detect->add_option("--stride", config.stride, "Sliding window stride in frames");
    detect->add_option("--conf-thresh", config.conf_thresh, "Minimum blink confidence for a proposal");
    detect->add_option("--iou-thresh", config.iou_thresh, "Temporal NMS IoU threshold");
    add_seed(detect);
    add_tracking(detect);

    CLI::App* eval = app.add_subcommand("eval", "Score verification predictions or detected events");
    eval->add_option("--predictions", config.predictions, "predictions.csv from verify, or events CSV from detect")
        ->required();
    eval->add_option("--truth", config.truth, "Ground-truth CSV eye,start,end (events only)");
    eval->add_option("--out", config.out, "Output directory for the report")->required();
    eval->add_option("--overlap", config.overlap, "Temporal IoU needed for a detection to count");
    eval->add_option("--conf-thresh", config.conf_thresh, "Operating threshold for event counts");
    add_seed(eval);

    CLI::App* bench = app.add_subcommand("bench", "Per-stage latency of tracking, features and inference");
    bench->add_option("--manifest", config.manifest, "Clips to play back (default: a synthetic stream)");
    bench->add_option("--model", config.model, "Model file (default: freshly initialised)");
    bench->add_option("--out", config.out, "Optional CSV with the latency table");
    bench->add_option("--bench-frames", config.bench_frames, "Frames to process");
    bench->add_option("--warmup", config.warmup, "Leading frames excluded from the statistics");
    bench->add_option("--window", config.window, "Window length fed to the classifier");
    add_seed(bench);
    add_model_shape(bench);
    add_tracking(bench);

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (polish->parsed()) return cmd_polish(config, out);
        if (synth->parsed()) return cmd_synth(config, out);
        if (train_cmd->parsed()) return cmd_train(config, out);
        if (verify->parsed()) return cmd_verify(config, out);
        if (detect->parsed()) return cmd_detect(config, out);
        if (eval->parsed()) return cmd_eval(config, out);
        if (bench->parsed()) return cmd_bench(config, out);
    } catch (const Error& e) {
        err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace blinkwild::cli
