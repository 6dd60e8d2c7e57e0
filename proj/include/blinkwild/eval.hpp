#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blinkwild/dataset.hpp"
#include "blinkwild/interval.hpp"
#include "blinkwild/pipeline.hpp"

namespace blinkwild {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Prf {
    double recall = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
    friend bool operator==(const Prf&, const Prf&) = default;
};

/// Recall, precision and F1; any ratio with a zero denominator is 0.
Prf prf(const ConfusionCounts& counts);

struct LocalizationTally {
    std::int64_t n_miss = 0;  // eyes the locator never found
    std::int64_t n_err = 0;   // eyes found but mislocalised on some frame
    std::int64_t n_all = 0;
    friend bool operator==(const LocalizationTally&, const LocalizationTally&) = default;
};

/// (n_miss + n_err) / n_all; InvalidArgument when n_all is 0 or counts are inconsistent.
double fr(const LocalizationTally& tally);

inline constexpr double kMeThreshold = 0.4;

/// Manhattan error of a detected eye centre, relative to the inter-ocular
/// Manhattan distance. DegenerateGeometry when the two ground-truth eyes coincide.
double me(Point detected, Point gt, Point gt_left, Point gt_right);
inline bool me_correct(double value) { return value <= kMeThreshold; }

enum class LocalizationOutcome { Correct, Miss, Error };

/// Miss when the track was lost from the first frame; Error when it was lost
/// later or ME exceeds the threshold on any frame where both eyes are annotated.
LocalizationOutcome classify_localization(const std::vector<AnnotationRecord>& annotations,
                                          const TrackedStream& track, Eye eye);

/// One scored detection for AP. Detections and truths only match inside the
/// same group (e.g. one group per stream and eye).
struct ScoredInterval {
    std::size_t group = 0;
    FrameInterval interval;
    double confidence = 0.0;
};

struct TruthInterval {
    std::size_t group = 0;
    FrameInterval interval;
};

struct ApResult {
    double ap = 0.0;
    bool undefined = false;  // no detections and no ground truth
    std::vector<bool> true_positive;  // per detection, in input order
};

/// Detections are ranked by descending confidence (stable for ties). Each one,
/// in rank order, claims the unmatched truth of its group with the highest
/// IoU (lowest index on ties) provided that IoU >= overlap. AP is the sum of
/// precision at every true-positive rank divided by the number of truths.
ApResult average_precision(std::span<const ScoredInterval> detections, std::span<const TruthInterval> truths,
                           double overlap = 0.5);

/// Single-group convenience form; event eyes are ignored.
ApResult average_precision(std::span<const BlinkEvent> events, std::span<const FrameInterval> gt, double overlap = 0.5);

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// One point per distinct confidence (descending) after a leading point at
/// threshold +inf with nothing accepted.
std::vector<PrPoint> pr_curve(std::span<const ScoredInterval> detections, std::span<const TruthInterval> truths,
                              double overlap = 0.5);

/// CSV with header `threshold,precision,recall`; the leading row reads `inf`.
void write_pr_curve(const std::vector<PrPoint>& points, const std::filesystem::path& path);

struct EyeReport {
    ConfusionCounts counts;
    Prf metrics;
    LocalizationTally localization;
    std::optional<double> fr;  // absent when no samples were evaluated
    friend bool operator==(const EyeReport&, const EyeReport&) = default;
};

struct RunMetadata {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string command;
    double elapsed_seconds = 0.0;
    friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

inline constexpr int kReportVersion = 1;

struct EvalReport {
    std::array<EyeReport, 2> eyes;  // left, right
    std::optional<double> ap;
    std::vector<std::string> warnings;
    RunMetadata meta;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills metrics and fr from the counts and tallies, adding a warning for
/// every zero-denominator convention applied.
void finalize_report(EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
std::string report_to_csv(const EvalReport& report);

/// Writes `<stem>.json` and `<stem>.csv` next to each other.
void emit_report(const EvalReport& report, const std::filesystem::path& stem);
EvalReport read_report(const std::filesystem::path& json_path);

}  // namespace blinkwild
