#include "blinkwild/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "blinkwild/error.hpp"
#include "blinkwild/io.hpp"

namespace blinkwild {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

Prf prf(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0) throw Error(ErrorKind::InvalidArgument, "negative confusion count");
    Prf out;
    out.recall = ratio(c.tp, c.tp + c.fn);
    out.precision = ratio(c.tp, c.tp + c.fp);
    if (out.recall > 0.0 && out.precision > 0.0) out.f1 = 2.0 / (1.0 / out.recall + 1.0 / out.precision);
    return out;
}

double fr(const LocalizationTally& t) {
    if (t.n_all <= 0) throw Error(ErrorKind::InvalidArgument, "failure rate needs at least one sample");
    if (t.n_miss < 0 || t.n_err < 0 || t.n_miss + t.n_err > t.n_all) {
        throw Error(ErrorKind::InvalidArgument, "inconsistent localisation tally");
    }
    return static_cast<double>(t.n_miss + t.n_err) / static_cast<double>(t.n_all);
}

double me(Point detected, Point gt, Point gt_left, Point gt_right) {
    const double iod = manhattan(gt_left, gt_right);
    if (!(iod > 0.0)) throw Error(ErrorKind::DegenerateGeometry, "ground-truth eyes coincide");
    return manhattan(detected, gt) / iod;
}

LocalizationOutcome classify_localization(const std::vector<AnnotationRecord>& annotations,
                                          const TrackedStream& track, Eye eye) {
    if (track.lost_from == std::optional<std::size_t>(0)) return LocalizationOutcome::Miss;
    if (track.lost()) return LocalizationOutcome::Error;
    const std::size_t n = std::min(annotations.size(), track.boxes.size());
    for (std::size_t t = 0; t < n; ++t) {
        const AnnotationRecord& a = annotations[t];
        if (!a.left.visible || !a.right.visible) continue;
        const Point gt = eye == Eye::Left ? a.left.point() : a.right.point();
        if (!me_correct(me(track.boxes[t].center(), gt, a.left.point(), a.right.point()))) {
            return LocalizationOutcome::Error;
        }
    }
    return LocalizationOutcome::Correct;
}

ApResult average_precision(std::span<const ScoredInterval> detections, std::span<const TruthInterval> truths,
                           double overlap) {
    for (const ScoredInterval& d : detections) {
        if (!(d.confidence >= 0.0)) throw Error(ErrorKind::InvalidArgument, "detection confidence must be >= 0");
    }
    ApResult out;
    out.true_positive.assign(detections.size(), false);
    if (detections.empty() && truths.empty()) {
        out.undefined = true;
        return out;
    }
    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return detections[a].confidence > detections[b].confidence;
    });
    std::vector<bool> claimed(truths.size(), false);
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const ScoredInterval& d = detections[order[rank]];
        std::optional<std::size_t> best;
        double best_iou = -1.0;
        for (std::size_t g = 0; g < truths.size(); ++g) {
            if (claimed[g] || truths[g].group != d.group) continue;
            const double iou = temporal_iou(d.interval, truths[g].interval);
            if (iou >= overlap && iou > best_iou) {
                best = g;
                best_iou = iou;
            }
        }
        if (!best) continue;
        claimed[*best] = true;
        out.true_positive[order[rank]] = true;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
    out.ap = truths.empty() ? 0.0 : sum / static_cast<double>(truths.size());
    return out;
}

ApResult average_precision(std::span<const BlinkEvent> events, std::span<const FrameInterval> gt, double overlap) {
    std::vector<ScoredInterval> detections;
    detections.reserve(events.size());
    for (const BlinkEvent& e : events) detections.push_back({0, e.interval(), e.confidence});
    std::vector<TruthInterval> truths;
    truths.reserve(gt.size());
    for (const FrameInterval& g : gt) truths.push_back({0, g});
    return average_precision(detections, truths, overlap);
}

std::vector<PrPoint> pr_curve(std::span<const ScoredInterval> detections, std::span<const TruthInterval> truths,
                              double overlap) {
    const ApResult matched = average_precision(detections, truths, overlap);
    std::vector<double> thresholds;
    for (const ScoredInterval& d : detections) thresholds.push_back(d.confidence);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<PrPoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    for (double thr : thresholds) {
        std::int64_t accepted = 0;
        std::int64_t tp = 0;
        for (std::size_t i = 0; i < detections.size(); ++i) {
            if (detections[i].confidence < thr) continue;
            ++accepted;
            if (matched.true_positive[i]) ++tp;
        }
        points.push_back({thr, ratio(tp, accepted), ratio(tp, static_cast<std::int64_t>(truths.size()))});
    }
    return points;
}

void write_pr_curve(const std::vector<PrPoint>& points, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "threshold,precision,recall\n";
    for (const PrPoint& p : points) {
        out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
            << format_double(p.precision) << ',' << format_double(p.recall) << '\n';
    }
    write_file_atomic(path, out.str());
}

void finalize_report(EvalReport& report) {
    report.warnings.clear();
    for (Eye eye : kEyes) {
        EyeReport& r = report.eyes[static_cast<int>(eye)];
        const std::string name(to_string(eye));
        r.metrics = prf(r.counts);
        if (r.counts.tp + r.counts.fn == 0) report.warnings.push_back(name + ": no positives, recall set to 0");
        if (r.counts.tp + r.counts.fp == 0) report.warnings.push_back(name + ": no positive predictions, precision set to 0");
        if (r.metrics.recall == 0.0 || r.metrics.precision == 0.0) report.warnings.push_back(name + ": f1 set to 0");
        if (r.localization.n_all > 0) {
            r.fr = fr(r.localization);
        } else {
            r.fr.reset();
            report.warnings.push_back(name + ": no samples, failure rate undefined");
        }
    }
}

namespace {

using Json = nlohmann::ordered_json;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    Json j;
    j["version"] = kReportVersion;
    Json eyes = Json::object();
    for (Eye eye : kEyes) {
        const EyeReport& r = report.eyes[static_cast<int>(eye)];
        eyes[std::string(to_string(eye))] = {
            {"tp", r.counts.tp},
            {"fp", r.counts.fp},
            {"fn", r.counts.fn},
            {"recall", r.metrics.recall},
            {"precision", r.metrics.precision},
            {"f1", r.metrics.f1},
            {"n_miss", r.localization.n_miss},
            {"n_err", r.localization.n_err},
            {"n_all", r.localization.n_all},
            {"fr", optional_number(r.fr)},
        };
    }
    j["eyes"] = std::move(eyes);
    j["ap"] = optional_number(report.ap);
    j["warnings"] = report.warnings;
    j["meta"] = {
        {"seed", report.meta.seed},
        {"config_hash", report.meta.config_hash},
        {"command", report.meta.command},
        {"elapsed_seconds", report.meta.elapsed_seconds},
    };
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    try {
        const Json j = Json::parse(text);
        if (j.at("version").get<int>() != kReportVersion) {
            throw Error(ErrorKind::Parse, "unsupported report version");
        }
        EvalReport report;
        for (Eye eye : kEyes) {
            const Json& e = j.at("eyes").at(std::string(to_string(eye)));
            EyeReport& r = report.eyes[static_cast<int>(eye)];
            r.counts = {e.at("tp").get<std::int64_t>(), e.at("fp").get<std::int64_t>(), e.at("fn").get<std::int64_t>()};
            r.metrics = {e.at("recall").get<double>(), e.at("precision").get<double>(), e.at("f1").get<double>()};
            r.localization = {e.at("n_miss").get<std::int64_t>(), e.at("n_err").get<std::int64_t>(),
                              e.at("n_all").get<std::int64_t>()};
            r.fr = read_optional(e.at("fr"));
        }
        report.ap = read_optional(j.at("ap"));
        report.warnings = j.at("warnings").get<std::vector<std::string>>();
        const Json& m = j.at("meta");
        report.meta.seed = m.at("seed").get<std::uint64_t>();
        report.meta.config_hash = m.at("config_hash").get<std::string>();
        report.meta.command = m.at("command").get<std::string>();
        report.meta.elapsed_seconds = m.at("elapsed_seconds").get<double>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("malformed report: ") + e.what());
    }
}

std::string report_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "eye,tp,fp,fn,recall,precision,f1,n_miss,n_err,n_all,fr,ap\n";
    const std::string ap = report.ap ? format_double(*report.ap) : "";
    for (Eye eye : kEyes) {
        const EyeReport& r = report.eyes[static_cast<int>(eye)];
        out << to_string(eye) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ','
            << format_double(r.metrics.recall) << ',' << format_double(r.metrics.precision) << ','
            << format_double(r.metrics.f1) << ',' << r.localization.n_miss << ',' << r.localization.n_err << ','
            << r.localization.n_all << ',' << (r.fr ? format_double(*r.fr) : "") << ',' << ap << '\n';
    }
    return out.str();
}

void emit_report(const EvalReport& report, const std::filesystem::path& stem) {
    std::filesystem::path json_path = stem;
    json_path += ".json";
    std::filesystem::path csv_path = stem;
    csv_path += ".csv";
    write_file_atomic(json_path, report_to_json(report));
    write_file_atomic(csv_path, report_to_csv(report));
}

EvalReport read_report(const std::filesystem::path& json_path) {
    try {
        return report_from_json(read_text_file(json_path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, json_path.string() + ": " + e.what());
        throw;
    }
}

}  // namespace blinkwild
