#ifndef DCVACONF_EVAL_HPP
#define DCVACONF_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcvaconf/dcva.hpp"
#include "dcvaconf/error.hpp"
#include "dcvaconf/raster.hpp"

namespace dcvaconf {

/// Confusion counts with Changed as the positive class.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }

    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Classes swapped: Unchanged becomes the positive class.
inline ConfusionCounts swap_classes(const ConfusionCounts& c) noexcept { return {c.tn, c.fn, c.fp, c.tp}; }

/// All indices on the 0-100 scale. A ratio with a zero denominator is 0
/// and its name is listed in `degenerate`.
struct MetricsReport {
    double precision = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double f1_changed = 0.0;
    double f1_unchanged = 0.0;
    double f1_macro = 0.0;
    double pixel_pct = 0.0;
    ConfusionCounts counts;
    std::uint64_t total_pixels = 0;
    std::vector<std::string> degenerate;

    bool flagged(const std::string& name) const {
        for (const auto& d : degenerate)
            if (d == name) return true;
        return false;
    }
};

/// Counts prediction vs. reference; with a mask, NotConfident pixels are skipped.
inline ConfusionCounts confusion(const LabelMap& pred, const LabelMap& ref, const ConfidenceMap* mask = nullptr) {
    require_same_shape(pred, ref, "confusion");
    if (mask) require_same_shape(pred, *mask, "confusion mask");
    ConfusionCounts c;
    for (std::size_t p = 0; p < pred.size(); ++p) {
        if (mask && (*mask)[p] == Confidence::NotConfident) continue;
        const bool predicted = pred[p] == Label::Changed;
        const bool actual = ref[p] == Label::Changed;
        if (predicted && actual) ++c.tp;
        else if (predicted) ++c.fp;
        else if (actual) ++c.fn;
        else ++c.tn;
    }
    return c;
}

namespace detail {
inline double pct(std::uint64_t num, std::uint64_t den, const char* name, std::vector<std::string>& flags) {
    if (den == 0) {
        flags.emplace_back(name);
        return 0.0;
    }
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

inline MetricsReport metrics(const ConfusionCounts& c, std::uint64_t total_pixels) {
    if (c.total() > total_pixels)
        throw Error(ErrorCode::InvalidArgument, "evaluated pixels exceed total pixel count");
    MetricsReport r;
    r.counts = c;
    r.total_pixels = total_pixels;
    r.precision = detail::pct(c.tp, c.tp + c.fp, "precision", r.degenerate);
    r.sensitivity = detail::pct(c.tp, c.tp + c.fn, "sensitivity", r.degenerate);
    r.specificity = detail::pct(c.tn, c.tn + c.fp, "specificity", r.degenerate);
    r.f1_changed = detail::pct(2 * c.tp, 2 * c.tp + (c.fp + c.fn), "f1_changed", r.degenerate);
    r.f1_unchanged = detail::pct(2 * c.tn, 2 * c.tn + (c.fp + c.fn), "f1_unchanged", r.degenerate);
    r.f1_macro = (r.f1_changed + r.f1_unchanged) / 2.0;
    r.pixel_pct = detail::pct(c.total(), total_pixels, "pixel_pct", r.degenerate);
    return r;
}

/// Metrics over all pixels and, when a confidence map is given, over the
/// confident pixels only.
struct RunEvaluation {
    MetricsReport all_pixels;
    std::optional<MetricsReport> confident;
};

inline RunEvaluation evaluate_run(const LabelMap& pred, const ConfidenceMap* conf, const LabelMap& ref) {
    RunEvaluation out{metrics(confusion(pred, ref), pred.size()), std::nullopt};
    if (conf) out.confident = metrics(confusion(pred, ref, conf), pred.size());
    return out;
}

inline RunEvaluation evaluate_run(const ChangeResult& result, const ConfidenceMap* conf, const LabelMap& ref) {
    return evaluate_run(result.labels, conf, ref);
}

enum class Aggregate { Pooled, Mean };

/// Combines per-scene reports: Pooled sums confusion counts and recomputes
/// every index; Mean averages each index across scenes.
inline MetricsReport aggregate(std::span<const MetricsReport> reports, Aggregate mode) {
    if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to aggregate");
    if (mode == Aggregate::Pooled) {
        ConfusionCounts c;
        std::uint64_t total = 0;
        for (const auto& r : reports) {
            c += r.counts;
            total += r.total_pixels;
        }
        return metrics(c, total);
    }
    MetricsReport m;
    const double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        m.precision += r.precision / n;
        m.sensitivity += r.sensitivity / n;
        m.specificity += r.specificity / n;
        m.f1_changed += r.f1_changed / n;
        m.f1_unchanged += r.f1_unchanged / n;
        m.pixel_pct += r.pixel_pct / n;
        m.counts += r.counts;
        m.total_pixels += r.total_pixels;
        for (const auto& d : r.degenerate)
            if (!m.flagged(d)) m.degenerate.push_back(d);
    }
    m.f1_macro = (m.f1_changed + m.f1_unchanged) / 2.0;
    return m;
}

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["precision"] = r.precision;
    j["sensitivity"] = r.sensitivity;
    j["specificity"] = r.specificity;
    j["f1_changed"] = r.f1_changed;
    j["f1_macro"] = r.f1_macro;
    j["pixel_pct"] = r.pixel_pct;
    j["f1_unchanged"] = r.f1_unchanged;
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}};
    j["total_pixels"] = r.total_pixels;
    j["degenerate"] = r.degenerate;
    return j;
}

/// Column header matching `format_row`.
inline std::string table_header() {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %8s %8s %8s", "Method", "Prec.", "Sens.", "Spec.", "F1 ch.",
                  "F1 mac.", "Pixel %");
    return buf;
}

inline std::string format_row(const std::string& name, const MetricsReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f", name.c_str(), r.precision,
                  r.sensitivity, r.specificity, r.f1_changed, r.f1_macro, r.pixel_pct);
    return buf;
}

}  // namespace dcvaconf

#endif
