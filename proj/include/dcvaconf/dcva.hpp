#ifndef DCVACONF_DCVA_HPP
#define DCVACONF_DCVA_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dcvaconf/error.hpp"
#include "dcvaconf/features.hpp"
#include "dcvaconf/parallel.hpp"
#include "dcvaconf/raster.hpp"

namespace dcvaconf {

/// Per-pixel change magnitude, non-negative.
using MagnitudeMap = Grid<float>;

/// Binary change detection outcome. `labels` is recomputable from
/// (magnitude, tau) alone: Changed exactly where magnitude > tau.
struct ChangeResult {
    MagnitudeMap magnitude;
    double tau = 0.0;
    LabelMap labels;

    friend bool operator==(const ChangeResult&, const ChangeResult&) = default;
};

inline constexpr std::size_t kDefaultOtsuBins = 256;

/// Change hypervector: per-pixel, per-dimension difference f2 - f1.
inline FeatureStack hypervector(const FeatureStack& f1, const FeatureStack& f2) {
    require_same_dims(f1, f2);
    FeatureStack g(f1.width(), f1.height(), f1.dims());
    auto out = g.values();
    auto a = f1.values();
    auto b = f2.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = b[i] - a[i];
    return g;
}

/// Euclidean norm of the hypervector at every pixel.
inline MagnitudeMap magnitude(const FeatureStack& g) {
    MagnitudeMap rho(g.width(), g.height());
    const std::size_t dims = g.dims();
    parallel_for(
        0, g.pixels(),
        [&](std::size_t p) {
            double sq = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
                const double v = g.value(d, p);
                sq += v * v;
            }
            rho[p] = static_cast<float>(std::sqrt(sq));
        },
        4096);
    return rho;
}

/// Min-max binned histogram of a scalar field. Bin of value v is
/// floor((v - lo) / (hi - lo) * bins), clamped to bins - 1.
struct Histogram {
    std::vector<std::uint64_t> counts;
    double lo = 0.0;
    double hi = 0.0;

    std::size_t bins() const noexcept { return counts.size(); }
    double upper_edge(std::size_t bin) const noexcept {
        return lo + (hi - lo) * static_cast<double>(bin + 1) / static_cast<double>(bins());
    }
};

inline std::size_t histogram_bin(double v, double lo, double hi, std::size_t bins) {
    if (!(hi > lo)) return 0;
    const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(t > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(t), bins - 1);
}

inline Histogram histogram(std::span<const float> values, std::size_t bins) {
    if (bins < 2) throw Error(ErrorCode::InvalidArgument, "histogram needs at least 2 bins");
    Histogram h;
    h.counts.assign(bins, 0);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    h.lo = *lo;
    h.hi = *hi;
    for (float v : values) ++h.counts[histogram_bin(v, h.lo, h.hi, bins)];
    return h;
}

/// Otsu split of a histogram: returns the last bin t of the lower class
/// (bins 0..t) maximizing the between-class variance, lowest t on ties.
///
/// With n0, n1 the class counts and s0, s1 the sums of bin indices,
/// w0*w1*(mu0 - mu1)^2 = (s0*n1 - s1*n0)^2 / (N^2 * n0 * n1). The numerator
/// is formed in exact integer arithmetic, so equal class statistics always
/// produce equal scores and ties are detected exactly.
inline std::size_t otsu_bin(std::span<const std::uint64_t> counts) {
    std::uint64_t total = 0;
    std::uint64_t total_sum = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        total += counts[i];
        total_sum += counts[i] * i;
    }
    std::size_t best = 0;
    double best_score = -1.0;
    std::uint64_t n0 = 0;
    std::uint64_t s0 = 0;
    for (std::size_t t = 0; t < counts.size(); ++t) {
        n0 += counts[t];
        s0 += counts[t] * t;
        const std::uint64_t n1 = total - n0;
        const std::uint64_t s1 = total_sum - s0;
        double score = 0.0;
        if (n0 > 0 && n1 > 0) {
            const __int128 num = static_cast<__int128>(s0) * n1 - static_cast<__int128>(s1) * n0;
            const double numd = static_cast<double>(num);
            score = numd * numd / (static_cast<double>(n0) * static_cast<double>(n1));
        }
        if (score > best_score) {
            best_score = score;
            best = t;
        }
    }
    return best;
}

/// Otsu threshold on a magnitude map, in data units: the upper edge of the
/// selected bin. A constant map returns that constant.
inline double otsu_threshold(const MagnitudeMap& m, std::size_t bins = kDefaultOtsuBins) {
    const Histogram h = histogram(m.cells(), bins);
    if (!(h.hi > h.lo)) return h.lo;
    return h.upper_edge(otsu_bin(h.counts));
}

/// Changed where magnitude > tau, Unchanged otherwise.
inline LabelMap threshold_labels(const MagnitudeMap& m, double tau) {
    LabelMap labels(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) labels[i] = static_cast<double>(m[i]) > tau ? Label::Changed : Label::Unchanged;
    return labels;
}

/// Otsu-thresholds an already computed magnitude map.
inline ChangeResult classify(MagnitudeMap rho, std::size_t bins = kDefaultOtsuBins) {
    const double tau = otsu_threshold(rho, bins);
    LabelMap labels = threshold_labels(rho, tau);
    return {std::move(rho), tau, std::move(labels)};
}

/// hypervector -> magnitude -> Otsu threshold -> labels.
inline ChangeResult detect(const FeatureStack& f1, const FeatureStack& f2) {
    return classify(magnitude(hypervector(f1, f2)));
}

/// Full DCVA chain on a raster pair: extraction with one shared extractor,
/// pooled standardization, then `detect`. A Precomputed spec reads the
/// features of the two dates from `<feature_dir>/t1` and `<feature_dir>/t2`.
inline ChangeResult detect_pair(const ExtractorSpec& spec, const Raster& x1, const Raster& x2) {
    validate(spec);
    if (x1.width() != x2.width() || x1.height() != x2.height() || x1.bands() != x2.bands())
        throw Error(ErrorCode::ShapeMismatch, "bi-temporal rasters differ in shape");
    FeatureStack f1 = [&] {
        if (spec.kind != ExtractorKind::Precomputed) return extract(spec, x1);
        ExtractorSpec s = spec;
        s.feature_dir = *spec.feature_dir / "t1";
        return extract(s, x1);
    }();
    FeatureStack f2 = [&] {
        if (spec.kind != ExtractorKind::Precomputed) return extract(spec, x2);
        ExtractorSpec s = spec;
        s.feature_dir = *spec.feature_dir / "t2";
        return extract(s, x2);
    }();
    auto [s1, s2] = standardize_pair(std::move(f1), std::move(f2));
    return detect(s1, s2);
}

}  // namespace dcvaconf

#endif
