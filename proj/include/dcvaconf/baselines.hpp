#ifndef DCVACONF_BASELINES_HPP
#define DCVACONF_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "dcvaconf/dcva.hpp"
#include "dcvaconf/error.hpp"
#include "dcvaconf/features.hpp"
#include "dcvaconf/parallel.hpp"
#include "dcvaconf/raster.hpp"
#include "dcvaconf/smoothing.hpp"

namespace dcvaconf {

/// Robust CVA neighborhood: (2 * window_radius + 1)^2 pixels.
struct RcvaConfig {
    std::size_t window_radius = 1;

    friend bool operator==(const RcvaConfig&, const RcvaConfig&) = default;
};

/// Same as run_proposed with the primary extractor in both roles.
inline ConfidenceRun run_unified(const Raster& x1, const Raster& x2, const ExtractorSpec& primary_spec,
                                 const SmoothingConfig& cfg) {
    return run_proposed(x1, x2, primary_spec, primary_spec, cfg);
}

namespace detail {

// min over q in the truncated window around (y, x) of |to(q) - from(y, x)|
// across all bands jointly.
inline double rcva_directional(const Raster& from, const Raster& to, std::size_t y, std::size_t x, std::size_t radius) {
    const std::size_t y0 = y >= radius ? y - radius : 0;
    const std::size_t x0 = x >= radius ? x - radius : 0;
    const std::size_t y1 = std::min(from.height() - 1, y + radius);
    const std::size_t x1 = std::min(from.width() - 1, x + radius);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t qy = y0; qy <= y1; ++qy) {
        for (std::size_t qx = x0; qx <= x1; ++qx) {
            double sq = 0.0;
            for (std::size_t b = 0; b < from.bands(); ++b) {
                const double d = static_cast<double>(to.at(b, qy, qx)) - static_cast<double>(from.at(b, y, x));
                sq += d * d;
            }
            best = std::min(best, sq);
        }
    }
    return std::sqrt(best);
}

}  // namespace detail

/// Robust change vector analysis magnitude on raw bands.
///
/// rho12(p) = min_q ||x2(q) - x1(p)|| over the window around p, rho21(p)
/// the same with the dates swapped, rho(p) = max(rho12, rho21). One
/// neighbor q is shared by all bands. Windows are truncated at the border.
/// With window_radius 0 this is the plain per-pixel CVA norm.
inline MagnitudeMap rcva_magnitude(const Raster& x1, const Raster& x2, const RcvaConfig& cfg) {
    if (!x1.same_shape(x2)) throw Error(ErrorCode::ShapeMismatch, "RCVA rasters differ in shape");
    MagnitudeMap rho(x1.width(), x1.height());
    const std::size_t w = x1.width();
    parallel_for(0, x1.height(), [&](std::size_t y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double r12 = detail::rcva_directional(x1, x2, y, x, cfg.window_radius);
            const double r21 = detail::rcva_directional(x2, x1, y, x, cfg.window_radius);
            rho.at(y, x) = static_cast<float>(std::max(r12, r21));
        }
    });
    return rho;
}

/// Ensemble baseline whose noisy runs use Otsu-thresholded RCVA on the
/// perturbed rasters instead of a secondary deep extractor.
inline ConfidenceRun run_conf_rcva(const Raster& x1, const Raster& x2, const ExtractorSpec& primary_spec,
                                   const SmoothingConfig& cfg, const RcvaConfig& rcfg) {
    validate(cfg);
    ChangeResult primary = detect_pair(primary_spec, x1, x2);
    EnsembleCounts counts = ensemble_counts_with(x1, x2, cfg, [&](const Raster& a, const Raster& b) {
        return classify(rcva_magnitude(a, b, rcfg)).labels;
    });
    ConfidenceMap confidence = fuse_confidence(primary, counts, cfg.conf_threshold);
    return {std::move(primary), std::move(confidence), std::move(counts), std::nullopt, std::nullopt};
}

/// Confidence from distance to the decision boundary: rho' = |rho - tau|,
/// thresholded by a second Otsu pass. Pixels with rho' > tau' keep their
/// primary label as confident; the rest are NotConfident.
inline ConfidenceRun deep_magnitude_confidence(ChangeResult primary) {
    MagnitudeMap rho_prime(primary.magnitude.width(), primary.magnitude.height());
    for (std::size_t p = 0; p < rho_prime.size(); ++p)
        rho_prime[p] = static_cast<float>(std::abs(static_cast<double>(primary.magnitude[p]) - primary.tau));
    const double tau_prime = otsu_threshold(rho_prime);

    ConfidenceMap confidence(rho_prime.width(), rho_prime.height());
    for (std::size_t p = 0; p < confidence.size(); ++p) {
        if (!(static_cast<double>(rho_prime[p]) > tau_prime)) continue;
        confidence[p] = primary.labels[p] == Label::Changed ? Confidence::ConfidentChanged : Confidence::ConfidentUnchanged;
    }
    return {std::move(primary), std::move(confidence), std::nullopt, std::move(rho_prime), tau_prime};
}

inline ConfidenceRun run_deep_magnitude(const Raster& x1, const Raster& x2, const ExtractorSpec& primary_spec) {
    return deep_magnitude_confidence(detect_pair(primary_spec, x1, x2));
}

}  // namespace dcvaconf

#endif
