#ifndef DCVACONF_SMOOTHING_HPP
#define DCVACONF_SMOOTHING_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcvaconf/dcva.hpp"
#include "dcvaconf/error.hpp"
#include "dcvaconf/features.hpp"
#include "dcvaconf/parallel.hpp"
#include "dcvaconf/random.hpp"
#include "dcvaconf/raster.hpp"

namespace dcvaconf {

/// Noise ensemble parameters. Defaults: sigma 0.1, K = 10, K_tau = 1.
struct SmoothingConfig {
    double sigma = 0.1;
    std::size_t iterations = 10;
    double conf_threshold = 1.0;
    std::uint64_t master_seed = 0;

    friend bool operator==(const SmoothingConfig&, const SmoothingConfig&) = default;
};

inline void validate_conf_threshold(double k_tau) {
    if (!(k_tau > 0.0 && k_tau <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "confidence threshold must lie in (0, 1], got " + std::to_string(k_tau));
}

inline void validate(const SmoothingConfig& cfg) {
    if (cfg.iterations == 0) throw Error(ErrorCode::InvalidArgument, "at least one smoothing iteration is required");
    if (!(cfg.sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be non-negative");
    validate_conf_threshold(cfg.conf_threshold);
}

/// Per-pixel number of noisy runs (out of k) that labeled the pixel Changed.
struct EnsembleCounts {
    Grid<std::uint32_t> k_prime;
    std::uint32_t k = 0;

    std::size_t width() const noexcept { return k_prime.width(); }
    std::size_t height() const noexcept { return k_prime.height(); }

    friend bool operator==(const EnsembleCounts&, const EnsembleCounts&) = default;
};

enum class ImageRole : std::uint64_t { First = 0, Second = 1 };

/// Seed of the noise stream for iteration `iteration` (1-based) and one
/// image of the pair:
///   derive_key(derive_key(master, 0x6e6f697365), 2 * iteration + role)
/// where derive_key(a, c) = splitmix64(splitmix64(a) ^ splitmix64(c ^ 0xD1B54A32D192ED03)).
inline std::uint64_t noise_stream_seed(std::uint64_t master_seed, std::size_t iteration, ImageRole role) {
    return derive_key(derive_key(master_seed, 0x6e6f697365ULL), 2 * iteration + static_cast<std::uint64_t>(role));
}

/// Adds i.i.d. N(0, sigma^2) noise. Element i draws from the counter-based
/// stream (stream_seed, i). No clamping.
inline Raster perturb(const Raster& x, double sigma, std::uint64_t stream_seed) {
    if (sigma == 0.0) return x;
    Raster out = x;
    const CounterRng rng(stream_seed);
    auto data = out.data();
    parallel_for(
        0, data.size(),
        [&](std::size_t i) { data[i] = static_cast<float>(static_cast<double>(data[i]) + sigma * rng.normal(i)); },
        8192);
    return out;
}

enum class IterationOrder { Forward, Reverse };

/// Runs `iterations` noisy re-detections. `detector(noisy_x1, noisy_x2)`
/// must return a LabelMap. Iterations may run concurrently; the per-pixel
/// sum does not depend on execution order.
template <typename Detector>
EnsembleCounts ensemble_counts_with(const Raster& x1, const Raster& x2, const SmoothingConfig& cfg, Detector&& detector,
                                    IterationOrder order = IterationOrder::Forward) {
    validate(cfg);
    if (!x1.same_shape(x2)) throw Error(ErrorCode::ShapeMismatch, "bi-temporal rasters differ in shape");
    const std::size_t k = cfg.iterations;
    std::vector<std::optional<LabelMap>> runs(k);
    parallel_for(0, k, [&](std::size_t slot) {
        const std::size_t iteration = order == IterationOrder::Forward ? slot + 1 : k - slot;
        const Raster n1 = perturb(x1, cfg.sigma, noise_stream_seed(cfg.master_seed, iteration, ImageRole::First));
        const Raster n2 = perturb(x2, cfg.sigma, noise_stream_seed(cfg.master_seed, iteration, ImageRole::Second));
        runs[iteration - 1] = detector(n1, n2);
    });

    EnsembleCounts counts{Grid<std::uint32_t>(x1.width(), x1.height(), 0u), static_cast<std::uint32_t>(k)};
    for (const auto& run : runs) {
        require_same_shape(*run, counts.k_prime, "ensemble label map");
        for (std::size_t p = 0; p < run->size(); ++p) counts.k_prime[p] += (*run)[p] == Label::Changed;
    }
    return counts;
}

/// Ensemble of K DCVA runs with the secondary extractor on noisy copies of
/// both dates, each with its own Otsu threshold.
inline EnsembleCounts ensemble_counts(const Raster& x1, const Raster& x2, const ExtractorSpec& secondary,
                                      const SmoothingConfig& cfg, IterationOrder order = IterationOrder::Forward) {
    if (secondary.kind == ExtractorKind::Precomputed && cfg.sigma != 0.0)
        throw Error(ErrorCode::InvalidArgument, "noise cannot be applied to precomputed features");
    validate(secondary);
    return ensemble_counts_with(
        x1, x2, cfg, [&](const Raster& a, const Raster& b) { return detect_pair(secondary, a, b).labels; }, order);
}

/// True when `agreeing` of `k` runs reach the fraction k_tau. K_tau is read
/// as a decimal: a product within 1e-9 of an integer counts as that integer,
/// so 0.9 * 10 requires exactly 9 agreeing runs.
inline bool meets_consensus(std::uint32_t agreeing, std::uint32_t k, double k_tau) {
    return static_cast<double>(agreeing) + 1e-9 >= k_tau * static_cast<double>(k);
}

/// ConfidentChanged: primary Changed and K' >= K_tau*K.
/// ConfidentUnchanged: primary Unchanged and K - K' >= K_tau*K.
/// Everything else NotConfident.
inline Confidence fuse_pixel(Label primary, std::uint32_t k_prime, std::uint32_t k, double k_tau) {
    if (primary == Label::Changed) return meets_consensus(k_prime, k, k_tau) ? Confidence::ConfidentChanged : Confidence::NotConfident;
    return meets_consensus(k - k_prime, k, k_tau) ? Confidence::ConfidentUnchanged : Confidence::NotConfident;
}

inline ConfidenceMap fuse_confidence(const LabelMap& primary, const EnsembleCounts& counts, double k_tau) {
    validate_conf_threshold(k_tau);
    require_same_shape(primary, counts.k_prime, "fuse_confidence");
    ConfidenceMap out(primary.width(), primary.height());
    for (std::size_t p = 0; p < out.size(); ++p) {
        if (counts.k_prime[p] > counts.k) throw Error(ErrorCode::RejectedValue, "ensemble count exceeds K");
        out[p] = fuse_pixel(primary[p], counts.k_prime[p], counts.k, k_tau);
    }
    return out;
}

inline ConfidenceMap fuse_confidence(const ChangeResult& primary, const EnsembleCounts& counts, double k_tau) {
    return fuse_confidence(primary.labels, counts, k_tau);
}

/// Output of any confidence mechanism. `counts` is present for the
/// ensemble-based methods; `secondary_magnitude` / `secondary_tau` for the
/// deep-magnitude baseline.
struct ConfidenceRun {
    ChangeResult primary;
    ConfidenceMap confidence;
    std::optional<EnsembleCounts> counts;
    std::optional<MagnitudeMap> secondary_magnitude;
    std::optional<double> secondary_tau;
};

/// Primary DCVA with `primary_spec` on the clean pair, secondary ensemble
/// with `secondary_spec` on noisy pairs, then fusion at cfg.conf_threshold.
inline ConfidenceRun run_proposed(const Raster& x1, const Raster& x2, const ExtractorSpec& primary_spec,
                                  const ExtractorSpec& secondary_spec, const SmoothingConfig& cfg) {
    validate(cfg);
    ChangeResult primary = detect_pair(primary_spec, x1, x2);
    EnsembleCounts counts = ensemble_counts(x1, x2, secondary_spec, cfg);
    ConfidenceMap confidence = fuse_confidence(primary, counts, cfg.conf_threshold);
    return {std::move(primary), std::move(confidence), std::move(counts), std::nullopt, std::nullopt};
}

}  // namespace dcvaconf

#endif
