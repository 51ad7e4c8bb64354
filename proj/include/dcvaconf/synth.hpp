#ifndef DCVACONF_SYNTH_HPP
#define DCVACONF_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dcvaconf/error.hpp"
#include "dcvaconf/random.hpp"
#include "dcvaconf/raster.hpp"

namespace dcvaconf {

struct SceneSpec {
    std::size_t width = 128;
    std::size_t height = 128;
    std::size_t bands = 4;
    double change_fraction = 0.08;
    double change_contrast = 0.35;
    double texture_scale = 8.0;
    double sensor_noise = 0.05;
    std::int64_t misregistration_shift = 0;
    std::uint64_t seed = 42;

    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct Scene {
    Raster t1;
    Raster t2;
    LabelMap reference;
};

namespace detail {

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Value noise: uniform lattice values every `scale` pixels, smoothly
// interpolated. Output in [0, 1].
inline double value_noise(const CounterRng& rng, double scale, std::size_t y, std::size_t x) {
    const double fy = static_cast<double>(y) / scale;
    const double fx = static_cast<double>(x) / scale;
    const auto iy = static_cast<std::uint64_t>(fy);
    const auto ix = static_cast<std::uint64_t>(fx);
    const double ty = smoothstep(fy - static_cast<double>(iy));
    const double tx = smoothstep(fx - static_cast<double>(ix));
    auto lattice = [&](std::uint64_t ly, std::uint64_t lx) { return rng.uniform((ly << 32) ^ lx); };
    const double top = lattice(iy, ix) * (1 - tx) + lattice(iy, ix + 1) * tx;
    const double bottom = lattice(iy + 1, ix) * (1 - tx) + lattice(iy + 1, ix + 1) * tx;
    return top * (1 - ty) + bottom * ty;
}

}  // namespace detail

/// Builds a seeded bi-temporal scene with planted changes.
///
/// t1 is a two-octave value-noise texture per band in [0.2, 0.8]. Changed
/// regions are random rectangles and discs, added until the changed fraction
/// lies within [0.9, 1.1] of the target. Inside each shape t2 = t1 +
/// change_contrast * u for a random unit band-direction u. t2 is then
/// shifted right by misregistration_shift pixels (edge replicated), and both
/// dates receive independent N(0, sensor_noise^2) noise. The reference marks
/// the planted pixels in unshifted geometry.
inline Scene generate(const SceneSpec& spec) {
    if (spec.width == 0 || spec.height == 0 || spec.bands == 0)
        throw Error(ErrorCode::InvalidArgument, "scene dimensions must be positive");
    if (!(spec.change_fraction >= 0.0 && spec.change_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "change_fraction must lie in [0, 1)");
    if (!(spec.sensor_noise >= 0.0) || !(spec.texture_scale >= 0.0) || !(spec.change_contrast >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "scene noise, contrast and texture scale must be non-negative");

    const std::size_t w = spec.width;
    const std::size_t h = spec.height;
    const std::size_t pixels = w * h;
    const double scale = std::max(1.0, spec.texture_scale);

    Raster t1(w, h, spec.bands);
    for (std::size_t b = 0; b < spec.bands; ++b) {
        const CounterRng coarse(derive_key(spec.seed, 100 + 2 * b));
        const CounterRng fine(derive_key(spec.seed, 101 + 2 * b));
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double v = (detail::value_noise(coarse, scale, y, x) +
                                  0.35 * detail::value_noise(fine, std::max(1.0, scale / 2), y, x)) /
                                 1.35;
                t1.at(b, y, x) = static_cast<float>(0.2 + 0.6 * v);
            }
    }

    // Planted change shapes. shape_of[p] indexes `directions`, -1 = unchanged.
    std::vector<std::int32_t> shape_of(pixels, -1);
    std::vector<std::vector<double>> directions;
    const double target = spec.change_fraction * static_cast<double>(pixels);
    const double lower = 0.9 * target;
    const double upper = 1.1 * target;
    SeqRng rng(derive_key(spec.seed, 1));
    std::size_t changed = 0;
    if (target > 0.0) {
        const double max_radius = std::max(1.0, static_cast<double>(std::min(w, h)) / 8.0);
        const double mean_area = max_radius * max_radius;
        const std::size_t budget = 10 * std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(target / mean_area)));
        std::size_t attempts = 0;
        while (static_cast<double>(changed) < lower) {
            if (attempts++ >= budget)
                throw Error(ErrorCode::InfeasibleFraction,
                            "could not plant " + std::to_string(target) + " changed pixels within " +
                                std::to_string(budget) + " shapes");
            // Cap the shape so it cannot overshoot the upper bound.
            const double room = upper - static_cast<double>(changed);
            const double radius_cap = std::min(max_radius, std::max(0.0, std::sqrt(room) / 2.0 - 0.5));
            const double radius = rng.uniform(0.0, radius_cap);
            const bool disc = rng.uniform() < 0.5;
            const double aspect = rng.uniform(0.5, 1.5);
            const double ry = radius;
            const double rx = std::min(radius * aspect, radius_cap);
            const double cy = rng.uniform(0.0, static_cast<double>(h));
            const double cx = rng.uniform(0.0, static_cast<double>(w));

            std::vector<std::size_t> cover;
            const auto ylo = static_cast<std::int64_t>(std::floor(cy - ry));
            const auto yhi = static_cast<std::int64_t>(std::floor(cy + ry));
            const auto xlo = static_cast<std::int64_t>(std::floor(cx - rx));
            const auto xhi = static_cast<std::int64_t>(std::floor(cx + rx));
            for (std::int64_t y = std::max<std::int64_t>(0, ylo); y <= std::min<std::int64_t>(h - 1, yhi); ++y)
                for (std::int64_t x = std::max<std::int64_t>(0, xlo); x <= std::min<std::int64_t>(w - 1, xhi); ++x) {
                    if (disc && ry > 0 && rx > 0) {
                        const double dy = (y + 0.5 - cy) / (ry + 0.5);
                        const double dx = (x + 0.5 - cx) / (rx + 0.5);
                        if (dy * dy + dx * dx > 1.0) continue;
                    }
                    cover.push_back(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x));
                }
            std::size_t fresh = 0;
            for (std::size_t p : cover) fresh += shape_of[p] < 0;
            if (fresh == 0 || static_cast<double>(changed + fresh) > upper) continue;

            std::vector<double> dir(spec.bands);
            double norm = 0.0;
            while (norm < 1e-6) {
                norm = 0.0;
                for (double& d : dir) {
                    d = rng.normal();
                    norm += d * d;
                }
                norm = std::sqrt(norm);
            }
            for (double& d : dir) d /= norm;
            const auto id = static_cast<std::int32_t>(directions.size());
            directions.push_back(std::move(dir));
            for (std::size_t p : cover) shape_of[p] = id;
            changed += fresh;
        }
    }

    LabelMap reference(w, h, Label::Unchanged);
    Raster t2 = t1;
    for (std::size_t p = 0; p < pixels; ++p) {
        if (shape_of[p] < 0) continue;
        reference[p] = Label::Changed;
        const auto& dir = directions[static_cast<std::size_t>(shape_of[p])];
        for (std::size_t b = 0; b < spec.bands; ++b)
            t2.band(b)[p] = static_cast<float>(t2.band(b)[p] + spec.change_contrast * dir[b]);
    }

    if (spec.misregistration_shift != 0) {
        const Raster unshifted = t2;
        const auto last = static_cast<std::int64_t>(w) - 1;
        for (std::size_t b = 0; b < spec.bands; ++b)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    const std::int64_t src = std::clamp<std::int64_t>(static_cast<std::int64_t>(x) - spec.misregistration_shift, 0, last);
                    t2.at(b, y, x) = unshifted.at(b, y, static_cast<std::size_t>(src));
                }
    }

    if (spec.sensor_noise > 0.0) {
        const CounterRng n1(derive_key(spec.seed, 2));
        const CounterRng n2(derive_key(spec.seed, 3));
        auto d1 = t1.data();
        auto d2 = t2.data();
        for (std::size_t i = 0; i < d1.size(); ++i) {
            d1[i] = static_cast<float>(d1[i] + spec.sensor_noise * n1.normal(i));
            d2[i] = static_cast<float>(d2[i] + spec.sensor_noise * n2.normal(i));
        }
    }
    return {std::move(t1), std::move(t2), std::move(reference)};
}

}  // namespace dcvaconf

#endif
