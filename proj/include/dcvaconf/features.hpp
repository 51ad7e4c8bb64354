#ifndef DCVACONF_FEATURES_HPP
#define DCVACONF_FEATURES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcvaconf/error.hpp"
#include "dcvaconf/parallel.hpp"
#include "dcvaconf/random.hpp"
#include "dcvaconf/raster.hpp"

namespace dcvaconf {

enum class ExtractorKind { Identity, RandomConv, Precomputed };

/// Describes one bi-temporal feature extractor.
///
/// Layer numbers in `taps` are 1-based: layer 1 is the first convolution and
/// layer `depth` the last. For Precomputed extractors each tap `i` names a
/// file `layer_<i>.cdr` inside `feature_dir`.
struct ExtractorSpec {
    ExtractorKind kind = ExtractorKind::RandomConv;
    std::vector<std::size_t> taps{1};
    std::size_t channels = 8;
    std::size_t kernel_size = 3;
    std::size_t depth = 1;
    std::size_t pool_size = 1;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> feature_dir;

    friend bool operator==(const ExtractorSpec&, const ExtractorSpec&) = default;
};

/// Deeper primary extractor: depth 6, taps {2,4,6}, 16 channels, 3x3
/// kernels, 3x3 pooling.
inline ExtractorSpec default_primary_spec(std::uint64_t seed) {
    return {ExtractorKind::RandomConv, {2, 4, 6}, 16, 3, 6, 3, seed, std::nullopt};
}

/// Shallower secondary extractor: depth 3, taps {1,3}, 32 channels, 5x5 pooling.
/// Wider and smoother than the primary so noisy magnitude maps stay light-tailed.
inline ExtractorSpec default_secondary_spec(std::uint64_t seed) {
    return {ExtractorKind::RandomConv, {1, 3}, 32, 3, 3, 5, seed, std::nullopt};
}

inline void validate(const ExtractorSpec& spec) {
    if (spec.kind == ExtractorKind::Identity) return;
    if (spec.taps.empty()) throw Error(ErrorCode::EmptyTapSet, "extractor taps no layers");
    if (spec.kind == ExtractorKind::Precomputed) {
        if (!spec.feature_dir) throw Error(ErrorCode::InvalidArgument, "precomputed extractor needs a feature directory");
        return;
    }
    if (spec.depth == 0) throw Error(ErrorCode::InvalidArgument, "depth must be at least 1");
    if (spec.channels == 0) throw Error(ErrorCode::InvalidArgument, "channels per layer must be at least 1");
    if (spec.kernel_size == 0 || spec.kernel_size % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "kernel size must be odd and positive");
    if (spec.pool_size == 0 || spec.pool_size % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "pool size must be odd and positive");
    for (std::size_t t : spec.taps)
        if (t == 0 || t > spec.depth)
            throw Error(ErrorCode::InvalidArgument,
                        "tap " + std::to_string(t) + " outside layers 1.." + std::to_string(spec.depth));
}

/// Per-pixel feature vectors, stored one plane per feature dimension
/// (value of dimension d at pixel p is at d * pixels + p).
class FeatureStack {
public:
    FeatureStack(std::size_t width, std::size_t height, std::size_t dims)
        : width_(width), height_(height), dims_(dims), values_(width * height * dims, 0.0f) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t dims() const noexcept { return dims_; }
    std::size_t pixels() const noexcept { return width_ * height_; }

    std::span<const float> plane(std::size_t d) const noexcept { return {values_.data() + d * pixels(), pixels()}; }
    std::span<float> plane(std::size_t d) noexcept { return {values_.data() + d * pixels(), pixels()}; }

    float value(std::size_t d, std::size_t p) const noexcept { return values_[d * pixels() + p]; }
    float& value(std::size_t d, std::size_t p) noexcept { return values_[d * pixels() + p]; }

    std::span<const float> values() const noexcept { return values_; }
    std::span<float> values() noexcept { return values_; }

    bool same_shape(const FeatureStack& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_ && dims_ == o.dims_;
    }

    friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

private:
    std::size_t width_;
    std::size_t height_;
    std::size_t dims_;
    std::vector<float> values_;
};

inline void require_same_dims(const FeatureStack& a, const FeatureStack& b) {
    if (!a.same_shape(b))
        throw Error(ErrorCode::DimsMismatch, "feature stacks differ: " + std::to_string(a.width()) + "x" +
                                                 std::to_string(a.height()) + "x" + std::to_string(a.dims()) +
                                                 " vs " + std::to_string(b.width()) + "x" +
                                                 std::to_string(b.height()) + "x" + std::to_string(b.dims()));
}

namespace detail {

// Mirror index without repeating the edge sample: -1 -> 1, n -> n-2.
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    while (i < 0 || i > last) {
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
    }
    return static_cast<std::size_t>(i);
}

// Weights of one layer, laid out [out][in][ky][kx].
inline std::vector<float> layer_weights(const ExtractorSpec& spec, std::size_t layer, std::size_t in_channels) {
    const std::size_t k = spec.kernel_size;
    const std::size_t fan_in = in_channels * k * k;
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const CounterRng rng(derive_key(spec.seed, layer));
    std::vector<float> w(spec.channels * fan_in);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<float>(rng.normal(i) * scale);
    return w;
}

// One convolution + rectifier layer over planar input, reflection padded.
inline std::vector<float> conv_relu(std::span<const float> input, std::size_t in_channels, std::size_t width,
                                    std::size_t height, const std::vector<float>& weights, std::size_t out_channels,
                                    std::size_t kernel) {
    const std::size_t pixels = width * height;
    const auto radius = static_cast<std::ptrdiff_t>(kernel / 2);
    std::vector<std::size_t> col_map(kernel * width);
    std::vector<std::size_t> row_map(kernel * height);
    for (std::size_t k = 0; k < kernel; ++k) {
        for (std::size_t x = 0; x < width; ++x)
            col_map[k * width + x] = reflect_index(static_cast<std::ptrdiff_t>(x) + k - radius, width);
        for (std::size_t y = 0; y < height; ++y)
            row_map[k * height + y] = reflect_index(static_cast<std::ptrdiff_t>(y) + k - radius, height);
    }

    std::vector<float> output(out_channels * pixels, 0.0f);
    parallel_for(0, out_channels, [&](std::size_t co) {
        float* out = output.data() + co * pixels;
        for (std::size_t ci = 0; ci < in_channels; ++ci) {
            const float* in = input.data() + ci * pixels;
            for (std::size_t ky = 0; ky < kernel; ++ky) {
                for (std::size_t kx = 0; kx < kernel; ++kx) {
                    const float w = weights[((co * in_channels + ci) * kernel + ky) * kernel + kx];
                    const std::size_t* cols = col_map.data() + kx * width;
                    for (std::size_t y = 0; y < height; ++y) {
                        const float* src = in + row_map[ky * height + y] * width;
                        float* dst = out + y * width;
                        for (std::size_t x = 0; x < width; ++x) dst[x] += w * src[cols[x]];
                    }
                }
            }
        }
        for (std::size_t p = 0; p < pixels; ++p) out[p] = std::max(out[p], 0.0f);
    });
    return output;
}

// Stride-1 mean filter of odd width over every plane, reflection padded.
inline void box_filter(std::vector<float>& planes, std::size_t channels, std::size_t width, std::size_t height,
                       std::size_t size) {
    if (size <= 1) return;
    const auto radius = static_cast<std::ptrdiff_t>(size / 2);
    const std::size_t pixels = width * height;
    const float norm = 1.0f / static_cast<float>(size * size);
    parallel_for(0, channels, [&](std::size_t c) {
        float* plane = planes.data() + c * pixels;
        std::vector<float> rows(pixels, 0.0f);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                float acc = 0.0f;
                for (std::ptrdiff_t d = -radius; d <= radius; ++d)
                    acc += plane[y * width + reflect_index(static_cast<std::ptrdiff_t>(x) + d, width)];
                rows[y * width + x] = acc;
            }
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                float acc = 0.0f;
                for (std::ptrdiff_t d = -radius; d <= radius; ++d)
                    acc += rows[reflect_index(static_cast<std::ptrdiff_t>(y) + d, height) * width + x];
                plane[y * width + x] = acc * norm;
            }
    });
}

inline FeatureStack extract_random_conv(const ExtractorSpec& spec, const Raster& x) {
    const std::size_t w = x.width();
    const std::size_t h = x.height();

    std::vector<bool> tapped(spec.depth + 1, false);
    for (std::size_t t : spec.taps) tapped[t] = true;
    std::size_t tap_count = 0;
    for (bool t : tapped) tap_count += t;

    FeatureStack out(w, h, tap_count * spec.channels);
    // Inputs live in [0,1]; centering them keeps zero-bias rectifiers from
    // going dead on all-positive data.
    std::vector<float> activations(x.data().size());
    std::transform(x.data().begin(), x.data().end(), activations.begin(), [](float v) { return v - 0.5f; });
    std::size_t in_channels = x.bands();
    std::size_t next_dim = 0;
    for (std::size_t layer = 1; layer <= spec.depth; ++layer) {
        const auto weights = layer_weights(spec, layer, in_channels);
        activations = conv_relu(activations, in_channels, w, h, weights, spec.channels, spec.kernel_size);
        box_filter(activations, spec.channels, w, h, spec.pool_size);
        in_channels = spec.channels;
        if (tapped[layer]) {
            std::copy(activations.begin(), activations.end(), out.plane(next_dim).begin());
            next_dim += spec.channels;
        }
    }
    return out;
}

inline FeatureStack extract_precomputed(const ExtractorSpec& spec, const Raster& x) {
    std::vector<Raster> layers;
    std::size_t dims = 0;
    for (std::size_t t : spec.taps) {
        const auto path = *spec.feature_dir / ("layer_" + std::to_string(t) + ".cdr");
        Raster r = load_raster(path);
        if (r.width() != x.width() || r.height() != x.height())
            throw Error(ErrorCode::ShapeMismatch, path.string() + " is " + std::to_string(r.width()) + "x" +
                                                      std::to_string(r.height()) + ", image is " +
                                                      std::to_string(x.width()) + "x" + std::to_string(x.height()));
        dims += r.bands();
        layers.push_back(std::move(r));
    }
    FeatureStack out(x.width(), x.height(), dims);
    std::size_t d = 0;
    for (const Raster& r : layers)
        for (std::size_t b = 0; b < r.bands(); ++b, ++d) std::copy(r.band(b).begin(), r.band(b).end(), out.plane(d).begin());
    return out;
}

}  // namespace detail

/// Feature dimensionality `extract` produces for a raster with `bands` bands.
/// Precomputed stacks are sized by their files and report 0 here.
inline std::size_t declared_dims(const ExtractorSpec& spec, std::size_t bands) {
    switch (spec.kind) {
        case ExtractorKind::Identity: return bands;
        case ExtractorKind::RandomConv: {
            std::vector<std::size_t> taps = spec.taps;
            std::sort(taps.begin(), taps.end());
            taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
            return taps.size() * spec.channels;
        }
        case ExtractorKind::Precomputed: return 0;
    }
    return 0;
}

/// Runs an extractor over one acquisition. Pure in (spec, x): the random
/// weights are regenerated from `spec.seed` on every call.
///
/// RandomConv centers the input at 0.5, then applies `depth` layers of
/// (k x k convolution, zero bias, N(0,1)/sqrt(fan_in) weights, max(0,.),
/// stride-1 pool_size x pool_size mean) with reflection padding and
/// concatenates the channel maps of the tapped layers in layer order.
inline FeatureStack extract(const ExtractorSpec& spec, const Raster& x) {
    validate(spec);
    switch (spec.kind) {
        case ExtractorKind::Identity: {
            FeatureStack out(x.width(), x.height(), x.bands());
            std::copy(x.data().begin(), x.data().end(), out.values().begin());
            return out;
        }
        case ExtractorKind::RandomConv: return detail::extract_random_conv(spec, x);
        case ExtractorKind::Precomputed: return detail::extract_precomputed(spec, x);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown extractor kind");
}

/// Z-scores every feature dimension with mean and standard deviation pooled
/// over both dates. Dimensions whose pooled std is below 1e-12 become 0.
inline std::pair<FeatureStack, FeatureStack> standardize_pair(FeatureStack a, FeatureStack b) {
    require_same_dims(a, b);
    const std::size_t n = a.pixels();
    parallel_for(0, a.dims(), [&](std::size_t d) {
        auto pa = a.plane(d);
        auto pb = b.plane(d);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(pa[i]) + pb[i];
        const double mean = sum / (2.0 * n);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double da = pa[i] - mean;
            const double db = pb[i] - mean;
            sq += da * da + db * db;
        }
        const double sd = std::sqrt(sq / (2.0 * n));
        if (sd < 1e-12) {
            std::fill(pa.begin(), pa.end(), 0.0f);
            std::fill(pb.begin(), pb.end(), 0.0f);
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            pa[i] = static_cast<float>((pa[i] - mean) / sd);
            pb[i] = static_cast<float>((pb[i] - mean) / sd);
        }
    });
    return {std::move(a), std::move(b)};
}

}  // namespace dcvaconf

#endif
