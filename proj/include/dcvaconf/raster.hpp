#ifndef DCVACONF_RASTER_HPP
#define DCVACONF_RASTER_HPP

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dcvaconf/error.hpp"

namespace dcvaconf {

/// Multi-band float image. Storage is band-sequential, each band row-major:
/// element (band b, row y, col x) lives at (b * height + y) * width + x.
class Raster {
public:
    Raster(std::size_t width, std::size_t height, std::size_t bands)
        : Raster(width, height, bands, std::vector<float>(width * height * bands, 0.0f)) {}

    Raster(std::size_t width, std::size_t height, std::size_t bands, std::vector<float> data)
        : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
        if (width_ == 0 || height_ == 0 || bands_ == 0)
            throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
        if (data_.size() != width_ * height_ * bands_)
            throw Error(ErrorCode::DimensionMismatch,
                        "raster payload has " + std::to_string(data_.size()) + " values, expected " +
                            std::to_string(width_ * height_ * bands_));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t bands() const noexcept { return bands_; }
    std::size_t pixels() const noexcept { return width_ * height_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }

    std::span<const float> band(std::size_t b) const noexcept { return {data_.data() + b * pixels(), pixels()}; }
    std::span<float> band(std::size_t b) noexcept { return {data_.data() + b * pixels(), pixels()}; }

    float at(std::size_t b, std::size_t y, std::size_t x) const noexcept { return data_[(b * height_ + y) * width_ + x]; }
    float& at(std::size_t b, std::size_t y, std::size_t x) noexcept { return data_[(b * height_ + y) * width_ + x]; }

    bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && bands_ == other.bands_;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t width_;
    std::size_t height_;
    std::size_t bands_;
    std::vector<float> data_;
};

/// Dense per-pixel grid, row-major.
template <typename T>
class Grid {
public:
    Grid(std::size_t width, std::size_t height, T fill = T{})
        : width_(width), height_(height), cells_(width * height, fill) {
        if (width_ == 0 || height_ == 0) throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
    }

    Grid(std::size_t width, std::size_t height, std::vector<T> cells)
        : width_(width), height_(height), cells_(std::move(cells)) {
        if (width_ == 0 || height_ == 0) throw Error(ErrorCode::InvalidArgument, "grid dimensions must be positive");
        if (cells_.size() != width_ * height_)
            throw Error(ErrorCode::DimensionMismatch, "grid cell count does not match width*height");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return cells_.size(); }

    const T& operator[](std::size_t i) const noexcept { return cells_[i]; }
    T& operator[](std::size_t i) noexcept { return cells_[i]; }
    const T& at(std::size_t y, std::size_t x) const noexcept { return cells_[y * width_ + x]; }
    T& at(std::size_t y, std::size_t x) noexcept { return cells_[y * width_ + x]; }

    std::span<const T> cells() const noexcept { return cells_; }
    std::span<T> cells() noexcept { return cells_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }
    bool same_shape(const Raster& r) const noexcept { return width_ == r.width() && height_ == r.height(); }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t width_;
    std::size_t height_;
    std::vector<T> cells_;
};

enum class Label : std::uint8_t { Unchanged = 0, Changed = 1 };

enum class Confidence : std::uint8_t { NotConfident = 0, ConfidentChanged = 1, ConfidentUnchanged = 2 };

using LabelMap = Grid<Label>;
using ConfidenceMap = Grid<Confidence>;

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": " + std::to_string(a.width()) + "x" +
                                                  std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                                  "x" + std::to_string(b.height()));
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline void put_f32_le(std::vector<unsigned char>& out, float v) { put_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

inline float get_f32_le(const unsigned char* p) { return std::bit_cast<float>(get_u32_le(p)); }

constexpr char kCdrMagic[4] = {'C', 'D', 'R', '1'};

inline std::size_t json_dim(const nlohmann::json& header, const char* key) {
    auto it = header.find(key);
    if (it == header.end() || !it->is_number_unsigned() || it->get<std::uint64_t>() == 0)
        throw Error(ErrorCode::MalformedHeader, std::string("missing or invalid '") + key + "'");
    return it->get<std::size_t>();
}

inline Raster decode_cdr(std::span<const unsigned char> bytes) {
    if (bytes.size() < 8) throw Error(ErrorCode::MalformedHeader, "truncated CDR preamble");
    const std::uint32_t header_len = get_u32_le(bytes.data() + 4);
    if (bytes.size() < 8 + std::size_t(header_len)) throw Error(ErrorCode::MalformedHeader, "truncated CDR header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, std::string("CDR header is not JSON: ") + e.what());
    }
    if (!header.is_object()) throw Error(ErrorCode::MalformedHeader, "CDR header must be a JSON object");
    const std::size_t w = json_dim(header, "width");
    const std::size_t h = json_dim(header, "height");
    const std::size_t b = json_dim(header, "bands");
    if (header.value("dtype", "") != "f32") throw Error(ErrorCode::UnsupportedFormat, "CDR dtype must be f32");
    if (header.value("layout", "") != "band-sequential")
        throw Error(ErrorCode::UnsupportedFormat, "CDR layout must be band-sequential");

    const std::size_t payload = bytes.size() - 8 - header_len;
    const std::size_t expected = w * h * b;
    if (payload != expected * 4)
        throw Error(ErrorCode::DimensionMismatch, "CDR payload holds " + std::to_string(payload) +
                                                      " bytes, header declares " + std::to_string(expected) +
                                                      " floats");
    std::vector<float> data(expected);
    const unsigned char* p = bytes.data() + 8 + header_len;
    for (std::size_t i = 0; i < expected; ++i) data[i] = get_f32_le(p + 4 * i);
    return Raster(w, h, b, std::move(data));
}

// Reads whitespace/comment separated ASCII integers of a binary PNM header.
class PnmHeaderReader {
public:
    explicit PnmHeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes), pos_(2) {}

    std::size_t next_uint() {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + (bytes_[pos_] - '0');
            ++pos_;
            if (++digits > 9) throw Error(ErrorCode::MalformedHeader, "PNM header value too large");
        }
        if (digits == 0) throw Error(ErrorCode::MalformedHeader, "expected integer in PNM header");
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t payload_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(ErrorCode::MalformedHeader, "missing separator after PNM header");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_;
};

inline Raster decode_pnm(std::span<const unsigned char> bytes, std::size_t bands) {
    PnmHeaderReader reader(bytes);
    const std::size_t w = reader.next_uint();
    const std::size_t h = reader.next_uint();
    const std::size_t maxval = reader.next_uint();
    if (w == 0 || h == 0) throw Error(ErrorCode::MalformedHeader, "PNM dimensions must be positive");
    if (maxval == 0 || maxval > 255) throw Error(ErrorCode::UnsupportedFormat, "only 8-bit PNM is supported");
    const std::size_t offset = reader.payload_offset();
    const std::size_t expected = w * h * bands;
    if (bytes.size() - offset != expected)
        throw Error(ErrorCode::DimensionMismatch, "PNM payload holds " + std::to_string(bytes.size() - offset) +
                                                      " bytes, header declares " + std::to_string(expected));
    Raster r(w, h, bands);
    const float scale = static_cast<float>(maxval);
    // PNM interleaves channels per pixel; Raster is band-sequential.
    for (std::size_t p = 0; p < w * h; ++p)
        for (std::size_t b = 0; b < bands; ++b) r.band(b)[p] = static_cast<float>(bytes[offset + p * bands + b]) / scale;
    return r;
}

inline std::vector<unsigned char> pnm_header(const char* magic, std::size_t w, std::size_t h) {
    const std::string text = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    return {text.begin(), text.end()};
}

}  // namespace detail

/// Loads a CDR, binary PGM (1 band) or binary PPM (3 bands) raster.
/// 8-bit formats are scaled to [0,1] by their declared maximum.
inline Raster load_raster(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    Raster r = [&] {
        if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, detail::kCdrMagic))
            return detail::decode_cdr(bytes);
        if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return detail::decode_pnm(bytes, 1);
        if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return detail::decode_pnm(bytes, 3);
        throw Error(ErrorCode::UnsupportedFormat, path.string() + " is neither CDR nor binary PGM/PPM");
    }();
    if (!r.all_finite()) throw Error(ErrorCode::RejectedValue, path.string() + " contains non-finite values");
    return r;
}

/// Serializes a raster to CDR bytes (magic, header length, JSON header, payload).
inline std::vector<unsigned char> encode_cdr(const Raster& r) {
    if (!r.all_finite()) throw Error(ErrorCode::RejectedValue, "refusing to store non-finite raster values");
    nlohmann::ordered_json header;
    header["width"] = r.width();
    header["height"] = r.height();
    header["bands"] = r.bands();
    header["dtype"] = "f32";
    header["layout"] = "band-sequential";
    const std::string text = header.dump();

    std::vector<unsigned char> out(std::begin(detail::kCdrMagic), std::end(detail::kCdrMagic));
    out.reserve(8 + text.size() + 4 * r.data().size());
    detail::put_u32_le(out, static_cast<std::uint32_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (float v : r.data()) detail::put_f32_le(out, v);
    return out;
}

inline void save_raster(const Raster& r, const std::filesystem::path& path) {
    const auto bytes = encode_cdr(r);
    detail::write_file(path, bytes);
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

namespace detail {
inline void scale_band(std::span<float> band, float lo, float hi) {
    if (!(hi > lo)) {
        std::fill(band.begin(), band.end(), 0.5f);
        return;
    }
    const double range = static_cast<double>(hi) - lo;
    for (float& v : band) v = static_cast<float>(std::clamp((static_cast<double>(v) - lo) / range, 0.0, 1.0));
}
}  // namespace detail

/// Min-max scales every band independently to [0,1]. A constant band
/// becomes 0.5 everywhere.
inline Raster normalize_bands(Raster r) {
    for (std::size_t b = 0; b < r.bands(); ++b) {
        auto band = r.band(b);
        const auto [lo, hi] = std::minmax_element(band.begin(), band.end());
        detail::scale_band(band, *lo, *hi);
    }
    return r;
}

/// Min-max scales a co-registered pair with per-band bounds taken over both
/// images, so a global radiometric change between dates survives scaling.
inline std::pair<Raster, Raster> normalize_pair(Raster a, Raster b) {
    if (a.width() != b.width() || a.height() != b.height() || a.bands() != b.bands())
        throw Error(ErrorCode::ShapeMismatch, "normalize_pair requires rasters of identical shape");
    for (std::size_t k = 0; k < a.bands(); ++k) {
        auto ba = a.band(k);
        auto bb = b.band(k);
        const auto [lo_a, hi_a] = std::minmax_element(ba.begin(), ba.end());
        const auto [lo_b, hi_b] = std::minmax_element(bb.begin(), bb.end());
        const float lo = std::min(*lo_a, *lo_b);
        const float hi = std::max(*hi_a, *hi_b);
        detail::scale_band(ba, lo, hi);
        detail::scale_band(bb, lo, hi);
    }
    return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Rendering of result maps
// ---------------------------------------------------------------------------

/// ConfidentChanged black, ConfidentUnchanged white, NotConfident red.
inline std::vector<unsigned char> encode_confidence_ppm(const ConfidenceMap& c) {
    auto out = detail::pnm_header("P6", c.width(), c.height());
    out.reserve(out.size() + 3 * c.size());
    for (Confidence s : c.cells()) {
        switch (s) {
            case Confidence::ConfidentChanged: out.insert(out.end(), {0, 0, 0}); break;
            case Confidence::ConfidentUnchanged: out.insert(out.end(), {255, 255, 255}); break;
            case Confidence::NotConfident: out.insert(out.end(), {255, 0, 0}); break;
        }
    }
    return out;
}

inline void render_confidence(const ConfidenceMap& c, const std::filesystem::path& path) {
    detail::write_file(path, encode_confidence_ppm(c));
}

/// Changed 0 (black), Unchanged 255 (white).
inline std::vector<unsigned char> encode_change_pgm(const LabelMap& m) {
    auto out = detail::pnm_header("P5", m.width(), m.height());
    out.reserve(out.size() + m.size());
    for (Label l : m.cells()) out.push_back(l == Label::Changed ? 0 : 255);
    return out;
}

inline void render_change(const LabelMap& m, const std::filesystem::path& path) {
    detail::write_file(path, encode_change_pgm(m));
}

/// Grayscale PGM of a scalar field, min-max stretched to 0..255.
inline void render_scalar(const Grid<float>& field, const std::filesystem::path& path) {
    auto out = detail::pnm_header("P5", field.width(), field.height());
    const auto [lo, hi] = std::minmax_element(field.cells().begin(), field.cells().end());
    const double range = static_cast<double>(*hi) - *lo;
    for (float v : field.cells()) {
        const double t = range > 0 ? (v - *lo) / range : 0.0;
        out.push_back(static_cast<unsigned char>(std::lround(255.0 * t)));
    }
    detail::write_file(path, out);
}

/// Reads a change/reference PGM: values below 128 are Changed.
inline LabelMap load_labels(const std::filesystem::path& path) {
    const Raster r = load_raster(path);
    if (r.bands() != 1) throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a single-band label map");
    LabelMap m(r.width(), r.height());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.data()[i] < 128.0f / 255.0f ? Label::Changed : Label::Unchanged;
    return m;
}

/// Inverse of render_confidence. Any color other than the three legend
/// colors is rejected.
inline ConfidenceMap load_confidence(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a binary PPM");
    detail::PnmHeaderReader reader(bytes);
    const std::size_t w = reader.next_uint();
    const std::size_t h = reader.next_uint();
    if (reader.next_uint() != 255) throw Error(ErrorCode::UnsupportedFormat, "confidence PPM must be 8-bit");
    const std::size_t offset = reader.payload_offset();
    if (w == 0 || h == 0 || bytes.size() - offset != 3 * w * h)
        throw Error(ErrorCode::DimensionMismatch, "confidence PPM payload size does not match header");
    ConfidenceMap c(w, h);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const unsigned char* px = bytes.data() + offset + 3 * i;
        if (px[0] == 0 && px[1] == 0 && px[2] == 0)
            c[i] = Confidence::ConfidentChanged;
        else if (px[0] == 255 && px[1] == 255 && px[2] == 255)
            c[i] = Confidence::ConfidentUnchanged;
        else if (px[0] == 255 && px[1] == 0 && px[2] == 0)
            c[i] = Confidence::NotConfident;
        else
            throw Error(ErrorCode::RejectedValue, "unexpected color in confidence map " + path.string());
    }
    return c;
}

}  // namespace dcvaconf

#endif
