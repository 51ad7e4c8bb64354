#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "dcvaconf/raster.hpp"
#include "support.hpp"

using namespace dcvaconf;
using testing_support::read_bytes;
using testing_support::TempDir;
using testing_support::write_bytes;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

std::vector<unsigned char> cdr_bytes(const std::string& header, std::size_t payload_floats) {
    std::vector<unsigned char> out{'C', 'D', 'R', '1'};
    const auto n = static_cast<std::uint32_t>(header.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(n >> (8 * i)));
    out.insert(out.end(), header.begin(), header.end());
    out.resize(out.size() + 4 * payload_floats, 0);
    return out;
}

std::vector<unsigned char> pnm(const std::string& header, std::vector<unsigned char> payload) {
    std::vector<unsigned char> out(header.begin(), header.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

}  // namespace

TEST(Raster, RejectsEmptyDimensions) {
    EXPECT_EQ(code_of([] { Raster(0, 3, 1); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { Raster(3, 3, 0); }), ErrorCode::InvalidArgument);
}

TEST(Raster, RejectsPayloadOfWrongSize) {
    EXPECT_EQ(code_of([] { Raster(2, 2, 2, std::vector<float>(7)); }), ErrorCode::DimensionMismatch);
}

TEST(Raster, BandSequentialLayout) {
    std::vector<float> data(2 * 3 * 2);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(i);
    const Raster r(3, 2, 2, data);
    EXPECT_EQ(r.at(0, 0, 0), 0.0f);
    EXPECT_EQ(r.at(0, 1, 2), 5.0f);
    EXPECT_EQ(r.at(1, 0, 0), 6.0f);
    EXPECT_EQ(r.at(1, 1, 1), 10.0f);
    EXPECT_EQ(r.band(1)[4], 10.0f);
}

TEST(Grid, RejectsMismatchedCells) {
    EXPECT_EQ(code_of([] { Grid<int>(2, 2, std::vector<int>(3)); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { Grid<int>(0, 2); }), ErrorCode::InvalidArgument);
}

TEST(Grid, RequireSameShape) {
    const Grid<int> a(2, 3);
    const Grid<float> b(3, 2);
    EXPECT_EQ(code_of([&] { require_same_shape(a, b, "test"); }), ErrorCode::ShapeMismatch);
    EXPECT_NO_THROW(require_same_shape(a, Grid<char>(2, 3), "test"));
}

TEST(Cdr, EncodesExactByteLayout) {
    const Raster r(2, 1, 1, {1.0f, -2.5f});
    const auto bytes = encode_cdr(r);
    const std::string header = R"({"width":2,"height":1,"bands":1,"dtype":"f32","layout":"band-sequential"})";
    ASSERT_EQ(bytes.size(), 8 + header.size() + 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CDR1");
    EXPECT_EQ(bytes[4], header.size());
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(std::string(bytes.begin() + 8, bytes.begin() + 8 + header.size()), header);
    // 1.0f = 0x3F800000 little-endian.
    const std::size_t p = 8 + header.size();
    EXPECT_EQ(bytes[p + 0], 0x00);
    EXPECT_EQ(bytes[p + 3], 0x3F);
    // -2.5f = 0xC0200000.
    EXPECT_EQ(bytes[p + 6], 0x20);
    EXPECT_EQ(bytes[p + 7], 0xC0);
}

TEST(Cdr, RoundTripIsBitExact) {
    TempDir dir;
    const Raster r = testing_support::random_raster(7, 5, 3, 11, -4.0, 9.0);
    save_raster(r, dir / "r.cdr");
    EXPECT_EQ(load_raster(dir / "r.cdr"), r);
}

TEST(Cdr, RejectsBadInputs) {
    TempDir dir;
    const auto load = [&](const std::vector<unsigned char>& bytes) {
        write_bytes(dir / "x.cdr", bytes);
        return code_of([&] { load_raster(dir / "x.cdr"); });
    };
    const std::string good = R"({"width":2,"height":2,"bands":1,"dtype":"f32","layout":"band-sequential"})";
    EXPECT_EQ(load(cdr_bytes(good, 3)), ErrorCode::DimensionMismatch);
    EXPECT_EQ(load(cdr_bytes(good, 5)), ErrorCode::DimensionMismatch);
    EXPECT_EQ(load(cdr_bytes("{not json", 4)), ErrorCode::MalformedHeader);
    EXPECT_EQ(load(cdr_bytes(R"({"width":2,"bands":1,"dtype":"f32","layout":"band-sequential"})", 4)),
              ErrorCode::MalformedHeader);
    EXPECT_EQ(load(cdr_bytes(R"({"width":2,"height":2,"bands":1,"dtype":"f64","layout":"band-sequential"})", 4)),
              ErrorCode::UnsupportedFormat);
    EXPECT_EQ(load(cdr_bytes(R"({"width":2,"height":2,"bands":1,"dtype":"f32","layout":"interleaved"})", 4)),
              ErrorCode::UnsupportedFormat);
    EXPECT_EQ(load({'C', 'D', 'R', '1', 0xFF}), ErrorCode::MalformedHeader);
    EXPECT_EQ(load({'G', 'I', 'F', '8', '9', 'a'}), ErrorCode::UnsupportedFormat);
}

TEST(Cdr, NonFiniteValuesAreRejected) {
    TempDir dir;
    Raster r(2, 1, 1);
    r.data()[1] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_EQ(code_of([&] { save_raster(r, dir / "nan.cdr"); }), ErrorCode::RejectedValue);

    // Hand-build a file holding +inf to check the loader.
    const std::string header = R"({"width":1,"height":1,"bands":1,"dtype":"f32","layout":"band-sequential"})";
    auto bytes = cdr_bytes(header, 1);
    const float inf = std::numeric_limits<float>::infinity();
    std::memcpy(bytes.data() + bytes.size() - 4, &inf, 4);
    write_bytes(dir / "inf.cdr", bytes);
    EXPECT_EQ(code_of([&] { load_raster(dir / "inf.cdr"); }), ErrorCode::RejectedValue);
}

TEST(Io, MissingFileIsIoFailure) {
    EXPECT_EQ(code_of([] { load_raster("/nonexistent/dir/x.cdr"); }), ErrorCode::IoFailure);
}

TEST(Pnm, PgmScalesByMaxval) {
    TempDir dir;
    write_bytes(dir / "a.pgm", pnm("P5\n# comment line\n3 1\n100\n", {0, 50, 100}));
    const Raster r = load_raster(dir / "a.pgm");
    ASSERT_EQ(r.bands(), 1u);
    EXPECT_FLOAT_EQ(r.data()[0], 0.0f);
    EXPECT_FLOAT_EQ(r.data()[1], 0.5f);
    EXPECT_FLOAT_EQ(r.data()[2], 1.0f);
}

TEST(Pnm, PpmIsDeinterleaved) {
    TempDir dir;
    write_bytes(dir / "a.ppm", pnm("P6 2 1 255\n", {255, 0, 51, 0, 255, 102}));
    const Raster r = load_raster(dir / "a.ppm");
    ASSERT_EQ(r.bands(), 3u);
    EXPECT_FLOAT_EQ(r.at(0, 0, 0), 1.0f);
    EXPECT_FLOAT_EQ(r.at(0, 0, 1), 0.0f);
    EXPECT_FLOAT_EQ(r.at(1, 0, 1), 1.0f);
    EXPECT_FLOAT_EQ(r.at(2, 0, 0), 0.2f);
    EXPECT_FLOAT_EQ(r.at(2, 0, 1), 0.4f);
}

TEST(Pnm, RejectsBadHeaders) {
    TempDir dir;
    const auto load = [&](const std::vector<unsigned char>& bytes) {
        write_bytes(dir / "x.pgm", bytes);
        return code_of([&] { load_raster(dir / "x.pgm"); });
    };
    EXPECT_EQ(load(pnm("P5\n2 2\n65535\n", std::vector<unsigned char>(8))), ErrorCode::UnsupportedFormat);
    EXPECT_EQ(load(pnm("P5\n2 2\n255\n", std::vector<unsigned char>(3))), ErrorCode::DimensionMismatch);
    EXPECT_EQ(load(pnm("P5\nx 2\n255\n", {})), ErrorCode::MalformedHeader);
    EXPECT_EQ(load(pnm("P5\n0 2\n255\n", {})), ErrorCode::MalformedHeader);
}

TEST(Normalize, BandsMapToUnitInterval) {
    Raster r(3, 1, 2, {2.0f, 4.0f, 6.0f, 7.0f, 7.0f, 7.0f});
    const Raster n = normalize_bands(r);
    EXPECT_FLOAT_EQ(n.at(0, 0, 0), 0.0f);
    EXPECT_FLOAT_EQ(n.at(0, 0, 1), 0.5f);
    EXPECT_FLOAT_EQ(n.at(0, 0, 2), 1.0f);
    for (std::size_t x = 0; x < 3; ++x) EXPECT_FLOAT_EQ(n.at(1, 0, x), 0.5f);
}

TEST(Normalize, PairUsesJointBounds) {
    const Raster a(2, 1, 1, {0.0f, 1.0f});
    const Raster b(2, 1, 1, {1.0f, 3.0f});
    const auto [na, nb] = normalize_pair(a, b);
    EXPECT_FLOAT_EQ(na.data()[1], 1.0f / 3.0f);
    EXPECT_FLOAT_EQ(nb.data()[0], 1.0f / 3.0f);
    EXPECT_FLOAT_EQ(nb.data()[1], 1.0f);
    EXPECT_EQ(code_of([] { normalize_pair(Raster(2, 1, 1), Raster(1, 2, 1)); }), ErrorCode::ShapeMismatch);
}

TEST(Render, ChangeMapRoundTrip) {
    TempDir dir;
    LabelMap m(3, 2);
    m.at(0, 1) = Label::Changed;
    m.at(1, 2) = Label::Changed;
    render_change(m, dir / "c.pgm");
    const auto bytes = read_bytes(dir / "c.pgm");
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 2), "P5");
    EXPECT_EQ(bytes[bytes.size() - 6], 255);
    EXPECT_EQ(bytes[bytes.size() - 5], 0);
    EXPECT_EQ(load_labels(dir / "c.pgm"), m);
}

TEST(Render, ConfidenceMapRoundTrip) {
    TempDir dir;
    ConfidenceMap c(3, 1);
    c[0] = Confidence::ConfidentChanged;
    c[1] = Confidence::ConfidentUnchanged;
    c[2] = Confidence::NotConfident;
    render_confidence(c, dir / "c.ppm");
    const auto bytes = read_bytes(dir / "c.ppm");
    const std::vector<unsigned char> tail(bytes.end() - 9, bytes.end());
    EXPECT_EQ(tail, (std::vector<unsigned char>{0, 0, 0, 255, 255, 255, 255, 0, 0}));
    EXPECT_EQ(load_confidence(dir / "c.ppm"), c);
}

TEST(Render, ConfidenceRejectsForeignColors) {
    TempDir dir;
    write_bytes(dir / "c.ppm", pnm("P6\n1 1\n255\n", {10, 20, 30}));
    EXPECT_EQ(code_of([&] { load_confidence(dir / "c.ppm"); }), ErrorCode::RejectedValue);
}

TEST(Render, ScalarStretchesToFullRange) {
    TempDir dir;
    render_scalar(Grid<float>(3, 1, std::vector<float>{1.0f, 2.0f, 3.0f}), dir / "s.pgm");
    const Raster r = load_raster(dir / "s.pgm");
    EXPECT_FLOAT_EQ(r.data()[0], 0.0f);
    EXPECT_FLOAT_EQ(r.data()[1], 128.0f / 255.0f);
    EXPECT_FLOAT_EQ(r.data()[2], 1.0f);
}

TEST(Render, LabelsThresholdAtMidGray) {
    TempDir dir;
    write_bytes(dir / "l.pgm", pnm("P5 4 1 255\n", {0, 127, 128, 255}));
    const LabelMap m = load_labels(dir / "l.pgm");
    EXPECT_EQ(m[0], Label::Changed);
    EXPECT_EQ(m[1], Label::Changed);
    EXPECT_EQ(m[2], Label::Unchanged);
    EXPECT_EQ(m[3], Label::Unchanged);
}
