#include <gtest/gtest.h>

#include <algorithm>

#include "dcvaconf/eval.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dcvaconf;

namespace {

// 10 pixels: tp=2, fp=1, fn=1, tn=6.
std::pair<LabelMap, LabelMap> fixture() {
    const Label C = Label::Changed;
    const Label U = Label::Unchanged;
    LabelMap pred(10, 1, std::vector<Label>{C, C, C, U, U, U, U, U, U, U});
    LabelMap ref(10, 1, std::vector<Label>{C, C, U, C, U, U, U, U, U, U});
    return {pred, ref};
}

}  // namespace

TEST(Eval, HandEnumeratedFixture) {
    const auto [pred, ref] = fixture();
    const ConfusionCounts c = confusion(pred, ref);
    EXPECT_EQ(c, (ConfusionCounts{2, 1, 1, 6}));
    const auto r = metrics(c, 10);
    EXPECT_NEAR(r.precision, 66.67, 0.01);
    EXPECT_NEAR(r.sensitivity, 66.67, 0.01);
    EXPECT_NEAR(r.specificity, 85.71, 0.01);
    EXPECT_NEAR(r.f1_changed, 66.67, 0.01);
    EXPECT_NEAR(r.f1_unchanged, 85.71, 0.01);
    EXPECT_NEAR(r.f1_macro, 76.19, 0.01);
    EXPECT_EQ(r.pixel_pct, 100.0);
    EXPECT_TRUE(r.degenerate.empty());
}

TEST(Eval, ConfusionMatchesOracle) {
    dcvaconf::SeqRng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        LabelMap pred(13, 7), ref(13, 7);
        ConfidenceMap mask(13, 7);
        for (std::size_t p = 0; p < pred.size(); ++p) {
            pred[p] = rng.uniform() < 0.3 ? Label::Changed : Label::Unchanged;
            ref[p] = rng.uniform() < 0.3 ? Label::Changed : Label::Unchanged;
            mask[p] = static_cast<Confidence>(rng.integer(0, 2));
        }
        for (const ConfidenceMap* m : std::vector<const ConfidenceMap*>{nullptr, &mask}) {
            const auto got = confusion(pred, ref, m);
            const auto want = oracle::confusion(pred, ref, m);
            EXPECT_EQ(got.tp, want.tp);
            EXPECT_EQ(got.fp, want.fp);
            EXPECT_EQ(got.fn, want.fn);
            EXPECT_EQ(got.tn, want.tn);
        }
    }
}

TEST(Eval, ClassSwapIsExact) {
    for (const ConfusionCounts c : {ConfusionCounts{2, 1, 1, 6}, ConfusionCounts{17, 3, 9, 240}, ConfusionCounts{0, 4, 0, 9}}) {
        const auto a = metrics(c, c.total());
        const auto b = metrics(swap_classes(c), c.total());
        EXPECT_EQ(a.sensitivity, b.specificity);
        EXPECT_EQ(a.specificity, b.sensitivity);
        EXPECT_EQ(a.f1_changed, b.f1_unchanged);
        EXPECT_EQ(a.f1_unchanged, b.f1_changed);
        EXPECT_EQ(a.f1_macro, b.f1_macro);
    }
}

TEST(Eval, MacroIsMeanOfClassF1) {
    const auto r = metrics({17, 3, 9, 240}, 269);
    EXPECT_EQ(r.f1_macro, (r.f1_changed + r.f1_unchanged) / 2.0);
}

TEST(Eval, ZeroDenominatorsAreFlagged) {
    const auto r = metrics({0, 0, 0, 10}, 10);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.sensitivity, 0.0);
    EXPECT_EQ(r.f1_changed, 0.0);
    EXPECT_EQ(r.specificity, 100.0);
    EXPECT_TRUE(r.flagged("precision"));
    EXPECT_TRUE(r.flagged("sensitivity"));
    EXPECT_TRUE(r.flagged("f1_changed"));
    EXPECT_FALSE(r.flagged("specificity"));

    const auto empty = metrics({0, 0, 0, 0}, 10);
    EXPECT_EQ(empty.pixel_pct, 0.0);
    EXPECT_TRUE(empty.flagged("f1_unchanged"));
}

TEST(Eval, MaskSelectsConfidentPixels) {
    const auto [pred, ref] = fixture();
    ConfidenceMap mask(10, 1, Confidence::ConfidentUnchanged);
    mask[2] = Confidence::NotConfident;  // the false positive
    mask[3] = Confidence::NotConfident;  // the false negative
    const auto ev = evaluate_run(pred, &mask, ref);
    ASSERT_TRUE(ev.confident);
    EXPECT_EQ(ev.confident->counts, (ConfusionCounts{2, 0, 0, 6}));
    EXPECT_EQ(ev.confident->pixel_pct, 80.0);
    EXPECT_EQ(ev.confident->f1_macro, 100.0);
    EXPECT_EQ(ev.all_pixels.pixel_pct, 100.0);
}

TEST(Eval, PermutationInvariant) {
    auto [pred, ref] = fixture();
    const auto before = metrics(confusion(pred, ref), 10);
    std::vector<std::size_t> order{9, 3, 0, 7, 2, 5, 1, 8, 6, 4};
    LabelMap p2(10, 1), r2(10, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        p2[i] = pred[order[i]];
        r2[i] = ref[order[i]];
    }
    const auto after = metrics(confusion(p2, r2), 10);
    EXPECT_EQ(before.f1_macro, after.f1_macro);
    EXPECT_EQ(before.counts, after.counts);
}

TEST(Eval, RejectsInconsistentInputs) {
    EXPECT_THROW(metrics({5, 0, 0, 6}, 10), Error);
    EXPECT_THROW(confusion(LabelMap(2, 2), LabelMap(4, 1)), Error);
}

TEST(Eval, AggregatePooledAndMean) {
    const auto a = metrics({2, 1, 1, 6}, 10);
    const auto b = metrics({8, 0, 2, 0}, 10);
    const std::vector<MetricsReport> both{a, b};

    const auto pooled = aggregate(both, Aggregate::Pooled);
    EXPECT_EQ(pooled.counts, (ConfusionCounts{10, 1, 3, 6}));
    EXPECT_EQ(pooled.total_pixels, 20u);
    EXPECT_NEAR(pooled.precision, 100.0 * 10 / 11, 1e-12);

    const auto mean = aggregate(both, Aggregate::Mean);
    EXPECT_NEAR(mean.precision, (a.precision + b.precision) / 2, 1e-12);
    EXPECT_NEAR(mean.specificity, (a.specificity + 0.0) / 2, 1e-12);
    EXPECT_TRUE(mean.flagged("specificity"));
    EXPECT_EQ(mean.f1_macro, (mean.f1_changed + mean.f1_unchanged) / 2);
    EXPECT_THROW(aggregate(std::vector<MetricsReport>{}, Aggregate::Pooled), Error);
}

TEST(Eval, JsonAndTableLayout) {
    const auto r = metrics({2, 1, 1, 6}, 10);
    const auto j = to_json(r);
    EXPECT_EQ(j.at("counts").at("tn"), 6);
    EXPECT_TRUE(j.at("degenerate").is_array());
    for (const char* key : {"precision", "sensitivity", "specificity", "f1_changed", "f1_macro", "pixel_pct"})
        EXPECT_TRUE(j.contains(key)) << key;

    const std::string header = table_header();
    const auto pos = [&](const char* s) { return header.find(s); };
    EXPECT_LT(pos("Prec."), pos("Sens."));
    EXPECT_LT(pos("Sens."), pos("Spec."));
    EXPECT_LT(pos("Spec."), pos("F1 ch."));
    EXPECT_LT(pos("F1 ch."), pos("F1 mac."));
    EXPECT_LT(pos("F1 mac."), pos("Pixel %"));
    const std::string row = format_row("x", r);
    EXPECT_NE(row.find("66.67"), std::string::npos);
    EXPECT_NE(row.find("76.19"), std::string::npos);
    EXPECT_NE(row.find("100.00"), std::string::npos);
    EXPECT_EQ(row.size(), header.size());
}
