#include <gtest/gtest.h>

#include <chrono>

#include "fixtures.hpp"
#include "scribblefill/error.hpp"
#include "scribblefill/labeling.hpp"

using namespace scribblefill;

namespace {

ConfidenceField field_of(std::vector<ClassId> ids, std::vector<std::vector<double>> alphas,
                         std::uint32_t w) {
  ConfidenceField f;
  f.width = w;
  f.height = static_cast<std::uint32_t>(alphas[0].size() / w);
  f.classes = std::move(ids);
  f.alphas = std::move(alphas);
  return f;
}

}  // namespace

TEST(NoiseControl, ArgmaxAndThreshold) {
  const auto f = field_of({3, 5}, {{0.9, 0.2, 0.5, 0.69}, {0.1, 0.8, 0.5, 0.31}}, 2);
  const LabelMap l = noise_control(f, 0.7);
  EXPECT_EQ(l.labels, (std::vector<ClassId>{3, 5, kIgnored, kIgnored}));
  const LabelMap z = noise_control(f, 0.0);
  EXPECT_EQ(z.labels, (std::vector<ClassId>{3, 5, 3, 3}));
}

TEST(NoiseControl, TieGoesToLowestId) {
  const auto f = field_of({7, 2, 4}, {{0.5}, {0.5}, {0.0}}, 1);
  EXPECT_EQ(noise_control(f, 0.5).labels[0], 2);
}

TEST(NoiseControl, ThresholdExactlyMetIsKept) {
  const auto f = field_of({0, 1}, {{0.7}, {0.3}}, 1);
  EXPECT_EQ(noise_control(f, 0.7).labels[0], 0);
  EXPECT_EQ(noise_control(f, 1.0).labels[0], kIgnored);
}

TEST(NoiseControl, HigherThresholdLabelsSubset) {
  const auto inst = fixture::random_instance(5, 600, 3, 4);
  EnrichConfig cfg;
  const auto r = solve_annotation(inst.prepared, inst.annotation, cfg);
  LabelMap prev = noise_control(r.field, 0.0);
  for (double t : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    const LabelMap cur = noise_control(r.field, t);
    for (std::size_t i = 0; i < cur.labels.size(); ++i) {
      if (cur.labels[i] != kIgnored) EXPECT_EQ(cur.labels[i], prev.labels[i]);
    }
    prev = cur;
  }
}

TEST(Enrich, TwoColorImage) {
  const auto fx = fixture::two_color(16, 16);
  const auto ann = CoarseAnnotation::from_index_mask(16, 16, fx.mask, std::vector<ClassId>{0, 1});
  const auto t0 = std::chrono::steady_clock::now();
  const EnrichResult r = enrich(fx.image, ann, nullptr, {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    agree += r.labels.labels[i] == fx.truth.labels[i];
    if (fx.mask[i] != kIgnored) EXPECT_EQ(r.labels.labels[i], fx.mask[i]);
  }
  EXPECT_GE(agree, 250u);
  EXPECT_TRUE(r.report.ok);
  EXPECT_GT(r.report.total_seconds, 0.0);
}

TEST(Enrich, DeterministicForSeed) {
  const auto img = fixture::blob_image(24, 20, 3, 4);
  const auto mask = fixture::random_scribbles(24, 20, 3, 9);
  const auto ann = CoarseAnnotation::from_index_mask(24, 20, mask, std::vector<ClassId>{0, 1, 2});
  const auto a = enrich(img, ann, nullptr, {});
  const auto b = enrich(img, ann, nullptr, {});
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.field.alphas, b.field.alphas);
}

TEST(Enrich, SinglePixelAndTinyImages) {
  RasterImage one(1, 1, {10, 20, 30});
  const std::vector<ClassId> m{0};
  const auto ann = CoarseAnnotation::from_index_mask(1, 1, m, std::vector<ClassId>{0});
  const auto r = enrich(one, ann, nullptr, {});
  EXPECT_NEAR(r.field.alphas[0][0], 1.0, 1e-9);
  EXPECT_EQ(r.labels.labels[0], 0);

  // Default K = 10 is clamped to n - 1.
  RasterImage three(3, 1, {0, 0, 0, 128, 128, 128, 255, 255, 255});
  const std::vector<ClassId> m3{0, kIgnored, 1};
  const auto ann3 = CoarseAnnotation::from_index_mask(3, 1, m3, std::vector<ClassId>{0, 1});
  const auto prep = prepare_image(three, nullptr, {});
  EXPECT_EQ(prep.effective_k, 2);
  const auto r3 = solve_annotation(prep, ann3, {});
  EXPECT_EQ(r3.labels.labels[0], 0);
  EXPECT_EQ(r3.labels.labels[2], 1);
}

TEST(Enrich, ClassWithoutMarkupsIsZero) {
  const auto fx = fixture::two_color(12, 8);
  const auto ann = CoarseAnnotation::from_index_mask(12, 8, fx.mask, std::vector<ClassId>{0, 1, 9});
  const auto r = enrich(fx.image, ann, nullptr, {});
  for (double v : r.field.alphas[2]) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Enrich, DimsMismatchRejected) {
  const auto fx = fixture::two_color(12, 8);
  const auto ann = CoarseAnnotation::from_index_mask(12, 8, fx.mask, std::vector<ClassId>{0, 1});
  const auto prep = prepare_image(fixture::blob_image(10, 8, 1, 1), nullptr, {});
  EXPECT_THROW(solve_annotation(prep, ann, {}), ValidationError);
}

TEST(Scale, DimsAndDownscale) {
  EXPECT_EQ(scaled_dim(100, 0.5), 50u);
  EXPECT_EQ(scaled_dim(3, 0.1), 1u);
  EXPECT_EQ(scaled_dim(7, 1.0), 7u);

  RasterImage img(2, 2, {0, 0, 0, 100, 100, 100, 200, 200, 200, 40, 40, 40});
  const RasterImage d = downscale_image(img, 1, 1);
  EXPECT_EQ(d.pixels, (std::vector<std::uint8_t>{85, 85, 85}));
}

TEST(Scale, LostClassIsNamed) {
  std::vector<ClassId> mask(16, kIgnored);
  mask[5] = 0;
  mask[0] = 1;  // 2x decimation samples odd rows and columns only
  const auto ann = CoarseAnnotation::from_index_mask(4, 4, mask, std::vector<ClassId>{0, 1});
  try {
    (void)downscale_annotation(ann, 2, 2);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
  }
}

TEST(Scale, UpscalePreservesConstantsAndSums) {
  const auto f = field_of({0, 1}, {{0.2, 0.2, 0.2, 0.2}, {0.8, 0.8, 0.8, 0.8}}, 2);
  const auto u = upscale_field(f, 5, 3);
  ASSERT_EQ(u.pixel_count(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_NEAR(u.alphas[0][i], 0.2, 1e-12);
    EXPECT_NEAR(u.alphas[0][i] + u.alphas[1][i], 1.0, 1e-12);
  }
}

TEST(Scale, HalfScaleEnrichAtNativeResolution) {
  const auto fx = fixture::two_color(32, 16);
  std::vector<ClassId> mask(fx.mask.size(), kIgnored);
  for (std::uint32_t x = 2; x < 14; ++x) mask[9 * 32 + x] = 0;
  for (std::uint32_t x = 18; x < 30; ++x) mask[9 * 32 + x] = 1;
  const auto ann = CoarseAnnotation::from_index_mask(32, 16, mask, std::vector<ClassId>{0, 1});
  EnrichConfig cfg;
  cfg.scale = 0.5;
  const auto r = enrich(fx.image, ann, nullptr, cfg);
  EXPECT_EQ(r.labels.width, 32u);
  EXPECT_EQ(r.labels.height, 16u);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) agree += r.labels.labels[i] == fx.truth.labels[i];
  EXPECT_GE(agree, mask.size() * 9 / 10);
}
