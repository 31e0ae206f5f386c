#include <gtest/gtest.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "scribblefill/annio.hpp"
#include "scribblefill/error.hpp"

using namespace scribblefill;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

RasterImage random_image(std::uint32_t w, std::uint32_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RasterImage img(w, h);
  for (auto& v : img.pixels) v = static_cast<std::uint8_t>(rng());
  return img;
}

}  // namespace

TEST(Images, OnePixelPpm) {
  Bytes b = bytes_of("P6\n1 1\n255\n");
  b.insert(b.end(), {7, 8, 9});
  const RasterImage img = decode_image(b);
  EXPECT_EQ(img.width, 1u);
  EXPECT_EQ(img.height, 1u);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{7, 8, 9}));
  EXPECT_EQ(encode_ppm(img), b);
}

TEST(Images, PpmHeaderCommentsAccepted) {
  Bytes b = bytes_of("P6 # made by hand\n2 1 255\n");
  b.insert(b.end(), {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(decode_image(b).pixels, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}));
}

TEST(Images, MalformedRejected) {
  Bytes truncated = bytes_of("P6\n2 2\n255\n");
  truncated.insert(truncated.end(), 5, 0);
  EXPECT_THROW(decode_image(truncated), IoError);
  Bytes trailing = bytes_of("P6\n1 1\n255\n");
  trailing.insert(trailing.end(), 4, 0);
  EXPECT_THROW(decode_image(trailing), IoError);
  EXPECT_THROW(decode_image(bytes_of("P6\n1 1\n65535\n\1\1\1\1\1\1")), IoError);
  EXPECT_THROW(decode_image(Bytes{}), IoError);
  EXPECT_THROW(decode_image(bytes_of("GIF89a")), IoError);
}

TEST(Images, PngRoundTripAndDeterminism) {
  const RasterImage img = random_image(13, 7, 2);
  const Bytes png = encode_png(img);
  EXPECT_EQ(png, encode_png(img));
  const RasterImage back = decode_image(png);
  EXPECT_EQ(back.width, 13u);
  EXPECT_EQ(back.height, 7u);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Images, SaveByExtension) {
  fixture::TempDir dir;
  const RasterImage img = random_image(4, 3, 3);
  save_image(img, dir.file("a.ppm"));
  save_image(img, dir.file("a.png"));
  EXPECT_EQ(read_file(dir.file("a.ppm"))[0], 'P');
  EXPECT_EQ(read_file(dir.file("a.png"))[1], 'P');
  EXPECT_EQ(load_image(dir.file("a.ppm")).pixels, img.pixels);
  EXPECT_EQ(load_image(dir.file("a.png")).pixels, img.pixels);
  EXPECT_THROW(load_image(dir.file("missing.png")), IoError);
}

TEST(Gray, PngAndPgm) {
  GrayImage g{3, 2, {0, 1, 2, 254, 255, 7}};
  const GrayImage back = decode_gray(encode_gray_png(g));
  EXPECT_EQ(back.values, g.values);
  Bytes pgm = bytes_of("P5\n3 2\n255\n");
  pgm.insert(pgm.end(), g.values.begin(), g.values.end());
  EXPECT_EQ(decode_gray(pgm).values, g.values);
}

TEST(ClassTables, BothShapes) {
  const auto a = parse_class_table(R"([{"id": 0, "name": "road"}, {"id": 4, "name": "sky"}])");
  const auto b = parse_class_table(R"({"classes": [{"id": 0, "name": "road"}, {"id": 4, "name": "sky"}]})");
  EXPECT_EQ(a.ids(), (std::vector<ClassId>{0, 4}));
  EXPECT_EQ(b.names(), (std::vector<std::string>{"road", "sky"}));
  EXPECT_TRUE(a.contains(4));
  EXPECT_FALSE(a.contains(1));
  EXPECT_EQ(parse_class_table(class_table_to_json(a)).ids(), a.ids());
}

TEST(ClassTables, Invalid) {
  EXPECT_THROW(parse_class_table("[]"), ValidationError);
  EXPECT_THROW(parse_class_table("{"), ValidationError);
  EXPECT_THROW(parse_class_table(R"([{"id": 255}])"), ValidationError);
  EXPECT_THROW(parse_class_table(R"([{"id": 1}, {"id": 1}])"), ValidationError);
  EXPECT_THROW(parse_class_table(R"([{"name": "x"}])"), ValidationError);
  EXPECT_THROW(parse_class_table(R"([{"id": 0, "name": 3}])"), ValidationError);
}

TEST(Masks, DecodeSplitsClasses) {
  const ClassTable table({{0, "a"}, {3, "b"}});
  GrayImage g{2, 2, {0, 255, 3, 3}};
  const auto ann = decode_mask(encode_gray_png(g), table);
  EXPECT_EQ(ann.class_count(), 2u);
  EXPECT_EQ(ann.marked_count(0), 1u);
  EXPECT_EQ(ann.marked_count(1), 2u);
  EXPECT_EQ(ann.marked_count(), 3u);
  EXPECT_EQ(ann.union_map(), (std::vector<std::uint8_t>{1, 0, 1, 1}));
  EXPECT_EQ(ann.to_index_mask(), g.values);
}

TEST(Masks, Errors) {
  const ClassTable table({{0, "a"}});
  GrayImage blank{2, 2, {255, 255, 255, 255}};
  try {
    decode_mask(encode_gray_png(blank), table);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no markups"), std::string::npos);
  }
  GrayImage unknown{2, 1, {0, 9}};
  EXPECT_THROW(decode_mask(encode_gray_png(unknown), table), ValidationError);
}

TEST(LabelMaps, RoundTrip) {
  LabelMap m(3, 2);
  m.labels = {0, 1, kIgnored, 2, 2, 0};
  EXPECT_EQ(decode_labelmap(encode_labelmap_png(m)), m);
  fixture::TempDir dir;
  save_labelmap(m, dir.file("l.png"));
  EXPECT_EQ(load_labelmap(dir.file("l.png")), m);
}

TEST(FeaturePlanesIo, RoundTripAsFloat) {
  FeaturePlanes p;
  p.width = 3;
  p.height = 2;
  p.planes = {{0.5, -1.25, 3, 4, 5, 6}, {1e-3, 2, 3, 4, 5, 0.1}};
  const FeaturePlanes back = decode_feature_planes(encode_feature_planes(p));
  ASSERT_EQ(back.plane_count(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(back.planes[k][i], static_cast<double>(static_cast<float>(p.planes[k][i])));
  }
  Bytes b = encode_feature_planes(p);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "FPLN");
  b.pop_back();
  EXPECT_THROW(decode_feature_planes(b), IoError);
  b = encode_feature_planes(p);
  b.push_back(0);
  EXPECT_THROW(decode_feature_planes(b), IoError);
  b = encode_feature_planes(p);
  b[0] = 'X';
  EXPECT_THROW(decode_feature_planes(b), IoError);
}

TEST(ConfidenceIo, RoundTripAndPreview) {
  ConfidenceField f;
  f.width = 2;
  f.height = 2;
  f.classes = {1, 4};
  f.alphas = {{0.0, 0.25, 0.5, 1.0}, {1.0, 0.75, 0.5, 0.0}};
  const ConfidenceDump d = decode_confidence(encode_confidence(f));
  EXPECT_EQ(d.pixels, 4u);
  EXPECT_EQ(d.classes, f.classes);
  EXPECT_EQ(d.planes[1], (std::vector<float>{1.0f, 0.75f, 0.5f, 0.0f}));
  const GrayImage g = decode_gray(encode_confidence_png(f, 0));
  EXPECT_EQ(g.values, (std::vector<std::uint8_t>{0, 64, 128, 255}));
  EXPECT_THROW(encode_confidence_png(f, 2), ValidationError);
  Bytes b = encode_confidence(f);
  b.resize(b.size() - 1);
  EXPECT_THROW(decode_confidence(b), IoError);
}

TEST(HashModelIo, RoundTripExact) {
  HashModel m;
  m.dims = 3;
  m.bits = 2;
  m.mean = {0.1, 0.2, 1.0 / 3.0};
  m.projection = {1, 0, 0, 1, -0.5, 1e-300};
  const HashModel back = decode_hash_model(encode_hash_model(m));
  EXPECT_EQ(back.dims, 3u);
  EXPECT_EQ(back.bits, 2u);
  EXPECT_EQ(back.mean, m.mean);
  EXPECT_EQ(back.projection, m.projection);
  Bytes b = encode_hash_model(m);
  b.push_back(1);
  EXPECT_THROW(decode_hash_model(b), IoError);
  m.mean.pop_back();
  EXPECT_THROW(encode_hash_model(m), ValidationError);
}
