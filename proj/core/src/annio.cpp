#include "scribblefill/annio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"
#include "png_codec.hpp"
#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

// Little-endian byte writer / reader for the binary formats.
class Writer {
 public:
  void magic(const char (&tag)[5]) { out_.insert(out_.end(), tag, tag + 4); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, tag, 4) != 0) {
      throw IoError(std::string(what_) + ": bad magic, expected \"" + tag + "\"");
    }
    pos_ += 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  // Throws unless `count` more bytes are available.
  void need(std::size_t count) const {
    if (bytes_.size() - pos_ < count) throw IoError(std::string(what_) + ": truncated");
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw IoError(std::string(what_) + ": trailing bytes");
  }

 private:
  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

// Netpbm header: magic, then width, height, maxval separated by whitespace
// or comments, then exactly one whitespace byte.
struct PnmHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::size_t body = 0;
};

PnmHeader parse_pnm(std::span<const std::uint8_t> bytes, char kind) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != static_cast<std::uint8_t>(kind)) {
    throw IoError(std::string("not a P") + kind + " file");
  }
  std::size_t pos = 2;
  auto next_token = [&]() -> std::uint64_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw IoError("malformed PNM header");
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + static_cast<std::uint64_t>(bytes[pos] - '0');
      if (v > (1u << 30)) throw IoError("malformed PNM header: value too large");
      ++pos;
    }
    return v;
  };
  PnmHeader h;
  const std::uint64_t w = next_token();
  const std::uint64_t ht = next_token();
  const std::uint64_t maxval = next_token();
  if (w == 0 || ht == 0 || w > 65535 || ht > 65535) throw IoError("malformed PNM header: bad dimensions");
  if (maxval != 255) throw IoError("unsupported PNM: maxval " + std::to_string(maxval) + " is not 8-bit");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IoError("malformed PNM header");
  ++pos;
  h.width = static_cast<std::uint32_t>(w);
  h.height = static_cast<std::uint32_t>(ht);
  h.body = pos;
  return h;
}

}  // namespace

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

// --- images -------------------------------------------------------------------

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw IoError("empty image data");
  if (detail::looks_like_png(bytes)) {
    auto px = detail::decode_png(bytes, detail::PngTarget::kRgb);
    return RasterImage(px.width, px.height, std::move(px.data));
  }
  const PnmHeader h = parse_pnm(bytes, '6');
  const std::size_t need = std::size_t{h.width} * h.height * 3;
  const std::size_t have = bytes.size() - h.body;
  if (have < need) throw IoError("PPM body truncated");
  if (have > need) throw IoError("PPM has trailing bytes");
  return RasterImage(h.width, h.height,
                     Bytes(bytes.begin() + static_cast<std::ptrdiff_t>(h.body), bytes.end()));
}

RasterImage load_image(const std::string& path) { return decode_image(read_file(path)); }

Bytes encode_ppm(const RasterImage& image) {
  image.validate();
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

Bytes encode_png(const RasterImage& image) {
  image.validate();
  return detail::encode_png(image.width, image.height, 3, image.pixels);
}

void save_image(const RasterImage& image, const std::string& path) {
  const bool ppm = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
  write_file(path, ppm ? encode_ppm(image) : encode_png(image));
}

GrayImage decode_gray(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw IoError("empty image data");
  GrayImage g;
  if (detail::looks_like_png(bytes)) {
    auto px = detail::decode_png(bytes, detail::PngTarget::kSingleChannel);
    g.width = px.width;
    g.height = px.height;
    g.values = std::move(px.data);
    return g;
  }
  const PnmHeader h = parse_pnm(bytes, '5');
  const std::size_t need = std::size_t{h.width} * h.height;
  const std::size_t have = bytes.size() - h.body;
  if (have < need) throw IoError("PGM body truncated");
  if (have > need) throw IoError("PGM has trailing bytes");
  g.width = h.width;
  g.height = h.height;
  g.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.body), bytes.end());
  return g;
}

Bytes encode_gray_png(const GrayImage& image) {
  return detail::encode_png(image.width, image.height, 1, image.values);
}

// --- class tables and masks -------------------------------------------------------

ClassTable::ClassTable(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
  std::set<ClassId> seen;
  for (const auto& e : entries_) {
    if (e.id == kIgnored) throw ValidationError("class id 255 is reserved");
    if (!seen.insert(e.id).second) throw ValidationError("duplicate class id " + std::to_string(e.id));
  }
}

std::vector<ClassId> ClassTable::ids() const {
  std::vector<ClassId> ids;
  for (const auto& e : entries_) ids.push_back(e.id);
  return ids;
}

std::vector<std::string> ClassTable::names() const {
  std::vector<std::string> names;
  for (const auto& e : entries_) names.push_back(e.name);
  return names;
}

bool ClassTable::contains(ClassId id) const {
  return std::any_of(entries_.begin(), entries_.end(), [id](const auto& e) { return e.id == id; });
}

ClassTable parse_class_table(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("class table: invalid JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("classes")) j = j["classes"];
  if (!j.is_array() || j.empty()) throw ValidationError("class table: expected a non-empty array");
  std::vector<ClassEntry> entries;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_number_integer()) {
      throw ValidationError("class table: every entry needs an integer \"id\"");
    }
    const auto id = item["id"].get<std::int64_t>();
    if (id < 0 || id >= 255) throw ValidationError("class table: ids must be in [0, 254]");
    std::string name = std::to_string(id);
    if (item.contains("name")) {
      if (!item["name"].is_string()) throw ValidationError("class table: \"name\" must be a string");
      name = item["name"].get<std::string>();
    }
    entries.push_back({static_cast<ClassId>(id), std::move(name)});
  }
  return ClassTable(std::move(entries));
}

ClassTable load_class_table(const std::string& path) {
  const Bytes b = read_file(path);
  return parse_class_table(std::string(b.begin(), b.end()));
}

std::string class_table_to_json(const ClassTable& table) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : table.entries()) j.push_back({{"id", e.id}, {"name", e.name}});
  return j.dump(2);
}

CoarseAnnotation decode_mask(std::span<const std::uint8_t> bytes, const ClassTable& table) {
  const GrayImage g = decode_gray(bytes);
  const auto ids = table.ids();
  return CoarseAnnotation::from_index_mask(g.width, g.height, g.values, ids);
}

CoarseAnnotation load_mask(const std::string& path, const ClassTable& table) {
  return decode_mask(read_file(path), table);
}

// --- label maps -----------------------------------------------------------------

Bytes encode_labelmap_png(const LabelMap& labels) {
  return detail::encode_png(labels.width, labels.height, 1, labels.labels);
}

void save_labelmap(const LabelMap& labels, const std::string& path) {
  write_file(path, encode_labelmap_png(labels));
}

LabelMap decode_labelmap(std::span<const std::uint8_t> bytes) {
  GrayImage g = decode_gray(bytes);
  LabelMap m;
  m.width = g.width;
  m.height = g.height;
  m.labels = std::move(g.values);
  return m;
}

LabelMap load_labelmap(const std::string& path) { return decode_labelmap(read_file(path)); }

Bytes encode_confidence_png(const ConfidenceField& field, std::size_t class_index) {
  if (class_index >= field.class_count()) throw ValidationError("confidence: class index out of range");
  const auto& a = field.alphas[class_index];
  std::vector<std::uint8_t> px(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const float v = static_cast<float>(a[i]);
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(255.0f * v, 0.0f, 255.0f)));
  }
  return detail::encode_png(field.width, field.height, 1, px);
}

// --- binary formats ---------------------------------------------------------------

Bytes encode_feature_planes(const FeaturePlanes& planes) {
  planes.validate();
  Writer w;
  w.magic("FPLN");
  w.u32(1);
  w.u32(planes.width);
  w.u32(planes.height);
  w.u32(static_cast<std::uint32_t>(planes.plane_count()));
  for (const auto& p : planes.planes) {
    for (double v : p) w.f32(static_cast<float>(v));
  }
  return w.take();
}

FeaturePlanes decode_feature_planes(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "FPLN");
  r.magic("FPLN");
  const std::uint32_t version = r.u32();
  if (version != 1) throw IoError("FPLN: unsupported version " + std::to_string(version));
  FeaturePlanes planes;
  planes.width = r.u32();
  planes.height = r.u32();
  const std::uint32_t count = r.u32();
  if (planes.width == 0 || planes.height == 0 || count == 0) {
    throw IoError("FPLN: empty dimensions or plane list");
  }
  const std::size_t n = planes.pixel_count();
  r.need(n * count * 4);
  planes.planes.assign(count, std::vector<double>(n));
  for (auto& p : planes.planes) {
    for (auto& v : p) {
      v = r.f32();
      if (!std::isfinite(v)) throw IoError("FPLN: non-finite value");
    }
  }
  r.finish();
  return planes;
}

FeaturePlanes load_feature_planes(const std::string& path) {
  return decode_feature_planes(read_file(path));
}

void save_feature_planes(const FeaturePlanes& planes, const std::string& path) {
  write_file(path, encode_feature_planes(planes));
}

Bytes encode_confidence(const ConfidenceField& field) {
  Writer w;
  w.magic("CFLD");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(field.pixel_count()));
  w.u32(static_cast<std::uint32_t>(field.class_count()));
  for (ClassId id : field.classes) w.u32(id);
  for (const auto& a : field.alphas) {
    for (double v : a) w.f32(static_cast<float>(v));
  }
  return w.take();
}

ConfidenceDump decode_confidence(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "CFLD");
  r.magic("CFLD");
  const std::uint32_t version = r.u32();
  if (version != 1) throw IoError("CFLD: unsupported version " + std::to_string(version));
  ConfidenceDump dump;
  dump.pixels = r.u32();
  const std::uint32_t c = r.u32();
  r.need(std::size_t{c} * 4);
  for (std::uint32_t k = 0; k < c; ++k) {
    const std::uint32_t id = r.u32();
    if (id >= 255) throw IoError("CFLD: class id out of range");
    dump.classes.push_back(static_cast<ClassId>(id));
  }
  r.need(std::size_t{c} * dump.pixels * 4);
  dump.planes.assign(c, std::vector<float>(dump.pixels));
  for (auto& p : dump.planes) {
    for (auto& v : p) v = r.f32();
  }
  r.finish();
  return dump;
}

void save_confidence(const ConfidenceField& field, const std::string& path) {
  write_file(path, encode_confidence(field));
}

ConfidenceDump load_confidence(const std::string& path) {
  return decode_confidence(read_file(path));
}

Bytes encode_hash_model(const HashModel& model) {
  if (model.mean.size() != model.dims || model.projection.size() != model.dims * model.bits) {
    throw ValidationError("hash model is inconsistent with its dimensions");
  }
  Writer w;
  w.magic("ITQ1");
  w.u32(static_cast<std::uint32_t>(model.dims));
  w.u32(static_cast<std::uint32_t>(model.bits));
  for (double v : model.mean) w.f64(v);
  for (double v : model.projection) w.f64(v);
  return w.take();
}

HashModel decode_hash_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "ITQ1");
  r.magic("ITQ1");
  HashModel m;
  m.dims = r.u32();
  m.bits = r.u32();
  if (m.dims == 0 || m.bits == 0 || m.bits > 256 || m.dims > 4096) {
    throw IoError("ITQ1: dimensions out of range");
  }
  r.need((m.dims + m.dims * m.bits) * 8);
  m.mean.resize(m.dims);
  for (auto& v : m.mean) v = r.f64();
  m.projection.resize(m.dims * m.bits);
  for (auto& v : m.projection) v = r.f64();
  r.finish();
  return m;
}

void save_hash_model(const HashModel& model, const std::string& path) {
  write_file(path, encode_hash_model(model));
}

HashModel load_hash_model(const std::string& path) { return decode_hash_model(read_file(path)); }

}  // namespace scribblefill
