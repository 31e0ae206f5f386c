#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scribblefill/config.hpp"
#include "scribblefill/hashing.hpp"
#include "scribblefill/types.hpp"

namespace scribblefill {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// --- images -----------------------------------------------------------------

/// PNG (any 8-bit color type) or binary PPM (P6, maxval 255).
RasterImage decode_image(std::span<const std::uint8_t> bytes);
RasterImage load_image(const std::string& path);
Bytes encode_ppm(const RasterImage& image);
Bytes encode_png(const RasterImage& image);
/// Format chosen by extension: ".ppm" writes P6, anything else PNG.
void save_image(const RasterImage& image, const std::string& path);

/// Single-channel 8-bit raster (mask, label map, confidence preview).
struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> values;
};

/// 8-bit grayscale or palette PNG (palette indices kept raw), or PGM (P5).
GrayImage decode_gray(std::span<const std::uint8_t> bytes);
Bytes encode_gray_png(const GrayImage& image);

// --- class tables and masks ---------------------------------------------------

struct ClassEntry {
  ClassId id = 0;
  std::string name;
};

/// Ordered (id, name) pairs; ids unique and < 255.
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(std::vector<ClassEntry> entries);

  const std::vector<ClassEntry>& entries() const { return entries_; }
  std::vector<ClassId> ids() const;
  std::vector<std::string> names() const;
  bool contains(ClassId id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ClassEntry> entries_;
};

/// JSON: [{"id": 0, "name": "road"}, ...] or {"classes": [...]}.
ClassTable parse_class_table(const std::string& json_text);
ClassTable load_class_table(const std::string& path);
std::string class_table_to_json(const ClassTable& table);

/// Splits an indexed mask (255 = unmarked) into per-class maps. Throws
/// ValidationError for ids absent from the table and for an all-255 mask.
CoarseAnnotation decode_mask(std::span<const std::uint8_t> bytes, const ClassTable& table);
CoarseAnnotation load_mask(const std::string& path, const ClassTable& table);

// --- label maps ---------------------------------------------------------------

Bytes encode_labelmap_png(const LabelMap& labels);
void save_labelmap(const LabelMap& labels, const std::string& path);
LabelMap decode_labelmap(std::span<const std::uint8_t> bytes);
LabelMap load_labelmap(const std::string& path);

/// Grayscale preview of one confidence plane: round(255 * float(alpha)).
Bytes encode_confidence_png(const ConfidenceField& field, std::size_t class_index);

// --- binary formats -------------------------------------------------------------

/// "FPLN": u32 version = 1, width, height, plane_count, then f32 planes row-major.
Bytes encode_feature_planes(const FeaturePlanes& planes);
FeaturePlanes decode_feature_planes(std::span<const std::uint8_t> bytes);
FeaturePlanes load_feature_planes(const std::string& path);
void save_feature_planes(const FeaturePlanes& planes, const std::string& path);

/// "CFLD": u32 version = 1, n, c, c x u32 class ids, then c f32 planes.
struct ConfidenceDump {
  std::uint32_t pixels = 0;
  std::vector<ClassId> classes;
  std::vector<std::vector<float>> planes;
};
Bytes encode_confidence(const ConfidenceField& field);
ConfidenceDump decode_confidence(std::span<const std::uint8_t> bytes);
void save_confidence(const ConfidenceField& field, const std::string& path);
ConfidenceDump load_confidence(const std::string& path);

/// "ITQ1": u32 z, u32 tau, f64 mean[z], f64 projection[z * tau] row-major.
Bytes encode_hash_model(const HashModel& model);
HashModel decode_hash_model(std::span<const std::uint8_t> bytes);
void save_hash_model(const HashModel& model, const std::string& path);
HashModel load_hash_model(const std::string& path);

}  // namespace scribblefill
