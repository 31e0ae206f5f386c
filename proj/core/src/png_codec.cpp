#include "png_codec.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include "scribblefill/error.hpp"

namespace scribblefill::detail {

namespace {

struct ReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

struct ErrorState {
  char message[256] = {0};
};

void on_error(png_structp png, png_const_charp msg) {
  auto* err = static_cast<ErrorState*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof err->message, "%s", msg);
  png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

void read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
  if (st->offset + length > st->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, st->bytes.data() + st->offset, length);
  st->offset += length;
}

void write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_callback(png_structp) {}

}  // namespace

bool looks_like_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

PngPixels decode_png(std::span<const std::uint8_t> bytes, PngTarget target) {
  if (!looks_like_png(bytes)) throw IoError("not a PNG stream");
  ErrorState err;
  ReadState st{bytes, 0};
  PngPixels out;
  std::vector<png_bytep> rows;
  std::string failure;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
  if (png == nullptr) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  png_infop end_info = png_create_info_struct(png);
  if (info == nullptr || end_info == nullptr) {
    png_destroy_read_struct(&png, &info, &end_info);
    throw IoError("png: out of memory");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, &end_info);
    throw IoError(std::string("malformed PNG: ") + err.message);
  }

  png_set_read_fn(png, &st, read_callback);
  png_set_user_limits(png, 1u << 16, 1u << 16);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (depth != 8) {
    failure = "unsupported PNG: bit depth " + std::to_string(depth) + " (only 8-bit accepted)";
  } else if (target == PngTarget::kSingleChannel) {
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
      failure = "expected a single-channel (grayscale or palette) PNG";
    }
    out.channels = 1;
  } else {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    out.channels = 3;
  }
  if (!failure.empty()) {
    png_destroy_read_struct(&png, &info, &end_info);
    throw IoError(failure);
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != std::size_t{w} * static_cast<std::size_t>(out.channels)) {
    png_destroy_read_struct(&png, &info, &end_info);
    throw IoError("unsupported PNG pixel layout");
  }
  out.width = w;
  out.height = h;
  out.data.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = out.data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, end_info);
  png_destroy_read_struct(&png, &info, &end_info);
  if (st.offset != bytes.size()) throw IoError("PNG stream has trailing bytes");
  return out;
}

std::vector<std::uint8_t> encode_png(std::uint32_t width, std::uint32_t height, int channels,
                                     std::span<const std::uint8_t> data) {
  if (channels != 1 && channels != 3) throw ValidationError("encode_png: channels must be 1 or 3");
  if (data.size() != std::size_t{width} * height * static_cast<std::size_t>(channels)) {
    throw ValidationError("encode_png: buffer size mismatch");
  }
  ErrorState err;
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(height);
  for (std::uint32_t y = 0; y < height; ++y) {
    rows[y] = const_cast<png_bytep>(data.data() + std::size_t{y} * width * static_cast<std::size_t>(channels));
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_error, on_warning);
  if (png == nullptr) throw IoError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: out of memory");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(std::string("PNG encode failed: ") + err.message);
  }
  png_set_write_fn(png, &out, write_callback, flush_callback);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace scribblefill::detail
