#include "scribblefill/labeling.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "scribblefill/error.hpp"

namespace scribblefill {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

LabelMap noise_control(const ConfidenceField& field, double threshold) {
  LabelMap out(field.width, field.height, kIgnored);
  const std::size_t n = field.pixel_count();
  const std::size_t c = field.class_count();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = c;
    double best_v = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double v = field.alphas[k][i];
      if (best == c || v > best_v || (v == best_v && field.classes[k] < field.classes[best])) {
        best = k;
        best_v = v;
      }
    }
    if (best < c && best_v >= threshold) out.labels[i] = field.classes[best];
  }
  return out;
}

std::uint32_t scaled_dim(std::uint32_t dim, double scale) {
  const double s = std::round(static_cast<double>(dim) * scale);
  return static_cast<std::uint32_t>(std::clamp(s, 1.0, static_cast<double>(dim)));
}

RasterImage downscale_image(const RasterImage& image, std::uint32_t target_w,
                            std::uint32_t target_h) {
  image.validate();
  if (target_w == 0 || target_h == 0) throw ValidationError("downscale: zero target dimension");
  if (target_w == image.width && target_h == image.height) return image;
  RasterImage out(target_w, target_h);
  const std::uint64_t w = image.width;
  const std::uint64_t h = image.height;
  for (std::uint32_t ty = 0; ty < target_h; ++ty) {
    const std::uint64_t y0 = ty * h / target_h;
    const std::uint64_t y1 = std::max(y0 + 1, (ty + 1) * h / target_h);
    for (std::uint32_t tx = 0; tx < target_w; ++tx) {
      const std::uint64_t x0 = tx * w / target_w;
      const std::uint64_t x1 = std::max(x0 + 1, (tx + 1) * w / target_w);
      std::uint64_t sum[3] = {0, 0, 0};
      for (std::uint64_t y = y0; y < y1; ++y) {
        for (std::uint64_t x = x0; x < x1; ++x) {
          const auto px = image.rgb(y * w + x);
          for (int ch = 0; ch < 3; ++ch) sum[ch] += px[ch];
        }
      }
      const std::uint64_t area = (y1 - y0) * (x1 - x0);
      const std::size_t i = std::size_t{ty} * target_w + tx;
      for (int ch = 0; ch < 3; ++ch) {
        out.pixels[3 * i + ch] = static_cast<std::uint8_t>((sum[ch] + area / 2) / area);
      }
    }
  }
  return out;
}

CoarseAnnotation downscale_annotation(const CoarseAnnotation& ann, std::uint32_t target_w,
                                      std::uint32_t target_h) {
  if (target_w == 0 || target_h == 0) throw ValidationError("downscale: zero target dimension");
  if (target_w == ann.width() && target_h == ann.height()) return ann;
  const std::vector<ClassId> mask = ann.to_index_mask();
  std::vector<ClassId> small(std::size_t{target_w} * target_h, kIgnored);
  for (std::uint32_t ty = 0; ty < target_h; ++ty) {
    const auto sy = std::min<std::uint64_t>(
        static_cast<std::uint64_t>((ty + 0.5) * ann.height() / target_h), ann.height() - 1);
    for (std::uint32_t tx = 0; tx < target_w; ++tx) {
      const auto sx = std::min<std::uint64_t>(
          static_cast<std::uint64_t>((tx + 0.5) * ann.width() / target_w), ann.width() - 1);
      small[std::size_t{ty} * target_w + tx] = mask[sy * ann.width() + sx];
    }
  }
  std::string lost;
  for (std::size_t k = 0; k < ann.class_count(); ++k) {
    if (ann.marked_count(k) == 0) continue;
    const ClassId id = ann.classes()[k];
    if (std::find(small.begin(), small.end(), id) == small.end()) {
      lost += (lost.empty() ? "" : ", ") + std::to_string(id);
    }
  }
  if (!lost.empty()) {
    throw ValidationError("scale too small: class lost after downscaling (classes " + lost + ")");
  }
  return CoarseAnnotation::from_index_mask(target_w, target_h, small, ann.classes());
}

ConfidenceField upscale_field(const ConfidenceField& field, std::uint32_t target_w,
                              std::uint32_t target_h) {
  if (field.width == target_w && field.height == target_h) return field;
  FeaturePlanes planes;
  planes.width = field.width;
  planes.height = field.height;
  planes.planes = field.alphas;
  FeaturePlanes up = bilinear_upsample(planes, target_w, target_h);
  ConfidenceField out;
  out.width = target_w;
  out.height = target_h;
  out.classes = field.classes;
  out.alphas = std::move(up.planes);
  return out;
}

PreparedImage prepare_image(const RasterImage& image, const FeaturePlanes* planes,
                            const EnrichConfig& cfg, const HashModel* pretrained) {
  cfg.validate();
  image.validate();
  PreparedImage prep;
  prep.native_width = image.width;
  prep.native_height = image.height;
  prep.width = scaled_dim(image.width, cfg.scale);
  prep.height = scaled_dim(image.height, cfg.scale);

  auto t0 = Clock::now();
  if (prep.width != image.width || prep.height != image.height) {
    prep.features = build_feature_matrix(downscale_image(image, prep.width, prep.height), planes, cfg);
  } else {
    prep.features = build_feature_matrix(image, planes, cfg);
  }
  prep.features_seconds = seconds_since(t0);
  const std::size_t n = prep.features.rows();

  t0 = Clock::now();
  if (pretrained != nullptr) {
    if (pretrained->dims != prep.features.cols()) {
      throw ValidationError("hash model expects " + std::to_string(pretrained->dims) +
                            " feature dims, image yields " + std::to_string(prep.features.cols()));
    }
    prep.hash = *pretrained;
  } else {
    const auto rows = sample_rows(n, static_cast<std::size_t>(cfg.itq_sample), cfg.seed);
    ItqFit fit = fit_itq_rows(prep.features, rows, static_cast<std::size_t>(cfg.tau),
                              cfg.itq_iters, cfg.seed, true);
    prep.hash = std::move(fit.model);
    prep.itq = std::move(fit.report);
  }
  const CodeBook codes = encode(prep.hash, prep.features);
  prep.hashing_seconds = seconds_since(t0);

  t0 = Clock::now();
  prep.effective_k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.K), n - 1));
  if (n == 1) {
    prep.graph.width = prep.width;
    prep.graph.height = prep.height;
    prep.graph.weights.n = 1;
    prep.graph.weights.row_ptr = {0, 0};
    prep.graph.degrees = {0.0};
  } else {
    EnrichConfig graph_cfg = cfg;
    graph_cfg.K = prep.effective_k;
    HammingSearcher searcher(
        codes, SearchWindow{static_cast<std::uint32_t>(cfg.window_radius), prep.width, prep.height});
    const std::size_t k = static_cast<std::size_t>(prep.effective_k);
    prep.graph = build_affinity(
        prep.features,
        [&](std::uint32_t q, std::vector<std::uint32_t>& out) { searcher.query(q, k, out); },
        graph_cfg);
  }
  prep.laplacian = cfg.laplacian == LaplacianKind::kPlain ? laplacian(prep.graph)
                                                         : clustering_laplacian(prep.graph);
  prep.graph_seconds = seconds_since(t0);
  return prep;
}

EnrichResult solve_annotation(const PreparedImage& prepared, const CoarseAnnotation& ann,
                              const EnrichConfig& cfg) {
  if (ann.width() != prepared.native_width || ann.height() != prepared.native_height) {
    throw ValidationError("annotation is " + std::to_string(ann.width()) + "x" +
                          std::to_string(ann.height()) + ", image is " +
                          std::to_string(prepared.native_width) + "x" +
                          std::to_string(prepared.native_height));
  }
  const bool scaled =
      prepared.width != prepared.native_width || prepared.height != prepared.native_height;
  const SolverOptions opts{cfg.tol, cfg.maxiter};
  PropagateResult prop =
      scaled ? propagate_all(prepared.laplacian,
                             downscale_annotation(ann, prepared.width, prepared.height),
                             cfg.lambda, opts)
             : propagate_all(prepared.laplacian, ann, cfg.lambda, opts);

  EnrichResult result;
  result.field = scaled ? upscale_field(prop.field, prepared.native_width, prepared.native_height)
                        : std::move(prop.field);
  result.labels = noise_control(result.field, cfg.threshold);
  result.report = std::move(prop.report);
  result.report.features_seconds = prepared.features_seconds;
  result.report.hashing_seconds = prepared.hashing_seconds;
  result.report.graph_seconds = prepared.graph_seconds;
  result.report.total_seconds = prepared.features_seconds + prepared.hashing_seconds +
                                prepared.graph_seconds + result.report.solve_seconds;
  return result;
}

EnrichResult enrich(const RasterImage& image, const CoarseAnnotation& ann,
                    const FeaturePlanes* planes, const EnrichConfig& cfg) {
  const auto t0 = Clock::now();
  image.validate();
  if (ann.width() != image.width || ann.height() != image.height) {
    throw ValidationError("annotation dimensions do not match the image");
  }
  if (ann.marked_count() == 0) throw ValidationError("no markups");
  const PreparedImage prepared = prepare_image(image, planes, cfg);
  EnrichResult result = solve_annotation(prepared, ann, cfg);
  result.report.total_seconds = seconds_since(t0);
  return result;
}

}  // namespace scribblefill
