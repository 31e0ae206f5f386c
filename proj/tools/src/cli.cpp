#include "scribblefill_cli/cli.hpp"

#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "scribblefill/annio.hpp"
#include "scribblefill/error.hpp"
#include "scribblefill/labeling.hpp"
#include "scribblefill/metrics.hpp"
#include "scribblefill/service.hpp"
#include "scribblefill/sparse.hpp"

namespace scribblefill::cli {

namespace {

struct EnrichArgs {
  std::string image, mask, classes, features, config, out_labels, out_confidence;
  std::string dump_graph, hash_model;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
};

struct EvalArgs {
  std::string pred, gt, classes;
  bool json = false;
};

struct HashfitArgs {
  std::vector<std::string> images, features;
  std::string config, out_model;
  int bits = 0;
  bool bits_set = false;
  std::optional<std::uint64_t> seed;
};

struct ServeArgs {
  std::string addr, config;
  std::optional<int> port;
  std::size_t max_pixels = ServiceOptions{}.max_pixels;
};

EnrichConfig base_config(const std::string& path) {
  return path.empty() ? EnrichConfig{} : load_config(path);
}

int cmd_enrich(const EnrichArgs& a, std::ostream& out) {
  EnrichConfig cfg = base_config(a.config);
  if (a.threshold) cfg.threshold = *a.threshold;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();

  const RasterImage image = load_image(a.image);
  const ClassTable table = load_class_table(a.classes);
  const CoarseAnnotation ann = load_mask(a.mask, table);
  if (ann.width() != image.width || ann.height() != image.height) {
    throw ValidationError("mask is " + std::to_string(ann.width()) + "x" + std::to_string(ann.height()) +
                          " but image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height));
  }
  std::optional<FeaturePlanes> planes;
  if (!a.features.empty()) planes = load_feature_planes(a.features);
  std::optional<HashModel> model;
  if (!a.hash_model.empty()) {
    model = load_hash_model(a.hash_model);
    cfg.tau = static_cast<int>(model->bits);
  }

  const PreparedImage prep =
      prepare_image(image, planes ? &*planes : nullptr, cfg, model ? &*model : nullptr);
  const EnrichResult result = solve_annotation(prep, ann, cfg);

  save_labelmap(result.labels, a.out_labels);
  if (!a.out_confidence.empty()) save_confidence(result.field, a.out_confidence);
  if (!a.dump_graph.empty()) {
    std::ofstream f(a.dump_graph, std::ios::binary);
    if (!f) throw IoError("cannot open " + a.dump_graph + " for writing");
    write_matrix_market(prep.graph.weights, f);
    if (!f) throw IoError("write failed: " + a.dump_graph);
  }
  out << result.report.to_text();
  return kExitOk;
}

bool use_color(const std::ostream& out) {
  if (std::getenv("NO_COLOR") != nullptr) return false;
  return &out == &std::cout && ::isatty(STDOUT_FILENO) == 1;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const ClassTable table = load_class_table(a.classes);
  const LabelMap pred = load_labelmap(a.pred);
  const LabelMap gt = load_labelmap(a.gt);
  ConfusionCounts counts(table.ids());
  accumulate(pred, gt, counts);
  if (a.json) {
    out << format_report_json(counts, table.names()) << '\n';
  } else {
    out << format_report_table(counts, table.names(), use_color(out));
  }
  return kExitOk;
}

int cmd_hashfit(const HashfitArgs& a, std::ostream& out) {
  EnrichConfig cfg = base_config(a.config);
  if (a.bits_set) cfg.tau = a.bits;
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  if (!a.features.empty() && a.features.size() != a.images.size()) {
    throw ValidationError("--features must be given once per --image");
  }

  // All images' feature rows are stacked into one n x z matrix.
  FeatureMatrix all;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    const RasterImage image = load_image(a.images[i]);
    std::optional<FeaturePlanes> planes;
    if (!a.features.empty()) planes = load_feature_planes(a.features[i]);
    FeatureMatrix fm = build_feature_matrix(image, planes ? &*planes : nullptr, cfg);
    if (i == 0) {
      all.layout = fm.layout;
      all.height = 1;
    } else if (fm.cols() != all.cols()) {
      throw ValidationError(a.images[i] + ": feature dims " + std::to_string(fm.cols()) +
                            " differ from " + std::to_string(all.cols()));
    }
    all.width += static_cast<std::uint32_t>(fm.rows());
    all.values.insert(all.values.end(), fm.values.begin(), fm.values.end());
  }

  const auto rows = sample_rows(all.rows(), static_cast<std::size_t>(cfg.itq_sample), cfg.seed);
  const ItqFit fit = fit_itq_rows(all, rows, static_cast<std::size_t>(cfg.tau), cfg.itq_iters,
                                  cfg.seed);
  char line[96];
  for (std::size_t i = 0; i < fit.report.losses.size(); ++i) {
    std::snprintf(line, sizeof line, "iter %zu loss %.17g\n", i, fit.report.losses[i]);
    out << line;
  }
  if (fit.report.padded) {
    out << "note: sample rank " << fit.report.rank << " below " << cfg.tau
        << " bits; directions zero-padded\n";
  }
  save_hash_model(fit.model, a.out_model);
  return kExitOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  ServiceOptions options;
  options.config = base_config(a.config);
  options.config.validate();
  options.max_pixels = a.max_pixels;

  HostPort hp{"127.0.0.1", 8080};
  const char* env = std::getenv("SCRIBBLEFILL_ADDR");
  if (a.addr.empty() && !a.port && env != nullptr && *env != '\0') {
    const auto parsed = parse_host_port(env);
    if (!parsed) throw ValidationError(std::string("SCRIBBLEFILL_ADDR: bad address ") + env);
    hp = *parsed;
  }
  if (!a.addr.empty()) {
    if (a.addr.find(':') != std::string::npos) {
      const auto parsed = parse_host_port(a.addr);
      if (!parsed) throw ValidationError("--addr: bad address " + a.addr);
      hp = *parsed;
    } else {
      hp.host = a.addr;
    }
  }
  if (a.port) hp.port = *a.port;

  // Block termination signals before the server spawns its workers so only
  // the waiter thread below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(options);
  const auto port = service.bind(hp.host, hp.port);
  if (!port) {
    err << "error: cannot bind " << hp.host << ":" << hp.port << '\n';
    return kExitValidation;
  }
  out << "listening on " << hp.host << ":" << *port << std::endl;

  std::atomic<bool> signalled{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    signalled = true;
    service.stop();
  });
  const bool ok = service.listen();
  // listen() can also return on a socket error; wake the waiter then.
  if (!signalled) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return ok ? kExitOk : kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Expand scribble annotations into dense label maps.", "scribblefill"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  EnrichArgs ea;
  auto* enrich = app.add_subcommand("enrich", "Enrich a coarse annotation into a dense label map");
  enrich->add_option("--image", ea.image, "Input image (PNG or PPM)")->required();
  enrich->add_option("--mask", ea.mask, "Indexed annotation mask, 255 = unmarked")->required();
  enrich->add_option("--classes", ea.classes, "Class table JSON")->required();
  enrich->add_option("--features", ea.features, "Optional FPLN feature planes");
  enrich->add_option("--config", ea.config, "Config JSON");
  enrich->add_option("--out-labels", ea.out_labels, "Output label map PNG")->required();
  enrich->add_option("--out-confidence", ea.out_confidence, "Output CFLD confidence dump");
  enrich->add_option("--threshold", ea.threshold, "Noise-control threshold")
      ->check(CLI::Range(0.0, 1.0));
  enrich->add_option("--seed", ea.seed, "Random seed for hashing");
  enrich->add_option("--dump-graph", ea.dump_graph, "Write the affinity matrix (Matrix Market)");
  enrich->add_option("--hash-model", ea.hash_model, "Use a pre-fitted ITQ1 hash model");

  EvalArgs va;
  auto* eval = app.add_subcommand("eval", "Score a predicted label map against ground truth");
  eval->add_option("--pred", va.pred, "Predicted label map PNG")->required();
  eval->add_option("--gt", va.gt, "Ground-truth label map PNG")->required();
  eval->add_option("--classes", va.classes, "Class table JSON")->required();
  eval->add_flag("--json", va.json, "Emit JSON instead of a table");

  HashfitArgs ha;
  auto* hashfit = app.add_subcommand("hashfit", "Fit and save an ITQ hash model");
  hashfit->add_option("--image", ha.images, "Training image(s); repeatable")->required();
  hashfit->add_option("--features", ha.features, "FPLN planes, one per --image");
  hashfit->add_option("--config", ha.config, "Config JSON");
  auto* bits_opt = hashfit->add_option("--bits", ha.bits, "Code length in bits");
  hashfit->add_option("--out-model", ha.out_model, "Output ITQ1 model file")->required();
  hashfit->add_option("--seed", ha.seed, "Random seed");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Run the HTTP annotation service");
  serve->add_option("--addr", sa.addr, "Listen host or host:port (env SCRIBBLEFILL_ADDR)");
  serve->add_option("--port", sa.port, "Listen port, 0 picks a free one")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--config", sa.config, "Default config JSON for sessions");
  serve->add_option("--max-pixels", sa.max_pixels, "Largest accepted upload in pixels");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  ha.bits_set = bits_opt->count() > 0;

  try {
    if (*enrich) return cmd_enrich(ea, out);
    if (*eval) return cmd_eval(va, out);
    if (*hashfit) return cmd_hashfit(ha, out);
    if (*serve) return cmd_serve(sa, out, err);
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace scribblefill::cli
