// fzsg command-line front end: train, segment, evaluate, inspect.
// Exit codes: 0 success, 1 partial or runtime failure, 2 usage or configuration error.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fzsg/fzsg.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

std::mutex g_out;

void say(const std::string& line) {
  std::lock_guard lock(g_out);
  std::cout << line << '\n' << std::flush;
}

void complain(const std::string& line) {
  std::lock_guard lock(g_out);
  std::cerr << "fzsg: " << line << '\n' << std::flush;
}

std::string last_error(fzsg_status s) {
  return std::string(fzsg_status_name(s)) + ": " + fzsg_last_error();
}

struct ConfigDeleter {
  void operator()(fzsg_config* c) const { fzsg_config_destroy(c); }
};
struct ModelDeleter {
  void operator()(fzsg_model* m) const { fzsg_model_destroy(m); }
};
using ConfigPtr = std::unique_ptr<fzsg_config, ConfigDeleter>;
using ModelPtr = std::unique_ptr<fzsg_model, ModelDeleter>;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dump(const fzsg_config* cfg) {
  char* text = nullptr;
  if (fzsg_config_dump(cfg, &text) != FZSG_OK) return {};
  std::string out(text);
  fzsg_string_free(text);
  return out;
}

void set_key(fzsg_config* cfg, const std::string& key, const std::string& value) {
  if (const auto s = fzsg_config_set(cfg, key.c_str(), value.c_str()); s != FZSG_OK) throw UsageError(last_error(s));
}

ConfigPtr clone(const fzsg_config* src) {
  fzsg_config* raw = nullptr;
  fzsg_config_create(&raw);
  ConfigPtr out(raw);
  std::istringstream in(dump(src));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) set_key(out.get(), line.substr(0, eq), line.substr(eq + 3));
  }
  return out;
}

struct Globals {
  std::string config_path;
  bool verbose = false;
  int threads = 0;
  long long seed = -1;
  std::vector<std::string> overrides;  // key=value
};

// Config file first, then explicit flags: a flag always wins over the file.
ConfigPtr build_config(const Globals& g, const std::vector<std::pair<std::string, std::string>>& extra) {
  fzsg_config* raw = nullptr;
  fzsg_config_create(&raw);
  ConfigPtr cfg(raw);
  if (g.threads <= 0) set_key(cfg.get(), "threads", std::to_string(std::max(1u, std::thread::hardware_concurrency())));
  if (!g.config_path.empty()) {
    if (const auto s = fzsg_config_load_file(cfg.get(), g.config_path.c_str()); s != FZSG_OK)
      throw UsageError(last_error(s));
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    set_key(cfg.get(), kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.threads > 0) set_key(cfg.get(), "threads", std::to_string(g.threads));
  if (g.seed >= 0) set_key(cfg.get(), "seed", std::to_string(g.seed));
  for (const auto& [k, v] : extra) set_key(cfg.get(), k, v);
  if (const auto s = fzsg_config_validate(cfg.get()); s != FZSG_OK) throw UsageError(last_error(s));
  if (g.verbose) {
    std::lock_guard lock(g_out);
    std::cerr << "effective configuration:\n" << dump(cfg.get());
  }
  return cfg;
}

std::string config_value(const fzsg_config* cfg, const std::string& key) {
  std::istringstream in(dump(cfg));
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
  return {};
}

int config_int(const fzsg_config* cfg, const std::string& key) { return std::stoi(config_value(cfg, key)); }

bool config_flag(const fzsg_config* cfg, const std::string& key) { return config_value(cfg, key) == "true"; }

// --model wins over the configuration's model key.
std::string model_path(const fzsg_config* cfg, const std::string& flag) {
  const std::string path = flag.empty() ? config_value(cfg, "model") : flag;
  if (path.empty()) throw UsageError("no model given (--model or the model configuration key)");
  return path;
}

ModelPtr load_model(const std::string& path) {
  fzsg_model* raw = nullptr;
  if (const auto s = fzsg_model_load(path.c_str(), &raw); s != FZSG_OK)
    throw UsageError("cannot load model " + path + ": " + last_error(s));
  return ModelPtr(raw);
}

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<fs::path> inputs_of(const std::string& input) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(input)) {
    files.emplace_back(input);
  } else {
    throw UsageError("input not found: " + input);
  }
  if (files.empty()) throw UsageError("no images in " + input);
  return files;
}

void log_line(const char* line, void*) { say(line); }

// ---- train ----

struct TrainArgs {
  std::string images;
  std::string labels;
  std::string out;
  int cv = 0;
  int trees = 0;
  int fps = 0;
  bool normalized_rgb = false;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  std::vector<std::pair<std::string, std::string>> extra;
  if (a.trees > 0) extra.emplace_back("n_trees", std::to_string(a.trees));
  if (a.fps > 0) extra.emplace_back("features_per_split", std::to_string(a.fps));
  if (a.normalized_rgb) extra.emplace_back("normalized_rgb", "true");
  auto cfg = build_config(g, extra);
  if (!fs::is_directory(a.images)) throw UsageError("images directory not found: " + a.images);
  if (!fs::is_directory(a.labels)) throw UsageError("labels directory not found: " + a.labels);
  if (a.cv == 1 || a.cv < 0) throw UsageError("--cv needs at least 2 folds");

  const auto t0 = std::chrono::steady_clock::now();
  fzsg_model* raw = nullptr;
  fzsg_train_summary summary{};
  fzsg_cv_report cv{};
  const auto s = fzsg_train_from_dirs(cfg.get(), a.images.c_str(), a.labels.c_str(), a.cv, &raw, &summary, &cv,
                                      log_line, nullptr);
  if (s != FZSG_OK) {
    complain("training failed: " + last_error(s));
    return kExitPartial;
  }
  ModelPtr model(raw);
  if (a.cv >= 2) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d-fold cross-validation: accuracy %.4f, macro AUC %.4f (lesion %.4f, skin %.4f, other %.4f)",
                  a.cv, cv.accuracy, cv.auc, cv.class_auc[0], cv.class_auc[1], cv.class_auc[2]);
    say(buf);
    say("confusion [true x predicted] (lesion, skin, other):");
    for (int r = 0; r < 3; ++r) {
      std::snprintf(buf, sizeof buf, "  %10llu %10llu %10llu", static_cast<unsigned long long>(cv.confusion[r][0]),
                    static_cast<unsigned long long>(cv.confusion[r][1]),
                    static_cast<unsigned long long>(cv.confusion[r][2]));
      say(buf);
    }
  }
  if (const auto ss = fzsg_model_save(model.get(), a.out.c_str()); ss != FZSG_OK) {
    complain("cannot save model: " + last_error(ss));
    return kExitPartial;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[160];
  std::snprintf(buf, sizeof buf, "model written to %s (%.1f s)", a.out.c_str(), secs);
  say(buf);
  return kExitOk;
}

// ---- segment ----

struct SegmentArgs {
  std::string model;
  std::string input;
  std::string out;
  bool trace = false;
  bool overlay = false;
};

int cmd_segment(const Globals& g, const SegmentArgs& a) {
  auto cfg = build_config(g, {});
  const auto files = inputs_of(a.input);
  auto model = load_model(model_path(cfg.get(), a.model));
  const bool want_trace = a.trace || config_flag(cfg.get(), "trace");
  const bool want_overlay = a.overlay || config_flag(cfg.get(), "overlay");
  fs::create_directories(a.out);

  const int threads = config_int(cfg.get(), "threads");
  const int workers = std::min<int>(std::max(threads, 1), static_cast<int>(files.size()));
  // With several images in flight each one runs single-threaded.
  ConfigPtr per_image = clone(cfg.get());
  if (workers > 1) set_key(per_image.get(), "threads", "1");

  std::atomic<std::size_t> next{0};
  std::atomic<int> failures{0};
  const auto t0 = std::chrono::steady_clock::now();
  auto work = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const auto& f = files[i];
      const std::string stem = f.stem().string();
      const fs::path mask = fs::path(a.out) / (stem + "_Segmentation.png");
      const fs::path trace = fs::path(a.out) / (stem + "_trace");
      const fs::path overlay = fs::path(a.out) / (stem + "_overlay.png");
      const auto ti = std::chrono::steady_clock::now();
      char* flags = nullptr;
      const auto s = fzsg_segment_file(model.get(), per_image.get(), f.string().c_str(), mask.string().c_str(),
                                       want_trace ? trace.string().c_str() : nullptr,
                                       want_overlay ? overlay.string().c_str() : nullptr, &flags);
      if (s != FZSG_OK) {
        ++failures;
        complain("error: " + f.filename().string() + ": " + last_error(s));
        continue;
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - ti).count();
      char buf[64];
      std::snprintf(buf, sizeof buf, " (%.2f s)", secs);
      std::string line = f.filename().string() + " -> " + mask.filename().string() + buf;
      if (flags && *flags) line += " [" + std::string(flags) + "]";
      fzsg_string_free(flags);
      say(line);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[160];
  std::snprintf(buf, sizeof buf, "segmented %zu of %zu images in %.1f s", files.size() - failures.load(), files.size(),
                secs);
  say(buf);
  return failures > 0 ? kExitPartial : kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  std::string out;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  auto cfg = build_config(g, {});
  if (!fs::is_directory(a.pred)) throw UsageError("prediction directory not found: " + a.pred);
  if (!fs::is_directory(a.gt)) throw UsageError("ground-truth directory not found: " + a.gt);
  bool any = false;
  for (const auto& e : fs::directory_iterator(a.pred)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && ext == ".png") any = true;
  }
  if (!any) throw UsageError("no prediction PNGs in " + a.pred);

  const auto t0 = std::chrono::steady_clock::now();
  fzsg_metrics mean{};
  size_t n = 0;
  size_t errors = 0;
  const auto s = fzsg_evaluate_dirs(a.pred.c_str(), a.gt.c_str(), a.out.c_str(), config_int(cfg.get(), "threads"),
                                    &mean, &n, &errors);
  if (s != FZSG_OK) {
    complain("evaluation failed: " + last_error(s));
    return kExitPartial;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[256];
  if (n == 0) {
    complain("no prediction has a matching ground truth; see " + a.out);
    return kExitPartial;
  }
  std::snprintf(buf, sizeof buf,
                "mean over %zu images: accuracy %.3f dice %.3f jaccard %.3f sensitivity %.3f specificity %.3f",
                n, mean.accuracy, mean.dice, mean.jaccard, mean.sensitivity, mean.specificity);
  say(buf);
  say(fzsg_reference_line());
  std::snprintf(buf, sizeof buf, "report written to %s (%zu errors, %.1f s)", a.out.c_str(), errors, secs);
  say(buf);
  return errors > 0 ? kExitPartial : kExitOk;
}

// ---- inspect ----

struct InspectArgs {
  std::string model;
  std::string input;
  std::string out = ".";
};

int cmd_inspect(const Globals& g, const InspectArgs& a) {
  auto cfg = build_config(g, {});
  const std::string path = model_path(cfg.get(), a.model);
  auto model = load_model(path);
  uint32_t trees = 0;
  uint32_t features = 0;
  uint32_t fps = 0;
  fzsg_model_info(model.get(), &trees, &features, &fps);
  say("model " + path + ": " + std::to_string(trees) + " trees, " + std::to_string(features) + " features, " +
      std::to_string(fps) + " candidate features per split");
  if (a.input.empty()) return kExitOk;
  int failures = 0;
  for (const auto& f : inputs_of(a.input)) {
    const auto s = fzsg_inspect_file(model.get(), cfg.get(), f.string().c_str(), a.out.c_str());
    if (s != FZSG_OK) {
      ++failures;
      complain("error: " + f.filename().string() + ": " + last_error(s));
    } else {
      say(f.filename().string() + " -> probability images in " + a.out);
    }
  }
  return failures > 0 ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy-classification skin lesion segmentation", "fzsg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fzsg_version()));
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", g.verbose, "Echo the effective configuration");
  app.add_option("--threads", g.threads, "Worker threads (default: available parallelism)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Training seed")->check(CLI::NonNegativeNumber);
  app.add_option("--set", g.overrides, "Override a configuration key (key=value, repeatable)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a pixel classifier from labelled images");
  train->add_option("--images", ta.images, "Directory of training images")->required();
  train->add_option("--labels", ta.labels, "Directory of label maps (0 unlabelled, 1 lesion, 2 skin, 3 other)")
      ->required();
  train->add_option("-o,--out", ta.out, "Output model file")->required();
  train->add_option("--cv", ta.cv, "Also report stratified k-fold cross-validation");
  train->add_option("--trees", ta.trees, "Number of trees")->check(CLI::PositiveNumber);
  train->add_option("--features-per-split", ta.fps, "Candidate features per split")->check(CLI::PositiveNumber);
  train->add_flag("--normalized-rgb", ta.normalized_rgb, "Use normalised r, g, b instead of raw R, G, B");

  SegmentArgs sa;
  auto* segment = app.add_subcommand("segment", "Segment an image or a directory of images");
  segment->add_option("-m,--model", sa.model, "Model file");
  segment->add_option("input", sa.input, "Image file or directory")->required();
  segment->add_option("-o,--out", sa.out, "Output directory")->required();
  segment->add_flag("--trace", sa.trace, "Write intermediate stage images to <stem>_trace/");
  segment->add_flag("--overlay", sa.overlay, "Write <stem>_overlay.png with the mask boundary");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted masks against ground truth");
  evaluate->add_option("--pred", ea.pred, "Directory of predicted masks")->required();
  evaluate->add_option("--gt", ea.gt, "Directory of <stem>_Segmentation.png ground truths")->required();
  evaluate->add_option("-o,--out", ea.out, "CSV report path")->required();

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect", "Describe a model and write probability images");
  inspect->add_option("-m,--model", ia.model, "Model file");
  inspect->add_option("input", ia.input, "Image file or directory (optional)");
  inspect->add_option("-o,--out", ia.out, "Output directory for probability images");

  for (auto* sub : {train, segment, evaluate, inspect}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(g, ta);
    if (segment->parsed()) return cmd_segment(g, sa);
    if (evaluate->parsed()) return cmd_evaluate(g, ea);
    if (inspect->parsed()) return cmd_inspect(g, ia);
  } catch (const UsageError& e) {
    complain(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    complain(e.what());
    return kExitPartial;
  }
  return kExitUsage;
}
