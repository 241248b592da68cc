#include "fzsg/fzsg.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <variant>

#include "fzsg/config.hpp"
#include "fzsg/dataset.hpp"
#include "fzsg/eval.hpp"
#include "fzsg/forest.hpp"
#include "fzsg/fuzzy.hpp"
#include "fzsg/image_io.hpp"
#include "fzsg/imaging.hpp"
#include "fzsg/segmentation.hpp"

struct fzsg_config {
  fzsg::RunConfig cfg;
};

struct fzsg_model {
  fzsg::forest::ForestModel model;
};

namespace {

namespace fs = std::filesystem;

thread_local std::string g_last_error;

template <typename Fn>
fzsg_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FZSG_OK;
  } catch (const fzsg::Error& e) {
    g_last_error = e.what();
    return static_cast<fzsg_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FZSG_E_INTERNAL;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return FZSG_E_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FZSG_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FZSG_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  fzsg::require(p != nullptr, fzsg::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fzsg_metrics to_c(const fzsg::eval::Metrics& m) {
  return {m.accuracy, m.dice, m.jaccard, m.sensitivity, m.specificity, m.degenerate.empty() ? 0 : 1};
}

void emit(fzsg_log_fn log, void* user, const std::string& line) {
  if (log) log(line.c_str(), user);
}

void write_trace(const fzsg::segmentation::SegmentationTrace& trace, const fs::path& dir) {
  fs::create_directories(dir);
  int index = 0;
  for (const auto& e : trace.entries) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%02d_", index++);
    const fs::path p = dir / (prefix + e.name + ".png");
    std::visit([&](const auto& img) { fzsg::io::write_png(p, img); }, e.image);
  }
  std::ofstream info(dir / "trace.txt");
  info << "otsu_threshold = " << trace.otsu_threshold << '\n';
  info << "skin_color = " << int(trace.skin_color[0]) << ' ' << int(trace.skin_color[1]) << ' '
       << int(trace.skin_color[2]) << '\n';
  info << "flags =";
  for (const auto& f : trace.flags) info << ' ' << f;
  info << '\n';
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

}  // namespace

extern "C" {

const char* fzsg_version(void) { return FZSG_VERSION; }

const char* fzsg_last_error(void) { return g_last_error.c_str(); }

void fzsg_string_free(char* s) { std::free(s); }

const char* fzsg_status_name(fzsg_status s) {
  switch (s) {
    case FZSG_OK: return "ok";
    case FZSG_E_INVALID_ARGUMENT: return "invalid argument";
    case FZSG_E_INVALID_IMAGE: return "invalid image";
    case FZSG_E_DIMENSION_MISMATCH: return "dimension mismatch";
    case FZSG_E_IO: return "i/o error";
    case FZSG_E_INCOMPATIBLE_MODEL: return "incompatible model";
    case FZSG_E_FINGERPRINT_MISMATCH: return "fingerprint mismatch";
    case FZSG_E_TRAINING: return "training error";
    case FZSG_E_EMPTY_INPUT: return "empty input";
    case FZSG_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

fzsg_status fzsg_config_create(fzsg_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new fzsg_config{};
  });
}

void fzsg_config_destroy(fzsg_config* cfg) { delete cfg; }

fzsg_status fzsg_config_set(fzsg_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

fzsg_status fzsg_config_load_file(fzsg_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "cfg");
    need(path, "path");
    cfg->cfg.load_file(path);
  });
}

fzsg_status fzsg_config_validate(const fzsg_config* cfg) {
  return guarded([&] {
    need(cfg, "cfg");
    cfg->cfg.validate();
  });
}

fzsg_status fzsg_config_dump(const fzsg_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(cfg->cfg.dump());
  });
}

fzsg_status fzsg_train_from_dirs(const fzsg_config* cfg, const char* images_dir, const char* labels_dir, int cv_folds,
                                 fzsg_model** out, fzsg_train_summary* summary, fzsg_cv_report* cv, fzsg_log_fn log,
                                 void* user) {
  return guarded([&] {
    need(cfg, "cfg");
    need(images_dir, "images_dir");
    need(labels_dir, "labels_dir");
    need(out, "out");
    const auto& rc = cfg->cfg;
    rc.validate();
    fzsg::require(fs::is_directory(images_dir), fzsg::ErrorCode::io,
                  std::string("images directory not found: ") + images_dir);
    fzsg::require(fs::is_directory(labels_dir), fzsg::ErrorCode::io,
                  std::string("labels directory not found: ") + labels_dir);
    fzsg::features::FeatureOptions opts{rc.normalized_rgb, rc.threads};
    const auto corpus = fzsg::dataset::collect(images_dir, labels_dir, rc.seg.working_width, opts);
    for (const auto& im : corpus.images)
      emit(log, user,
           im.image + ": lesion " + std::to_string(im.counts[0]) + ", skin " + std::to_string(im.counts[1]) +
               ", other " + std::to_string(im.counts[2]));
    for (const auto& s : corpus.skipped) emit(log, user, "skipped " + s);
    const auto counts = corpus.set.class_counts();
    emit(log, user,
         "samples: lesion " + std::to_string(counts[0]) + ", skin " + std::to_string(counts[1]) + ", other " +
             std::to_string(counts[2]) + " (total " + std::to_string(corpus.set.size()) + ")");
    if (summary) {
      for (std::size_t c = 0; c < 3; ++c) summary->samples[c] = counts[c];
      summary->images_used = static_cast<uint32_t>(corpus.images.size());
      summary->images_skipped = static_cast<uint32_t>(corpus.skipped.size());
    }
    if (cv_folds >= 2) {
      const auto rep = fzsg::forest::cross_validate(corpus.set, cv_folds, rc.forest_params());
      if (cv) {
        cv->accuracy = rep.accuracy;
        cv->auc = rep.auc;
        for (std::size_t c = 0; c < 3; ++c) {
          cv->class_auc[c] = rep.class_auc[c];
          for (std::size_t d = 0; d < 3; ++d) cv->confusion[c][d] = rep.confusion[c][d];
        }
      }
    }
    *out = new fzsg_model{fzsg::forest::train(corpus.set, rc.forest_params())};
  });
}

fzsg_status fzsg_model_load(const char* path, fzsg_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new fzsg_model{fzsg::forest::load_model(path)};
  });
}

fzsg_status fzsg_model_save(const fzsg_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".partial";
    try {
      fzsg::forest::save_model(model->model, tmp);
      fs::rename(tmp, target);
    } catch (...) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
  });
}

void fzsg_model_destroy(fzsg_model* model) { delete model; }

fzsg_status fzsg_model_info(const fzsg_model* model, uint32_t* n_trees, uint32_t* n_features,
                            uint32_t* features_per_split) {
  return guarded([&] {
    need(model, "model");
    if (n_trees) *n_trees = static_cast<uint32_t>(model->model.trees().size());
    if (n_features) *n_features = static_cast<uint32_t>(model->model.feature_count());
    if (features_per_split) *features_per_split = static_cast<uint32_t>(model->model.features_per_split());
  });
}

fzsg_status fzsg_segment_file(const fzsg_model* model, const fzsg_config* cfg, const char* input,
                              const char* mask_path, const char* trace_dir, const char* overlay_path, char** flags) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "cfg");
    need(input, "input");
    need(mask_path, "mask_path");
    if (flags) *flags = nullptr;
    const fzsg::RgbImage img = fzsg::io::read_rgb(input);
    const auto res = fzsg::segmentation::segment(img, model->model, cfg->cfg.seg, trace_dir != nullptr);
    fzsg::io::write_png(mask_path, res.mask);
    if (trace_dir) write_trace(res.trace, trace_dir);
    if (overlay_path) fzsg::io::write_png(overlay_path, fzsg::segmentation::overlay(img, res.mask));
    if (flags) *flags = dup_string(join_flags(res.trace.flags));
  });
}

fzsg_status fzsg_segment_rgb(const fzsg_model* model, const fzsg_config* cfg, const uint8_t* rgb, int width,
                             int height, uint8_t* mask) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "cfg");
    need(rgb, "rgb");
    need(mask, "mask");
    fzsg::require(width >= 1 && height >= 1, fzsg::ErrorCode::invalid_image, "image dimensions must be positive");
    fzsg::RgbImage img(width, height);
    std::memcpy(img.bytes().data(), rgb, img.bytes().size());
    const auto res = fzsg::segmentation::segment(img, model->model, cfg->cfg.seg, false);
    for (std::size_t i = 0; i < res.mask.size(); ++i) mask[i] = res.mask[i] ? 255 : 0;
  });
}

fzsg_status fzsg_inspect_file(const fzsg_model* model, const fzsg_config* cfg, const char* input,
                              const char* out_dir) {
  return guarded([&] {
    need(model, "model");
    need(cfg, "cfg");
    need(input, "input");
    need(out_dir, "out_dir");
    const fzsg::RgbImage img = fzsg::io::read_rgb(input);
    const auto work = fzsg::imaging::resize_bicubic(img, cfg->cfg.seg.working_width);
    const auto p = fzsg::segmentation::classify(work, model->model, cfg->cfg.threads);
    const auto pi = fzsg::fuzzy::probability_images(p);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string stem = fs::path(input).stem().string();
    fzsg::io::write_png(dir / (stem + "_I_lesion.png"), pi.lesion);
    fzsg::io::write_png(dir / (stem + "_I_skin.png"), pi.skin);
    fzsg::io::write_png(dir / (stem + "_I_other.png"), pi.other);
    fzsg::io::write_png(dir / (stem + "_I_lesion_skin_other.png"), pi.composite);
  });
}

fzsg_status fzsg_evaluate_dirs(const char* pred_dir, const char* gt_dir, const char* csv_path, int threads,
                               fzsg_metrics* mean, size_t* n_images, size_t* n_errors) {
  return guarded([&] {
    need(pred_dir, "pred_dir");
    need(gt_dir, "gt_dir");
    need(csv_path, "csv_path");
    const auto report = fzsg::eval::evaluate_dataset(pred_dir, gt_dir, threads < 1 ? 1 : threads);
    std::ofstream out(csv_path, std::ios::binary);
    fzsg::require(static_cast<bool>(out), fzsg::ErrorCode::io, std::string("cannot write ") + csv_path);
    out << fzsg::eval::to_csv(report);
    fzsg::require(static_cast<bool>(out), fzsg::ErrorCode::io, std::string("cannot write ") + csv_path);
    if (mean) *mean = to_c(report.mean);
    if (n_images) *n_images = report.rows.size();
    if (n_errors) *n_errors = report.errors.size();
  });
}

fzsg_status fzsg_metrics_from_masks(const uint8_t* pred, const uint8_t* gt, size_t n, fzsg_metrics* out) {
  return guarded([&] {
    need(pred, "pred");
    need(gt, "gt");
    need(out, "out");
    fzsg::require(n > 0, fzsg::ErrorCode::empty_input, "masks must be nonempty");
    fzsg::eval::ConfusionCounts c;
    for (size_t i = 0; i < n; ++i) {
      const bool p = pred[i] != 0;
      const bool g = gt[i] != 0;
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn;
      else ++c.tn;
    }
    *out = to_c(fzsg::eval::metrics(c));
  });
}

const char* fzsg_reference_line(void) {
  static const std::string line = fzsg::eval::reference_line();
  return line.c_str();
}

}  // extern "C"
