#include "fzsg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>

#include "fzsg/image_io.hpp"
#include "fzsg/parallel.hpp"

namespace fzsg::eval {

namespace fs = std::filesystem;

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require(pred.same_shape(gt), ErrorCode::dimension_mismatch, "prediction and ground truth differ in size");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i];
    const bool g = gt[i];
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const char* name, std::vector<std::string>& degenerate) {
  if (den == 0) {
    degenerate.emplace_back(name);
    return 1.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string join(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool is_png(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png";
}

}  // namespace

Metrics metrics(const ConfusionCounts& c) {
  require(c.total() > 0, ErrorCode::invalid_argument, "metrics of an empty confusion table");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "dice", m.degenerate);
  m.jaccard = ratio(c.tp, c.tp + c.fp + c.fn, "jaccard", m.degenerate);
  m.sensitivity = ratio(c.tp, c.tp + c.fn, "sensitivity", m.degenerate);
  m.specificity = ratio(c.tn, c.tn + c.fp, "specificity", m.degenerate);
  return m;
}

std::string ground_truth_name(const std::string& stem) { return stem + "_Segmentation.png"; }

std::string prediction_stem(const fs::path& pred) {
  std::string stem = pred.stem().string();
  const std::string suffix = "_Segmentation";
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem.resize(stem.size() - suffix.size());
  return stem;
}

DatasetReport evaluate_dataset(const fs::path& pred_dir, const fs::path& gt_dir, int threads) {
  require(fs::is_directory(pred_dir), ErrorCode::io, "prediction directory not found: " + pred_dir.string());
  require(fs::is_directory(gt_dir), ErrorCode::io, "ground-truth directory not found: " + gt_dir.string());
  std::vector<fs::path> preds;
  for (const auto& e : fs::directory_iterator(pred_dir))
    if (e.is_regular_file() && is_png(e.path())) preds.push_back(e.path());
  std::sort(preds.begin(), preds.end());

  std::vector<std::optional<ImageRow>> rows(preds.size());
  std::vector<std::string> errors(preds.size());
  parallel_for(preds.size(), threads, [&](std::size_t i) {
    const std::string stem = prediction_stem(preds[i]);
    const fs::path gt = gt_dir / ground_truth_name(stem);
    if (!fs::exists(gt)) {
      errors[i] = stem + ": missing ground truth " + gt.filename().string();
      return;
    }
    try {
      rows[i] = ImageRow{stem, metrics(confusion(io::read_mask(preds[i]), io::read_mask(gt)))};
    } catch (const std::exception& ex) {
      errors[i] = stem + ": " + ex.what();
    }
  });

  DatasetReport report;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (rows[i]) report.rows.push_back(std::move(*rows[i]));
    if (!errors[i].empty()) report.errors.push_back(std::move(errors[i]));
  }
  if (!report.rows.empty()) {
    const double n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
      report.mean.accuracy += r.m.accuracy / n;
      report.mean.dice += r.m.dice / n;
      report.mean.jaccard += r.m.jaccard / n;
      report.mean.sensitivity += r.m.sensitivity / n;
      report.mean.specificity += r.m.specificity / n;
    }
  }
  return report;
}

std::string to_csv(const DatasetReport& report) {
  std::string out = "image,accuracy,dice,jaccard,sensitivity,specificity,flags\n";
  auto line = [&](const std::string& name, const Metrics& m) {
    out += name + ',' + fmt(m.accuracy) + ',' + fmt(m.dice) + ',' + fmt(m.jaccard) + ',' + fmt(m.sensitivity) + ',' +
           fmt(m.specificity) + ',' + join(m.degenerate, ';') + '\n';
  };
  for (const auto& r : report.rows) line(r.image, r.m);
  if (!report.rows.empty()) line("mean", report.mean);
  if (!report.errors.empty()) {
    out += "# errors\n";
    for (const auto& e : report.errors) out += "# " + e + '\n';
  }
  return out;
}

std::string reference_line() {
  const auto& r = kReferenceMetrics;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "reference (ISBI 2016 test set, not a target): accuracy %.3f dice %.3f jaccard %.3f "
                "sensitivity %.3f specificity %.3f",
                r[0], r[1], r[2], r[3], r[4]);
  return buf;
}

}  // namespace fzsg::eval
