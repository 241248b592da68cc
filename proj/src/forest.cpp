#include "fzsg/forest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "fzsg/error.hpp"
#include "fzsg/parallel.hpp"

namespace fzsg::forest {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform integer in [0, n) by rejection; portable across standard libraries.
std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

Probabilities normalise(const ClassCounts& c) {
  const double total = static_cast<double>(c[0] + c[1] + c[2]);
  return {c[0] / total, c[1] / total, c[2] / total};
}

double gini(const ClassCounts& c, std::uint64_t n) {
  if (n == 0) return 0.0;
  double s = 0.0;
  for (auto v : c) {
    const double p = static_cast<double>(v) / static_cast<double>(n);
    s += p * p;
  }
  return 1.0 - s;
}

struct Split {
  bool valid = false;
  std::uint16_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, int features_per_split, std::uint64_t seed)
      : data_(data), fps_(static_cast<std::size_t>(features_per_split)), rng_(seed) {}

  Tree build() {
    const std::size_t n = data_.size();
    std::vector<std::uint32_t> idx(n);
    for (auto& i : idx) i = static_cast<std::uint32_t>(below(rng_, n));

    struct Task {
      std::size_t begin, end;
      std::int64_t parent;  // -1 for the root
      bool right;
    };
    Tree tree;
    std::vector<Task> stack{{0, n, -1, false}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto id = static_cast<std::uint32_t>(tree.nodes.size());
      if (t.parent >= 0) {
        auto& parent = tree.nodes[static_cast<std::size_t>(t.parent)];
        (t.right ? parent.right : parent.left) = id;
      }
      tree.nodes.emplace_back();

      const std::span<std::uint32_t> range(idx.data() + t.begin, t.end - t.begin);
      ClassCounts counts{};
      for (auto i : range) ++counts[static_cast<std::size_t>(data_.labels[i])];
      const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
      Split split;
      if (!pure && range.size() >= 2) split = best_split(range, counts);
      if (!split.valid) {
        auto& node = tree.nodes.back();
        node.leaf = true;
        node.counts = counts;
        continue;
      }
      auto& node = tree.nodes.back();
      node.feature = split.feature;
      node.threshold = split.threshold;
      const auto mid = std::partition(range.begin(), range.end(), [&](std::uint32_t i) {
        return static_cast<double>(value(i, split.feature)) <= split.threshold;
      });
      const std::size_t cut = t.begin + static_cast<std::size_t>(mid - range.begin());
      // Right pushed first so the left subtree is emitted first (preorder).
      stack.push_back({cut, t.end, id, true});
      stack.push_back({t.begin, cut, id, false});
    }
    return tree;
  }

 private:
  float value(std::uint32_t row, std::size_t f) const { return data_.values[row * data_.width + f]; }

  Split best_split(std::span<const std::uint32_t> range, const ClassCounts& total) {
    const std::size_t nf = data_.width;
    order_.resize(nf);
    std::iota(order_.begin(), order_.end(), std::uint16_t{0});
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    // Draw candidates without replacement; keep drawing past `fps_` only until
    // one feature yields a valid split.
    for (std::size_t k = 0; k < nf; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(below(rng_, nf - k));
      std::swap(order_[k], order_[j]);
      if (k >= fps_ && best.valid) break;
      evaluate(range, total, order_[k], best);
    }
    return best;
  }

  void evaluate(std::span<const std::uint32_t> range, const ClassCounts& total, std::uint16_t f, Split& best) {
    pairs_.clear();
    for (auto i : range) pairs_.emplace_back(value(i, f), static_cast<std::uint8_t>(data_.labels[i]));
    std::sort(pairs_.begin(), pairs_.end());
    const auto n = static_cast<std::uint64_t>(pairs_.size());
    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
      ++left[pairs_[i].second];
      if (!(pairs_[i].first < pairs_[i + 1].first)) continue;
      const std::uint64_t nl = i + 1;
      const std::uint64_t nr = n - nl;
      const ClassCounts right{total[0] - left[0], total[1] - left[1], total[2] - left[2]};
      const double imp = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                         static_cast<double>(n);
      if (imp < best.impurity) {
        best.valid = true;
        best.impurity = imp;
        best.feature = f;
        best.threshold = (static_cast<double>(pairs_[i].first) + static_cast<double>(pairs_[i + 1].first)) / 2.0;
      }
    }
  }

  const TrainingSet& data_;
  std::size_t fps_;
  std::mt19937_64 rng_;
  std::vector<std::uint16_t> order_;
  std::vector<std::pair<float, std::uint8_t>> pairs_;
};

}  // namespace

Probabilities Tree::leaf_distribution(std::span<const float> x) const {
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    const auto& n = nodes[i];
    i = static_cast<double>(x[n.feature]) <= n.threshold ? n.left : n.right;
  }
  return normalise(nodes[i].counts);
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].leaf) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return best;
}

ForestModel::ForestModel(std::vector<Tree> trees, int features_per_split, std::vector<std::string> fingerprint)
    : trees_(std::move(trees)), features_per_split_(features_per_split), fingerprint_(std::move(fingerprint)) {
  require(!trees_.empty(), ErrorCode::incompatible_model, "model has no trees");
}

Probabilities ForestModel::predict_proba(std::span<const float> x) const {
  require(x.size() == fingerprint_.size(), ErrorCode::fingerprint_mismatch,
          "feature vector length " + std::to_string(x.size()) + " does not match model (" +
              std::to_string(fingerprint_.size()) + ")");
  Probabilities sum{};
  for (const auto& t : trees_) {
    const auto p = t.leaf_distribution(x);
    for (std::size_t c = 0; c < kClassCount; ++c) sum[c] += p[c];
  }
  const double n = static_cast<double>(trees_.size());
  for (auto& v : sum) v /= n;
  return sum;
}

void ForestModel::predict_rows(std::span<const float> rows, std::size_t stride, std::span<double> out,
                               int threads) const {
  require(stride == fingerprint_.size(), ErrorCode::fingerprint_mismatch, "row width does not match model");
  const std::size_t n = rows.size() / stride;
  require(out.size() == n * kClassCount, ErrorCode::invalid_argument, "output buffer size mismatch");
  // Tree-major within blocks keeps one tree hot in cache; per-row sums still
  // accumulate in tree order, so results match predict_proba exactly.
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t lo = b * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(lo * kClassCount),
              out.begin() + static_cast<std::ptrdiff_t>(hi * kClassCount), 0.0);
    for (const auto& t : trees_) {
      for (std::size_t r = lo; r < hi; ++r) {
        const auto p = t.leaf_distribution(rows.subspan(r * stride, stride));
        for (std::size_t c = 0; c < kClassCount; ++c) out[r * kClassCount + c] += p[c];
      }
    }
    const double nt = static_cast<double>(trees_.size());
    for (std::size_t i = lo * kClassCount; i < hi * kClassCount; ++i) out[i] /= nt;
  });
}

bool operator==(const ForestModel& a, const ForestModel& b) { return serialize(a) == serialize(b); }

ForestModel train(const TrainingSet& data, const ForestParams& params) {
  require(params.n_trees >= 1, ErrorCode::invalid_argument, "n_trees must be >= 1");
  require(data.width >= 1 && data.values.size() == data.size() * data.width, ErrorCode::invalid_argument,
          "training rows are malformed");
  require(params.features_per_split >= 1 && static_cast<std::size_t>(params.features_per_split) <= data.width,
          ErrorCode::invalid_argument, "features_per_split must lie in [1, feature count]");
  require(data.width <= 65535, ErrorCode::invalid_argument, "too many features");
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < kClassCount; ++c)
    require(counts[c] > 0, ErrorCode::training,
            "training data has no samples of class '" + std::string(kClassNames[c]) + "'");

  std::vector<Tree> trees(static_cast<std::size_t>(params.n_trees));
  parallel_for(trees.size(), params.threads, [&](std::size_t t) {
    TreeBuilder builder(data, params.features_per_split, splitmix64(params.seed ^ splitmix64(t)));
    trees[t] = builder.build();
  });
  return ForestModel(std::move(trees), params.features_per_split, data.fingerprint);
}

PixelClass argmax(const Probabilities& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kClassCount; ++c)
    if (p[c] > p[best]) best = c;
  return static_cast<PixelClass>(best);
}

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require(scores.size() == positive.size(), ErrorCode::invalid_argument, "roc_auc: size mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += avg_rank;
        ++npos;
      }
    i = j;
  }
  const std::size_t nneg = scores.size() - npos;
  require(npos > 0 && nneg > 0, ErrorCode::invalid_argument, "roc_auc: needs both positives and negatives");
  const double np = static_cast<double>(npos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(nneg));
}

CvReport cross_validate(const TrainingSet& data, int folds, const ForestParams& params) {
  require(folds >= 2, ErrorCode::invalid_argument, "cross validation needs at least 2 folds");
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < kClassCount; ++c)
    require(counts[c] >= static_cast<std::size_t>(folds), ErrorCode::training,
            "class '" + std::string(kClassNames[c]) + "' has fewer samples than folds");

  // Stratified assignment: shuffle each class, deal round-robin into folds.
  std::mt19937_64 rng(splitmix64(params.seed ^ 0xC5ULL));
  std::vector<int> fold_of(data.size());
  for (std::size_t c = 0; c < kClassCount; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (static_cast<std::size_t>(data.labels[i]) == c) members.push_back(i);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[below(rng, i)]);
    for (std::size_t i = 0; i < members.size(); ++i)
      fold_of[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }

  std::vector<double> proba(data.size() * kClassCount);
  for (int f = 0; f < folds; ++f) {
    TrainingSet train_set;
    train_set.fingerprint = data.fingerprint;
    train_set.width = data.width;
    std::vector<std::size_t> held_out;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (fold_of[i] == f)
        held_out.push_back(i);
      else
        train_set.append(data.row(i), data.labels[i]);
    }
    ForestParams p = params;
    p.seed = splitmix64(params.seed + static_cast<std::uint64_t>(f) + 1);
    const ForestModel model = train(train_set, p);
    for (auto i : held_out) {
      const auto pr = model.predict_proba(data.row(i));
      std::copy(pr.begin(), pr.end(), proba.begin() + static_cast<std::ptrdiff_t>(i * kClassCount));
    }
  }

  CvReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Probabilities p{proba[i * 3], proba[i * 3 + 1], proba[i * 3 + 2]};
    const auto predicted = static_cast<std::size_t>(argmax(p));
    const auto truth = static_cast<std::size_t>(data.labels[i]);
    ++report.confusion[truth][predicted];
    if (predicted == truth) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  std::vector<double> scores(data.size());
  std::vector<std::uint8_t> positive(data.size());
  double auc_sum = 0.0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      scores[i] = proba[i * kClassCount + c];
      positive[i] = static_cast<std::size_t>(data.labels[i]) == c ? 1 : 0;
    }
    report.class_auc[c] = roc_auc(scores, positive);
    auc_sum += report.class_auc[c];
  }
  report.auc = auc_sum / static_cast<double>(kClassCount);
  return report;
}

// ---------------------------------------------------------------------------
// Model file: little-endian.
//   "FZSG" | u16 version | u32 tree count | u16 features_per_split
//   | u32 name count | { u16 length | bytes }*
//   | per tree: u32 node count | nodes in preorder
//   node: u8 kind (0 = split, 1 = leaf)
//     split: u16 feature | f64 threshold | u32 left | u32 right
//     leaf : u64 lesion | u64 skin | u64 other

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
  }
  void put_f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put(bits);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename T>
  T get() {
    static_assert(std::is_integral_v<T>);
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() {
    const auto bits = get<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::incompatible_model, "model file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const ForestModel& model) {
  Writer w;
  for (char c : {'F', 'Z', 'S', 'G'}) w.put(static_cast<std::uint8_t>(c));
  w.put(kFormatVersion);
  w.put(static_cast<std::uint32_t>(model.trees().size()));
  w.put(static_cast<std::uint16_t>(model.features_per_split()));
  w.put(static_cast<std::uint32_t>(model.fingerprint().size()));
  for (const auto& name : model.fingerprint()) {
    w.put(static_cast<std::uint16_t>(name.size()));
    w.bytes.insert(w.bytes.end(), name.begin(), name.end());
  }
  for (const auto& t : model.trees()) {
    w.put(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      if (n.leaf) {
        w.put(std::uint8_t{1});
        for (auto c : n.counts) w.put(c);
      } else {
        w.put(std::uint8_t{0});
        w.put(n.feature);
        w.put_f64(n.threshold);
        w.put(n.left);
        w.put(n.right);
      }
    }
  }
  return std::move(w.bytes);
}

ForestModel deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.get_string(4) != "FZSG") fail(ErrorCode::incompatible_model, "not a model file (bad magic)");
  const auto version = r.get<std::uint16_t>();
  if (version != kFormatVersion)
    fail(ErrorCode::incompatible_model, "unsupported model format version " + std::to_string(version));
  const auto n_trees = r.get<std::uint32_t>();
  const auto fps = r.get<std::uint16_t>();
  const auto n_names = r.get<std::uint32_t>();
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < n_names; ++i) names.push_back(r.get_string(r.get<std::uint16_t>()));
  if (n_trees == 0) fail(ErrorCode::incompatible_model, "model has no trees");
  std::vector<Tree> trees(n_trees);
  for (auto& t : trees) {
    const auto n_nodes = r.get<std::uint32_t>();
    if (n_nodes == 0) fail(ErrorCode::incompatible_model, "empty tree");
    t.nodes.resize(n_nodes);
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
      auto& n = t.nodes[i];
      const auto kind = r.get<std::uint8_t>();
      if (kind == 1) {
        n.leaf = true;
        for (auto& c : n.counts) c = r.get<std::uint64_t>();
        if (n.counts[0] + n.counts[1] + n.counts[2] == 0) fail(ErrorCode::incompatible_model, "empty leaf");
      } else if (kind == 0) {
        n.feature = r.get<std::uint16_t>();
        n.threshold = r.get_f64();
        n.left = r.get<std::uint32_t>();
        n.right = r.get<std::uint32_t>();
        if (n.feature >= n_names || n.left != i + 1 || n.right <= n.left || n.right >= n_nodes)
          fail(ErrorCode::incompatible_model, "corrupt tree node");
      } else {
        fail(ErrorCode::incompatible_model, "corrupt node tag");
      }
    }
  }
  if (!r.at_end()) fail(ErrorCode::incompatible_model, "trailing bytes after model");
  return ForestModel(std::move(trees), fps, std::move(names));
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io, "cannot write model to " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::io, "failed writing model to " + path.string());
}

ForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open model " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace fzsg::forest
