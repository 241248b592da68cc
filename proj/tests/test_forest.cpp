#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "fzsg/error.hpp"
#include "fzsg/forest.hpp"

using namespace fzsg;
using namespace fzsg::forest;

namespace {

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back("f" + std::to_string(i));
  return v;
}

// Three Gaussian blobs in `dims` dimensions, centres far apart on the first two axes.
TrainingSet blobs(std::size_t per_class, std::size_t dims, std::uint64_t seed, double spread = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, spread);
  TrainingSet t;
  t.fingerprint = names(dims);
  t.width = dims;
  const double centres[3][2] = {{0, 0}, {5, 0}, {0, 5}};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<float> row(dims);
      for (std::size_t d = 0; d < dims; ++d) row[d] = static_cast<float>((d < 2 ? centres[c][d] : 0.0) + n(rng));
      t.append(row, static_cast<PixelClass>(c));
    }
  return t;
}

double accuracy(const ForestModel& m, const TrainingSet& t) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < t.size(); ++i) ok += argmax(m.predict_proba(t.row(i))) == t.labels[i];
  return static_cast<double>(ok) / static_cast<double>(t.size());
}

Tree leaf_tree(ClassCounts c) {
  Tree t;
  Tree::Node n;
  n.leaf = true;
  n.counts = c;
  t.nodes.push_back(n);
  return t;
}

double auc_oracle(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!pos[i] || pos[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  return wins / pairs;
}

template <typename T>
void put(std::vector<std::uint8_t>& b, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) b.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& b, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put(b, bits);
}

}  // namespace

TEST(Train, SeparableBlobsFitPerfectly) {
  const auto data = blobs(100, 4, 1);
  ForestParams p;
  p.n_trees = 10;
  p.features_per_split = 2;
  const auto m = train(data, p);
  EXPECT_EQ(m.trees().size(), 10u);
  EXPECT_DOUBLE_EQ(accuracy(m, data), 1.0);
}

TEST(Train, SingleTreeSingleFeatureIsAStump) {
  TrainingSet t;
  t.fingerprint = {"x"};
  t.width = 1;
  for (int i = 0; i < 30; ++i) t.append(std::vector<float>{static_cast<float>(i % 3)}, static_cast<PixelClass>(i % 3));
  ForestParams p;
  p.n_trees = 1;
  p.features_per_split = 1;
  const auto m = train(t, p);
  // Bootstrap of 30 draws from 3 groups of 10; all classes present for seed 1.
  for (int v = 0; v < 3; ++v) {
    const auto pr = m.predict_proba(std::vector<float>{static_cast<float>(v)});
    EXPECT_DOUBLE_EQ(pr[static_cast<std::size_t>(v)], 1.0);
  }
  // Thresholds sit at midpoints between observed values.
  for (const auto& n : m.trees()[0].nodes)
    if (!n.leaf) EXPECT_TRUE(n.threshold == 0.5 || n.threshold == 1.5);
}

TEST(Train, DeterministicForSeedAndThreadCount) {
  const auto data = blobs(60, 6, 2, 1.5);
  ForestParams p;
  p.n_trees = 12;
  p.features_per_split = 3;
  p.seed = 77;
  const auto a = serialize(train(data, p));
  const auto b = serialize(train(data, p));
  EXPECT_EQ(a, b);
  p.threads = 3;
  EXPECT_EQ(serialize(train(data, p)), a);
  p.seed = 78;
  p.threads = 1;
  EXPECT_NE(serialize(train(data, p)), a);
}

TEST(Train, Errors) {
  auto data = blobs(10, 3, 3);
  ForestParams p;
  p.features_per_split = 4;
  EXPECT_THROW(train(data, p), Error);
  p.features_per_split = 0;
  EXPECT_THROW(train(data, p), Error);
  p.features_per_split = 2;
  p.n_trees = 0;
  EXPECT_THROW(train(data, p), Error);
  p.n_trees = 2;
  TrainingSet two;
  two.fingerprint = data.fingerprint;
  two.width = 3;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.labels[i] != PixelClass::other) two.append(data.row(i), data.labels[i]);
  try {
    train(two, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::training);
  }
}

TEST(Train, LeavesNonEmptyAndFeaturesInRange) {
  const auto data = blobs(50, 5, 4, 2.0);
  ForestParams p;
  p.n_trees = 5;
  p.features_per_split = 2;
  const auto m = train(data, p);
  for (const auto& t : m.trees())
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      if (n.leaf) {
        EXPECT_GT(n.counts[0] + n.counts[1] + n.counts[2], 0u);
      } else {
        EXPECT_LT(n.feature, 5);
        EXPECT_EQ(n.left, i + 1);  // preorder
        EXPECT_GT(n.right, n.left);
      }
    }
}

TEST(Predict, UnanimousAndAveraging) {
  const ForestModel one({leaf_tree({4, 0, 0}), leaf_tree({9, 0, 0})}, 1, {"x"});
  EXPECT_EQ(one.predict_proba(std::vector<float>{0.f}), (Probabilities{1, 0, 0}));
  const ForestModel two({leaf_tree({1, 0, 0}), leaf_tree({0, 1, 0})}, 1, {"x"});
  EXPECT_EQ(two.predict_proba(std::vector<float>{0.f}), (Probabilities{0.5, 0.5, 0}));
}

TEST(Predict, ConvexCombination) {
  const auto data = blobs(80, 4, 5, 2.5);
  ForestParams p;
  p.n_trees = 25;
  p.features_per_split = 2;
  const auto m = train(data, p);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(-5, 10);
  for (int k = 0; k < 1000; ++k) {
    std::vector<float> x(4);
    for (auto& v : x) v = u(rng);
    const auto pr = m.predict_proba(x);
    for (double v : pr) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_NEAR(pr[0] + pr[1] + pr[2], 1.0, 1e-9);
  }
}

TEST(Predict, LengthMismatch) {
  const ForestModel m({leaf_tree({1, 0, 0})}, 1, {"a", "b"});
  try {
    m.predict_proba(std::vector<float>{1.f});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::fingerprint_mismatch);
  }
}

TEST(Predict, RowsMatchSingleAndAreThreadIndependent) {
  const auto data = blobs(40, 3, 6, 2.0);
  ForestParams p;
  p.n_trees = 7;
  p.features_per_split = 2;
  const auto m = train(data, p);
  std::vector<double> a(data.size() * 3);
  std::vector<double> b(data.size() * 3);
  m.predict_rows(data.values, 3, a, 1);
  m.predict_rows(data.values, 3, b, 3);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pr = m.predict_proba(data.row(i));
    for (std::size_t c = 0; c < 3; ++c) ASSERT_EQ(a[i * 3 + c], pr[c]);
  }
}

TEST(Predict, MoreTreesDoNotHurtOnSeparableData) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto train_set = blobs(60, 4, seed, 1.2);
    const auto test_set = blobs(200, 4, seed + 100, 1.2);
    ForestParams p;
    p.features_per_split = 2;
    p.seed = seed;
    p.n_trees = 1;
    const double one = accuracy(train(train_set, p), test_set);
    p.n_trees = 100;
    const double many = accuracy(train(train_set, p), test_set);
    EXPECT_GE(many, one - 0.02) << "seed " << seed;
  }
}

TEST(Auc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> coarse(0, 9);  // many ties
  for (int k = 0; k < 20; ++k) {
    std::vector<double> s(60);
    std::vector<std::uint8_t> pos(60);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = coarse(rng) / 10.0;
      pos[i] = static_cast<std::uint8_t>(i % 3 == 0);
    }
    EXPECT_NEAR(roc_auc(s, pos), auc_oracle(s, pos), 1e-12);
  }
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<std::uint8_t>{1, 0}), 1.0);
  EXPECT_THROW(roc_auc(std::vector<double>{0.9}, std::vector<std::uint8_t>{1}), Error);
}

TEST(CrossValidate, SeparableData) {
  const auto data = blobs(60, 4, 11);
  ForestParams p;
  p.n_trees = 10;
  p.features_per_split = 2;
  const auto r = cross_validate(data, 10, p);
  EXPECT_GE(r.accuracy, 0.99);
  EXPECT_GE(r.auc, 0.99);
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t row = 0;
    for (std::size_t d = 0; d < 3; ++d) row += r.confusion[c][d];
    EXPECT_EQ(row, 60u);
  }
}

TEST(CrossValidate, ShuffledLabelsAreAtChance) {
  auto data = blobs(400, 4, 12);
  std::mt19937_64 rng(13);
  std::shuffle(data.labels.begin(), data.labels.end(), rng);
  const auto counts = data.class_counts();
  const double max_prior =
      static_cast<double>(*std::max_element(counts.begin(), counts.end())) / static_cast<double>(data.size());
  ForestParams p;
  p.n_trees = 30;
  p.features_per_split = 2;
  const auto r = cross_validate(data, 10, p);
  EXPECT_NEAR(r.accuracy, max_prior, 0.05);
  EXPECT_LT(r.auc, 0.6);
}

TEST(CrossValidate, Errors) {
  auto data = blobs(5, 3, 14);
  ForestParams p;
  p.features_per_split = 2;
  EXPECT_THROW(cross_validate(data, 10, p), Error);
  EXPECT_THROW(cross_validate(data, 1, p), Error);
}

TEST(Format, HandEncodedBytes) {
  Tree t;
  Tree::Node split;
  split.feature = 1;
  split.threshold = 0.5;
  split.left = 1;
  split.right = 2;
  Tree::Node a;
  a.leaf = true;
  a.counts = {3, 0, 0};
  Tree::Node b;
  b.leaf = true;
  b.counts = {0, 2, 1};
  t.nodes = {split, a, b};
  const ForestModel m({t}, 1, {"ab", "c"});

  std::vector<std::uint8_t> expect{'F', 'Z', 'S', 'G'};
  put<std::uint16_t>(expect, 1);  // version
  put<std::uint32_t>(expect, 1);  // trees
  put<std::uint16_t>(expect, 1);  // features per split
  put<std::uint32_t>(expect, 2);  // fingerprint names
  put<std::uint16_t>(expect, 2);
  expect.insert(expect.end(), {'a', 'b'});
  put<std::uint16_t>(expect, 1);
  expect.push_back('c');
  put<std::uint32_t>(expect, 3);  // nodes
  expect.push_back(0);
  put<std::uint16_t>(expect, 1);
  put_f64(expect, 0.5);
  put<std::uint32_t>(expect, 1);
  put<std::uint32_t>(expect, 2);
  for (const auto& leaf : {a, b}) {
    expect.push_back(1);
    for (auto c : leaf.counts) put<std::uint64_t>(expect, c);
  }
  EXPECT_EQ(serialize(m), expect);
  EXPECT_EQ(deserialize(expect), m);
  EXPECT_EQ(m.predict_proba(std::vector<float>{9.f, 0.2f}), (Probabilities{1, 0, 0}));
  EXPECT_EQ(m.predict_proba(std::vector<float>{9.f, 0.7f})[1], 2.0 / 3.0);
}

TEST(Format, RoundTripThroughFile) {
  const auto data = blobs(50, 5, 15, 2.0);
  ForestParams p;
  p.n_trees = 8;
  p.features_per_split = 2;
  const auto m = train(data, p);
  const auto path = std::filesystem::temp_directory_path() / "fzsg_forest_roundtrip.fzsg";
  save_model(m, path);
  const auto back = load_model(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back, m);
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<float> u(-5, 10);
  for (int k = 0; k < 1000; ++k) {
    std::vector<float> x(5);
    for (auto& v : x) v = u(rng);
    ASSERT_EQ(back.predict_proba(x), m.predict_proba(x));
  }
}

TEST(Format, CorruptInputsAreIncompatible) {
  const auto data = blobs(20, 3, 17);
  ForestParams p;
  p.n_trees = 3;
  p.features_per_split = 2;
  const auto bytes = serialize(train(data, p));
  auto expect_incompatible = [](std::span<const std::uint8_t> b) {
    try {
      deserialize(b);
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::incompatible_model;
    }
  };
  for (std::size_t n = 0; n < bytes.size(); ++n)
    ASSERT_TRUE(expect_incompatible(std::span(bytes.data(), n))) << "truncated at " << n;
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_TRUE(expect_incompatible(bad));
  bad = bytes;
  bad[4] = 2;  // version
  EXPECT_TRUE(expect_incompatible(bad));
  bad = bytes;
  bad.push_back(0);
  EXPECT_TRUE(expect_incompatible(bad));
  try {
    load_model("/nonexistent/dir/model.fzsg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
}
