#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "hotmv/data.hpp"
#include "hotmv/error.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

namespace hotmv {
namespace {

using testing::ScratchDir;

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

void write_manifest(const std::filesystem::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(); }

MultiViewDataset small_labeled(Index n, int classes, std::uint64_t seed) {
  SynthSpec spec;
  spec.samples = n;
  spec.classes = classes;
  spec.default_view_dim = 3;
  spec.seed = seed;
  return generate_synthetic(spec);
}

double lstsq_relative_residual(const Matrix& from, const Matrix& to) {
  const Matrix coef = from.colPivHouseholderQr().solve(to);
  return (from * coef - to).norm() / to.norm();
}

TEST(Manifest, TwoViewsThreeSamples) {
  ScratchDir dir("manifest");
  write_text(dir / "a.csv", "1,2\n3,4\n5,6\n");
  write_text(dir / "b.csv", "1\n2\n4\n");
  write_text(dir / "y.csv", "0\n1\n0\n");
  write_manifest(dir / "m.json", {{"name", "tiny"},
                                  {"views", {{{"name", "A"}, {"file", "a.csv"}, {"dim", 2}},
                                             {{"name", "B"}, {"file", "b.csv"}, {"dim", 1}}}},
                                  {"labels_file", "y.csv"}});
  const auto ds = load_manifest(dir / "m.json");
  EXPECT_EQ(ds.num_samples(), 3);
  EXPECT_EQ(ds.num_views(), 2u);
  EXPECT_EQ(ds.view_names, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(ds.num_classes, 2);
  EXPECT_EQ(*ds.labels, (std::vector<int>{0, 1, 0}));
  // Standardized: zero mean, unit (population) variance per feature.
  EXPECT_NEAR(ds.views[0].col(0).mean(), 0.0, 1e-15);
  EXPECT_NEAR(ds.views[0].col(0).squaredNorm() / 3.0, 1.0, 1e-12);
  EXPECT_EQ(load_manifest(dir / "m.json", false).views[0](2, 1), 6.0);
}

TEST(Manifest, RowCountMismatchNamesBothFiles) {
  ScratchDir dir("mismatch");
  write_text(dir / "first.csv", "1\n2\n3\n");
  write_text(dir / "second.csv", "1\n2\n");
  write_manifest(dir / "m.json", {{"views", {{{"file", "first.csv"}}, {{"file", "second.csv"}}}}});
  try {
    load_manifest(dir / "m.json");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("first.csv"), std::string::npos) << msg;
    EXPECT_NE(msg.find("second.csv"), std::string::npos) << msg;
  }
}

TEST(Manifest, RaggedAndNonNumericRowsNameFileAndLine) {
  ScratchDir dir("ragged");
  write_text(dir / "r.csv", "1,2\n3\n");
  write_text(dir / "n.csv", "1,2\n3,x\n");
  for (const char* file : {"r.csv", "n.csv"}) {
    try {
      read_csv_matrix(dir / file);
      FAIL() << "expected DataError for " << file;
    } catch (const DataError& e) {
      EXPECT_NE(std::string(e.what()).find(std::string(file) + ":2"), std::string::npos) << e.what();
    }
  }
}

TEST(Manifest, DeclaredDimMustMatch) {
  ScratchDir dir("dim");
  write_text(dir / "a.csv", "1,2\n");
  write_manifest(dir / "m.json", {{"views", {{{"file", "a.csv"}, {"dim", 3}}}}});
  EXPECT_THROW(load_manifest(dir / "m.json"), DataError);
}

// Handwritten digits: N = 2000, views Pixel/240, Fourier/76, FAC/216,
// ZER/47, KAR/64, MOR/6.
TEST(Manifest, HandwrittenShapes) {
  ScratchDir dir("handwritten");
  const std::vector<std::pair<std::string, Index>> views{{"Pixel", 240}, {"Fourier", 76}, {"FAC", 216},
                                                         {"ZER", 47},    {"KAR", 64},     {"MOR", 6}};
  std::mt19937_64 rng(1);
  nlohmann::json j;
  j["name"] = "handwritten";
  for (const auto& [name, dim] : views) {
    write_csv_matrix(dir / (name + ".csv"), testing::random_matrix(2000, dim, rng));
    j["views"].push_back({{"name", name}, {"file", name + ".csv"}, {"dim", dim}});
  }
  Matrix labels(2000, 1);
  for (Index i = 0; i < 2000; ++i) labels(i, 0) = static_cast<double>(i % 10);
  write_csv_matrix(dir / "labels.csv", labels);
  j["labels_file"] = "labels.csv";
  write_manifest(dir / "m.json", j);

  const auto ds = load_manifest(dir / "m.json");
  ASSERT_EQ(ds.num_views(), 6u);
  EXPECT_EQ(ds.num_samples(), 2000);
  EXPECT_EQ(ds.num_classes, 10);
  for (size_t s = 0; s < views.size(); ++s) EXPECT_EQ(ds.view_dim(s), views[s].second);
}

TEST(Manifest, WriteThenLoadKeepsMetadata) {
  ScratchDir dir("roundtrip");
  const auto ds = small_labeled(30, 3, 4);
  write_dataset(ds, dir.path());
  const auto back = load_manifest(dir / "manifest.json", false);
  EXPECT_EQ(back.name, ds.name);
  EXPECT_EQ(back.view_names, ds.view_names);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.planted_partition, ds.planted_partition);
  EXPECT_EQ(back.provenance, ds.provenance);
  for (size_t s = 0; s < ds.num_views(); ++s) EXPECT_EQ(back.views[s], ds.views[s]);
}

TEST(Split, SizesForOneHundred) {
  const auto split = split_and_unalign(small_labeled(100, 4, 2), {});
  EXPECT_EQ(split.labeled.num_samples() + split.unlabeled.num_samples(), 60);
  EXPECT_EQ(split.valid.num_samples(), 20);
  EXPECT_EQ(split.test.num_samples(), 20);
  EXPECT_EQ(split.labeled.num_samples(), 3);
  EXPECT_FALSE(split.unlabeled.aligned);
  EXPECT_FALSE(split.unlabeled.labels.has_value());
  EXPECT_TRUE(split.labeled.aligned);
}

TEST(Split, FullLabeledFractionLeavesNoUnlabeledPool) {
  SplitSpec spec;
  spec.labeled_fraction = 1.0;
  const auto split = split_and_unalign(small_labeled(100, 4, 3), spec);
  EXPECT_EQ(split.unlabeled.num_samples(), 0);
  EXPECT_EQ(split.labeled.num_samples(), 60);
}

TEST(Split, IsAPartitionOfTheRows) {
  const auto ds = small_labeled(97, 5, 5);
  const auto split = split_and_unalign(ds, {});
  std::vector<Index> all = split.labeled_rows;
  all.insert(all.end(), split.unlabeled_rows[0].begin(), split.unlabeled_rows[0].end());
  all.insert(all.end(), split.valid_rows.begin(), split.valid_rows.end());
  all.insert(all.end(), split.test_rows.begin(), split.test_rows.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), 97u);
  for (Index i = 0; i < 97; ++i) EXPECT_EQ(all[static_cast<size_t>(i)], i);
  // Every view's pool covers the same rows.
  for (const auto& rows : split.unlabeled_rows) {
    EXPECT_EQ(std::set<Index>(rows.begin(), rows.end()),
              std::set<Index>(split.unlabeled_rows[0].begin(), split.unlabeled_rows[0].end()));
  }
}

TEST(Split, Stratified) {
  const auto ds = small_labeled(503, 7, 6);
  const auto split = split_and_unalign(ds, {});
  std::map<int, double> total;
  for (int y : *ds.labels) total[y] += 1;
  auto count = [&](const std::vector<Index>& rows) {
    std::map<int, double> c;
    for (Index r : rows) c[(*ds.labels)[static_cast<size_t>(r)]] += 1;
    return c;
  };
  std::vector<Index> train = split.labeled_rows;
  train.insert(train.end(), split.unlabeled_rows[0].begin(), split.unlabeled_rows[0].end());
  const auto tr = count(train);
  const auto va = count(split.valid_rows);
  const auto te = count(split.test_rows);
  for (const auto& [y, n] : total) {
    EXPECT_NEAR(tr.count(y) ? tr.at(y) : 0.0, 0.6 * n, 2.0) << "class " << y;
    EXPECT_NEAR(va.count(y) ? va.at(y) : 0.0, 0.2 * n, 2.0) << "class " << y;
    EXPECT_NEAR(te.count(y) ? te.at(y) : 0.0, 0.2 * n, 2.0) << "class " << y;
  }
}

TEST(Split, UnalignedPoolOnlyPermutesRows) {
  const auto ds = small_labeled(120, 3, 7);
  const auto split = split_and_unalign(ds, {});
  for (size_t s = 0; s < ds.num_views(); ++s) {
    const auto& rows = split.unlabeled_rows[s];
    for (size_t i = 0; i < rows.size(); ++i) {
      EXPECT_EQ(split.unlabeled.views[s].row(static_cast<Index>(i)), ds.views[s].row(rows[i]));
    }
  }
}

TEST(Split, CoIndexedRowsAreRare) {
  double matches = 0.0;
  double pool = 0.0;
  const auto ds = small_labeled(300, 3, 8);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SplitSpec spec;
    spec.seed = seed;
    const auto split = split_and_unalign(ds, spec);
    const auto& a = split.unlabeled_rows[0];
    const auto& b = split.unlabeled_rows[1];
    pool = static_cast<double>(a.size());
    for (size_t i = 0; i < a.size(); ++i) matches += a[i] == b[i] ? 1.0 : 0.0;
  }
  // A random permutation pair has one expected fixed point, i.e. a fraction
  // of 1 / N_pool.
  const double fraction = matches / (100.0 * pool);
  EXPECT_NEAR(fraction * pool, 1.0, 0.4);
}

TEST(Split, KeepAlignedOnRequest) {
  SplitSpec spec;
  spec.unalign = false;
  const auto split = split_and_unalign(small_labeled(100, 4, 9), spec);
  EXPECT_TRUE(split.unlabeled.aligned);
  EXPECT_EQ(split.unlabeled_rows[0], split.unlabeled_rows[1]);
}

TEST(Split, TinyClassIsRejected) {
  auto ds = small_labeled(30, 3, 10);
  (*ds.labels)[0] = 3;
  ds.num_classes = 4;
  EXPECT_THROW(split_and_unalign(ds, {}), DataError);
}

TEST(Synthetic, NoiselessSameClusterViewsAreLinearlyRelated) {
  SynthSpec spec;
  spec.noise = 0.0;
  spec.samples = 300;
  const auto ds = generate_synthetic(spec);
  ASSERT_EQ(spec.assignment[0], spec.assignment[1]);
  EXPECT_LT(lstsq_relative_residual(ds.views[0], ds.views[1]), 1e-10);
}

TEST(Synthetic, DifferentClustersAreNotLinearlyRelated) {
  SynthSpec spec;
  spec.samples = 300;
  const auto ds = generate_synthetic(spec);
  ASSERT_NE(spec.assignment[0], spec.assignment[2]);
  EXPECT_GT(lstsq_relative_residual(ds.views[0], ds.views[2]), 0.1);
}

TEST(Synthetic, AllClassesPresent) {
  SynthSpec spec;
  spec.classes = 4;
  const auto ds = generate_synthetic(spec);
  EXPECT_EQ(std::set<int>(ds.labels->begin(), ds.labels->end()), (std::set<int>{0, 1, 2, 3}));
}

TEST(Synthetic, DefaultsAndMetadata) {
  const auto ds = generate_synthetic({});
  EXPECT_EQ(ds.num_views(), 6u);
  EXPECT_EQ(ds.num_samples(), 2000);
  EXPECT_EQ(*ds.planted_partition, (std::vector<int>{0, 0, 1, 1, 2, 2}));
  EXPECT_NE(ds.provenance.find("seed=0"), std::string::npos);
}

TEST(Synthetic, Deterministic) {
  SynthSpec spec;
  spec.seed = 42;
  spec.samples = 50;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  for (size_t s = 0; s < a.num_views(); ++s) EXPECT_EQ(a.views[s], b.views[s]);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Synthetic, RejectsBadSpecs) {
  SynthSpec spec;
  spec.assignment = {0, 2};
  EXPECT_THROW(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.noise = -1.0;
  EXPECT_THROW(generate_synthetic(spec), UsageError);
  spec = SynthSpec{};
  spec.moduli = {2, 3};
  EXPECT_THROW(generate_synthetic(spec), UsageError);
}

TEST(Views, DropViewKeepsTheRest) {
  const auto ds = small_labeled(20, 2, 11);
  const auto dropped = drop_view(ds, 2);
  EXPECT_EQ(dropped.num_views(), ds.num_views() - 1);
  EXPECT_EQ(dropped.views[2], ds.views[3]);
  EXPECT_EQ(dropped.view_names[2], "view3");
  EXPECT_EQ(dropped.planted_partition->size(), ds.num_views() - 1);
  EXPECT_THROW(drop_view(ds, 6), UsageError);
}

}  // namespace
}  // namespace hotmv
