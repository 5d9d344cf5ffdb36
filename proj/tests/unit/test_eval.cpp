#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "hotmv/error.hpp"
#include "hotmv/eval.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

namespace hotmv {
namespace {

TransportPlan plan_of(const Matrix& w) {
  TransportPlan p;
  p.weights = w;
  p.row_marginal = w.rowwise().sum();
  p.col_marginal = w.colwise().sum().transpose();
  p.beta = 0.1;
  p.iterations = 20;
  return p;
}

TEST(Accuracy, HandCounts) {
  const std::vector<int> a{1, 0, 1, 1};
  const std::vector<int> b{1, 1, 1, 0};
  const std::vector<int> c{0, 1, 0, 0};
  EXPECT_EQ(accuracy(a, a), 1.0);
  EXPECT_EQ(accuracy(a, c), 0.0);
  EXPECT_EQ(accuracy(a, b), 0.5);
}

TEST(Accuracy, RejectsEmptyAndMismatched) {
  const std::vector<int> none;
  const std::vector<int> one{1};
  const std::vector<int> two{1, 2};
  EXPECT_THROW(accuracy(none, none), UsageError);
  EXPECT_THROW(accuracy(one, two), UsageError);
}

TEST(Ari, MatchesPairEnumeration) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 12;
    std::uniform_int_distribution<int> ka(0, 1 + trial % 4);
    std::uniform_int_distribution<int> kb(0, 1 + trial % 3);
    std::vector<int> a;
    std::vector<int> b;
    for (int i = 0; i < n; ++i) {
      a.push_back(ka(rng));
      b.push_back(kb(rng));
    }
    const double oracle = testing::ari_by_pairs(a, b);
    EXPECT_NEAR(adjusted_rand_index(a, b), oracle, 1e-12) << "trial " << trial;
  }
}

TEST(Ari, SixViewsOneMisassigned) {
  const std::vector<int> planted{0, 0, 1, 1, 2, 2};
  const std::vector<int> found{0, 0, 1, 2, 2, 2};
  EXPECT_NEAR(adjusted_rand_index(found, planted), testing::ari_by_pairs(found, planted), 1e-12);
  EXPECT_LT(adjusted_rand_index(found, planted), 1.0);
}

TEST(Ari, InvariantToRelabeling) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> k(0, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> a(15);
    std::vector<int> b(15);
    for (auto& v : a) v = k(rng);
    for (auto& v : b) v = k(rng);
    std::vector<int> relabel{2, 0, 3, 1};
    std::vector<int> a2;
    std::vector<int> b2;
    for (int v : a) a2.push_back(relabel[static_cast<size_t>(v)] + 10);
    for (int v : b) b2.push_back(3 - v);
    EXPECT_NEAR(adjusted_rand_index(a, b), adjusted_rand_index(a2, b), 1e-12);
    EXPECT_NEAR(adjusted_rand_index(a, b), adjusted_rand_index(a, b2), 1e-12);
    EXPECT_NEAR(adjusted_rand_index(a, b), adjusted_rand_index(b, a), 1e-12);
  }
}

TEST(Ari, IdenticalPartitionsScoreOne) {
  const std::vector<int> a{0, 0, 1, 1, 2, 2};
  const std::vector<int> b{5, 5, 3, 3, 4, 4};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), 1.0);
  const std::vector<int> one{0, 0, 0};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(one, one), 1.0);
}

TEST(ClusterRecovery, BlockUniformPlanIsPerfect) {
  Matrix w = Matrix::Zero(6, 3);
  const std::vector<int> planted{0, 0, 1, 1, 2, 2};
  for (Index s = 0; s < 6; ++s) w(s, planted[static_cast<size_t>(s)]) = 1.0 / 6.0;
  EXPECT_DOUBLE_EQ(cluster_recovery(plan_of(w), planted), 1.0);
  // Cluster ids in the plan need not match the planted ids.
  const std::vector<int> renamed{2, 2, 0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(cluster_recovery(plan_of(w), renamed), 1.0);
}

TEST(ClusterRecovery, UniformPlanCollapsesToOneGroup) {
  const auto plan = plan_of(Matrix::Constant(6, 3, 1.0 / 18.0));
  EXPECT_EQ(assign_views(plan), (std::vector<int>(6, 0)));
  const std::vector<int> planted{0, 0, 1, 1, 2, 2};
  EXPECT_LE(cluster_recovery(plan, planted), 0.0);
}

TEST(ClusterRecovery, RowCountMismatch) {
  const std::vector<int> planted{0, 1, 2};
  EXPECT_THROW(cluster_recovery(plan_of(Matrix::Constant(2, 2, 0.25)), planted), UsageError);
}

TEST(Heatmap, UniformTwoByTwo) {
  testing::ScratchDir dir("heatmap");
  export_plan_heatmap(plan_of(Matrix::Constant(2, 2, 0.25)), {"left", "right"}, dir / "plan.csv");
  std::ifstream in(dir / "plan.csv");
  std::string header;
  std::string row0;
  std::string row1;
  std::getline(in, header);
  std::getline(in, row0);
  std::getline(in, row1);
  EXPECT_EQ(header, "view,left,right");
  EXPECT_EQ(row0, "left,0.25,0.25");
  EXPECT_EQ(row1, "right,0.25,0.25");
}

TEST(Heatmap, RoundTripAndSidecar) {
  testing::ScratchDir dir("heatmap_rt");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(4, 3);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng) / 7.0;
  const std::vector<std::string> names{"Pixel", "with,comma", "quote\"d", "MOR"};
  export_plan_heatmap(plan_of(w), names, dir / "plan.csv");
  const auto table = read_plan_heatmap(dir / "plan.csv");
  EXPECT_EQ(table.row_names, names);
  EXPECT_EQ(table.col_names, (std::vector<std::string>{"ref0", "ref1", "ref2"}));
  EXPECT_LE((table.weights - w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(table.weights, w);  // 17 significant digits are lossless

  std::ifstream js(dir / "plan.json");
  const auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j.at("rows"), 4);
  EXPECT_EQ(j.at("cols"), 3);
  EXPECT_EQ(j.at("row_names").get<std::vector<std::string>>(), names);
  EXPECT_EQ(plan_from_json(j.dump()).weights, w);
}

TEST(Heatmap, NameCountMismatch) {
  testing::ScratchDir dir("heatmap_bad");
  EXPECT_THROW(export_plan_heatmap(plan_of(Matrix::Constant(2, 2, 0.25)), {"a"}, dir / "p.csv"), UsageError);
  EXPECT_THROW(export_plan_heatmap(plan_of(Matrix::Constant(2, 2, 0.25)), {"a", "b"}, dir / "missing" / "p.csv"),
               DataError);
}

TrainConfig ablation_config() {
  TrainConfig c;
  c.epochs = 15;
  c.batch_size = 50;
  c.hidden_width = 16;
  c.encoder_out = 6;
  c.shared_dim = 4;
  c.lr = 0.005;
  c.seed = 1;
  return c;
}

TEST(Ablation, SingleTrialHasZeroSpreadAndAllRowFirst) {
  SynthSpec spec;
  spec.assignment = {0, 1, 1};
  spec.samples = 300;
  spec.default_view_dim = 5;
  AblationOptions options;
  options.split.labeled_fraction = 0.2;
  auto c = ablation_config();
  c.epochs = 3;
  const auto report = run_ablation(generate_synthetic(spec), c, options);
  ASSERT_EQ(report.rows.size(), 4u);
  EXPECT_EQ(report.rows[0].removed, "All");
  EXPECT_EQ(report.rows[0].view, -1);
  for (size_t r = 1; r < 4; ++r) EXPECT_EQ(report.rows[r].view, static_cast<int>(r - 1));
  for (const auto& row : report.rows) {
    EXPECT_EQ(row.stddev, 0.0);
    EXPECT_EQ(row.accuracies.size(), 1u);
  }
  const auto j = nlohmann::json::parse(ablation_to_json(report));
  EXPECT_EQ(j.at("rows").size(), 4u);
  EXPECT_EQ(j.at("mode"), "semisupervised");
}

TEST(Ablation, ReproducibleAndSampleStd) {
  SynthSpec spec;
  spec.assignment = {0, 1};
  spec.samples = 300;
  spec.default_view_dim = 5;
  const auto ds = generate_synthetic(spec);
  AblationOptions options;
  options.trials = 3;
  options.split.labeled_fraction = 0.2;
  auto c = ablation_config();
  c.epochs = 3;
  const auto a = run_ablation(ds, c, options);
  const auto b = run_ablation(ds, c, options);
  EXPECT_EQ(ablation_to_json(a), ablation_to_json(b));
  const auto& acc = a.rows[0].accuracies;
  const double mean = (acc[0] + acc[1] + acc[2]) / 3.0;
  double ss = 0.0;
  for (double v : acc) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(a.rows[0].stddev, std::sqrt(ss / 2.0), 1e-15);
}

TEST(Ablation, NeedsTwoViews) {
  SynthSpec spec;
  spec.assignment = {0};
  spec.samples = 100;
  EXPECT_THROW(run_ablation(generate_synthetic(spec), ablation_config(), {}), UsageError);
}

// Only view 0 sees the class structure; the others observe a pure-noise
// cluster. Dropping view 0 should cost the most by a wide margin.
TEST(Ablation, InformativeViewMattersMost) {
  SynthSpec spec;
  spec.assignment = {0, 1, 1};
  spec.moduli = {6, 1};
  spec.samples = 600;
  spec.default_view_dim = 8;
  spec.seed = 4;
  AblationOptions options;
  options.split.labeled_fraction = 0.2;
  const auto report = run_ablation(generate_synthetic(spec), ablation_config(), options);
  EXPECT_EQ(report.most_damaging(), 0) << ablation_to_json(report);
  EXPECT_GT(report.rows[0].mean - report.rows[1].mean, 0.2) << ablation_to_json(report);
}

}  // namespace
}  // namespace hotmv
