#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hotmv/config.hpp"
#include "hotmv/error.hpp"

namespace hotmv {
namespace {

// Published defaults: 100 epochs, lr 0.001, batch 400, f_s output 20,
// latent dim 10, tau 0.01, gamma 0.1, alpha 0.01, 20 Sinkhorn iterations,
// beta 0.1.
TEST(Config, DefaultsAreThePublishedSettings) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 100);
  EXPECT_EQ(c.lr, 0.001);
  EXPECT_EQ(c.batch_size, 400);
  EXPECT_EQ(c.encoder_out, 20);
  EXPECT_EQ(c.shared_dim, 10);
  EXPECT_EQ(c.tau, 0.01);
  EXPECT_EQ(c.gamma, 0.1);
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_EQ(c.sinkhorn_iters, 20);
  EXPECT_EQ(c.beta, 0.1);
  EXPECT_EQ(c.num_projections, 3);
  EXPECT_EQ(c.num_clusters, 3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, TextRoundTrip) {
  TrainConfig c;
  c.epochs = 7;
  c.lr = 0.1 + 0.2;  // not exactly representable in short decimal
  c.regularizer = RegularizerKind::kSwPairwise;
  c.use_autoencoder = true;
  c.seed = 18446744073709551615ull;
  c.beta = 1.0 / 3.0;
  const TrainConfig back = parse_config_text(config_to_text(c));
  EXPECT_EQ(config_to_text(back), config_to_text(c));
  EXPECT_EQ(back.lr, c.lr);
  EXPECT_EQ(back.beta, c.beta);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.regularizer, c.regularizer);
}

TEST(Config, CommentsBlankLinesAndBase) {
  TrainConfig base;
  base.epochs = 3;
  const auto c = parse_config_text("# header\n\n gamma = 0.5  # inline\nuse_autoencoder=1\n", base);
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_TRUE(c.use_autoencoder);
}

TEST(Config, UnknownKeyIsRejected) {
  try {
    parse_config_text("epochs = 2\nlearning_rate = 0.1\n");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
}

TEST(Config, BadValuesAreRejected) {
  TrainConfig c;
  EXPECT_THROW(set_config_value(c, "epochs", "ten"), UsageError);
  EXPECT_THROW(set_config_value(c, "epochs", "3.5"), UsageError);
  EXPECT_THROW(set_config_value(c, "use_autoencoder", "maybe"), UsageError);
  EXPECT_THROW(set_config_value(c, "regularizer", "hot"), UsageError);
  EXPECT_THROW(parse_config_text("epochs 3\n"), UsageError);
}

TEST(Config, ValidationCatchesNonsense) {
  TrainConfig c;
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainConfig{};
  c.gamma = -1.0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Config, MapHasEveryKey) {
  const auto m = config_to_map(TrainConfig{});
  for (const char* key : {"epochs", "lr", "batch_size", "hidden_width", "encoder_out", "shared_dim", "tau", "gamma",
                          "alpha", "sinkhorn_iters", "beta", "num_projections", "num_clusters", "regularizer",
                          "use_autoencoder", "head_epochs", "seed"}) {
    EXPECT_EQ(m.count(key), 1u) << key;
  }
  EXPECT_EQ(m.at("regularizer"), "hot_reference");
}

TEST(Config, FileErrorsNameThePath) {
  const auto path = std::filesystem::temp_directory_path() / "hotmv_config_test.txt";
  std::ofstream(path) << "bogus = 1\n";
  try {
    load_config_file(path);
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find(path.string()), std::string::npos);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(load_config_file(path), UsageError);
}

}  // namespace
}  // namespace hotmv
