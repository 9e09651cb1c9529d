#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "fldplus/flow/checkpoint.hpp"
#include "test_support.hpp"

namespace fldplus {
namespace {

using flow::FlowConfig;
using flow::FlowModel;
using testing::random_matrix;

template <typename T>
FlowModel<T> random_model(std::uint64_t seed) {
  FlowConfig cfg;
  cfg.input_dim = 6;
  cfg.coupling_layers = 3;
  cfg.bins = 5;
  cfg.hidden_features = 12;
  cfg.hidden_layers = 2;
  cfg.seed = seed;
  FlowModel<T> m(cfg);
  m.randomize(seed, 0.5);
  return m;
}

template <typename T>
void expect_identical_log_prob(std::uint64_t seed) {
  testing::TempDir dir;
  const auto m = random_model<T>(seed);
  flow::save_flow(dir / "m.flpc", m, R"({"note":"x"})");
  const auto loaded = flow::load_flow<T>(dir / "m.flpc");
  const auto x = random_matrix<T>(100, 6, seed + 1, 1.5);
  const auto a = m.log_prob_batch(x);
  const auto b = loaded.model.log_prob_batch(x);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a[i], &b[i], sizeof(T)), 0) << i;
  }
  EXPECT_EQ(loaded.metadata_json, R"({"note":"x"})");
  EXPECT_EQ(flow::serialize_flow(loaded.model, loaded.metadata_json),
            flow::serialize_flow(m, R"({"note":"x"})"));
}

TEST(Checkpoint, RoundTripFloat) { expect_identical_log_prob<float>(3); }
TEST(Checkpoint, RoundTripDouble) { expect_identical_log_prob<double>(4); }

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = flow::serialize_flow(random_model<float>(1));
  ASSERT_GT(bytes.size(), 11u);
  EXPECT_EQ(bytes.substr(0, 4), "FLPC");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, little endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0);  // float32
  const auto len = static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[7])) |
                   static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8])) << 8;
  EXPECT_EQ(bytes[11], '{');
  EXPECT_EQ(bytes[11 + len - 1], '}');
}

TEST(Checkpoint, CorruptMagicIsRejected) {
  auto bytes = flow::serialize_flow(random_model<float>(1));
  bytes[0] = 'X';
  EXPECT_FLD_ERROR(flow::deserialize_flow<float>(bytes), ErrorCode::kFormat);
}

TEST(Checkpoint, UnknownVersionIsRejected) {
  auto bytes = flow::serialize_flow(random_model<float>(1));
  bytes[4] = 2;
  EXPECT_FLD_ERROR(flow::deserialize_flow<float>(bytes), ErrorCode::kVersion);
}

TEST(Checkpoint, PrecisionMismatchIsExplicit) {
  testing::TempDir dir;
  flow::save_flow(dir / "d.flpc", random_model<double>(2));
  EXPECT_EQ(flow::checkpoint_precision(dir / "d.flpc"), io::Precision::kFloat64);
  EXPECT_FLD_ERROR(flow::load_flow<float>(dir / "d.flpc"), ErrorCode::kPrecisionMismatch);
  flow::save_flow(dir / "f.flpc", random_model<float>(2));
  EXPECT_FLD_ERROR(flow::load_flow<double>(dir / "f.flpc"), ErrorCode::kPrecisionMismatch);
}

TEST(Checkpoint, TruncationIsRejectedAtEveryLength) {
  const auto bytes = flow::serialize_flow(random_model<float>(5));
  for (std::size_t cut : {std::size_t{3}, std::size_t{6}, std::size_t{9}, std::size_t{40},
                          bytes.size() / 2, bytes.size() - 1}) {
    try {
      (void)flow::deserialize_flow<float>(bytes.substr(0, cut));
      ADD_FAILURE() << "accepted truncated checkpoint of " << cut << " bytes";
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kTruncated || e.code() == ErrorCode::kFormat) << e.what();
    }
  }
}

TEST(Checkpoint, TrailingGarbageIsRejected) {
  auto bytes = flow::serialize_flow(random_model<float>(5));
  bytes += "junk";
  EXPECT_FLD_ERROR(flow::deserialize_flow<float>(bytes), ErrorCode::kFormat);
}

TEST(Checkpoint, MissingFileIsAnIoError) {
  EXPECT_FLD_ERROR(flow::load_flow<float>("/nonexistent/dir/model.flpc"), ErrorCode::kIo);
}

TEST(Checkpoint, UninitializedModelRoundTripsItsFlag) {
  FlowConfig cfg;
  cfg.input_dim = 4;
  cfg.coupling_layers = 2;
  cfg.hidden_features = 4;
  const auto loaded = flow::deserialize_flow<float>(flow::serialize_flow(FlowModel<float>(cfg)));
  EXPECT_FALSE(loaded.model.actnorm_initialized());
  EXPECT_EQ(loaded.metadata_json, "{}");
}

}  // namespace
}  // namespace fldplus
