#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>

#include "common.hpp"
#include "transfig/embedder.hpp"
#include "transfig/errors.hpp"
#include "transfig/metrics.hpp"
#include "transfig/rng.hpp"

using namespace transfig;

namespace {

FeatureSet gaussian(std::int64_t n, std::int64_t d, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  FeatureSet f;
  f.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) f.features(i, j) = z(rng) * (1.0 + 0.2 * j) + shift;
  }
  return f;
}

Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd m(rows.size(), rows.begin()->size());
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

// Eight fixed images for the embedder golden file.
torch::Tensor golden_images() {
  auto x = torch::empty({8, 3, 32, 32});
  auto a = x.accessor<float, 4>();
  for (int i = 0; i < 8; ++i)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int w = 0; w < 32; ++w) a[i][c][y][w] = 0.9f * std::sin(0.3f * w * (i + 1) + 0.2f * y + c);
  return x;
}

}  // namespace

TEST(Fid, SelfDistanceIsZero) {
  auto x = gaussian(300, 6, 1);
  EXPECT_NEAR(fid(x, x), 0.0, 1e-8);
}

TEST(Fid, SymmetricAndRotationInvariant) {
  auto x = gaussian(400, 5, 2);
  auto y = gaussian(400, 5, 3, 0.3);
  EXPECT_NEAR(fid(x, y), fid(y, x), 1e-8);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(5, 5, 4).features);
  const Eigen::MatrixXd q = qr.householderQ();
  FeatureSet xr{x.features * q, ""};
  FeatureSet yr{y.features * q, ""};
  EXPECT_NEAR(fid(xr, yr), fid(x, y), 1e-6);
}

TEST(Fid, OneDimensionalMoments) {
  Moments a{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  Moments b{Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  EXPECT_NEAR(fid_from_moments(a, b), 1.0, 1e-12);
}

// Value from tests/oracles/metrics.py.
TEST(Fid, GeneralCovarianceMatchesOracle) {
  Moments a{Eigen::Vector3d(0.1, 0.2, -0.3), from_rows({{2, .3, .1}, {.3, 1, -.2}, {.1, -.2, .5}})};
  Moments b{Eigen::Vector3d(-0.2, 0.4, 0.0), from_rows({{1, -.4, 0}, {-.4, 1.5, .3}, {0, .3, .8}})};
  EXPECT_NEAR(fid_from_moments(a, b), 0.8203766851884557, 1e-9);
  EXPECT_NEAR(fid_from_moments(b, a), 0.8203766851884557, 1e-9);
}

TEST(Fid, SqrtmSquaresBack) {
  auto m = from_rows({{2, .3, .1}, {.3, 1, -.2}, {.1, -.2, .5}});
  auto r = sqrtm_psd(m);
  EXPECT_LT((r * r - m).norm(), 1e-10);
}

TEST(Fid, MomentsAreUnbiased) {
  FeatureSet x{from_rows({{1, 0}, {3, 2}, {5, 1}}), ""};
  auto m = moments(x);
  EXPECT_DOUBLE_EQ(m.mean(0), 3.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 1), 1.0);
}

TEST(Fid, BootstrapIsReproducible) {
  auto x = gaussian(100, 4, 5);
  auto y = gaussian(100, 4, 6, 0.5);
  auto a = fid_bootstrap(x, y, 10, 3);
  auto b = fid_bootstrap(x, y, 10, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  EXPECT_GT(a.std, 0.0);
}

TEST(Fid, RejectsMismatchedOrInvalidSets) {
  EXPECT_THROW(fid(gaussian(10, 3, 1), gaussian(10, 4, 1)), DimensionError);
  FeatureSet one{Eigen::MatrixXd::Zero(1, 3), ""};
  EXPECT_THROW(fid(one, gaussian(10, 3, 1)), DimensionError);
  auto bad = gaussian(10, 3, 1);
  bad.features(2, 1) = std::nan("");
  EXPECT_THROW(fid(bad, gaussian(10, 3, 1)), NumericalError);
}

// Value from tests/oracles/metrics.py.
TEST(Kid, SingleIterationMatchesBruteForce) {
  Eigen::MatrixXd x(8, 4), y(8, 4);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 4; ++j) {
      x(i, j) = std::round((std::sin(0.7 * i + 1.3 * j) + 0.1 * j) * 1e6) / 1e6;
      y(i, j) = std::round((std::cos(0.5 * i - 0.9 * j) * 1.2 + 0.05 * i) * 1e6) / 1e6;
    }
  }
  EXPECT_NEAR(mmd2_unbiased_poly(x, y), 0.21960732976095532, 1e-10);
  EXPECT_NEAR(kid(FeatureSet{x, ""}, FeatureSet{y, ""}, 8, 1, 9).mean, 0.21960732976095532, 1e-10);
}

TEST(Kid, SameDistributionNearZero) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd all(2000, 8);
  for (Eigen::Index i = 0; i < all.size(); ++i) all.data()[i] = z(rng);
  FeatureSet a{all.topRows(1000), ""};
  FeatureSet b{all.bottomRows(1000), ""};
  double sum = 0;
  for (std::uint64_t s = 0; s < 5; ++s) sum += kid(a, b, 500, 20, s).mean;
  EXPECT_LT(std::abs(sum / 5), 0.01);
  EXPECT_GT(kid(a, gaussian(1000, 8, 12, 1.0), 500, 5, 0).mean, 0.1);
}

TEST(Kid, ReproducibleAndValidated) {
  auto x = gaussian(60, 4, 1);
  auto y = gaussian(60, 4, 2, 0.2);
  auto a = kid(x, y, 30, 100, 7);
  auto b = kid(x, y, 30, 100, 7);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  EXPECT_THROW(kid(x, y, 1, 10, 0), ConfigError);
  EXPECT_THROW(kid(x, y, 61, 10, 0), ConfigError);
}

TEST(Embed, RowsAndDeterminism) {
  HermeticEmbedder e;
  auto img = test::rand_images(1, 32, 1);
  auto f = embed(e, torch::cat({img, img, test::rand_images(3, 32, 2)}));
  EXPECT_EQ(f.size(), 5);
  EXPECT_EQ(f.dim(), 32);
  EXPECT_EQ(f.embedder_id, e.id());
  EXPECT_EQ(f.features.row(0), f.features.row(1));
  EXPECT_THROW(embed(e, img), DimensionError);
}

TEST(Embed, ResizesToEmbedderInput) {
  HermeticEmbedder e;
  auto f = embed(e, test::rand_images(3, 64, 3));
  EXPECT_EQ(f.size(), 3);
  EXPECT_EQ(HermeticEmbedder(64).id(), "hermetic-conv32@64");
}

TEST(Embed, HermeticGoldenFeatures) {
  const std::filesystem::path golden = std::filesystem::path(TRANSFIG_TEST_DATA) / "hermetic_golden.txt";
  const auto f = embed(HermeticEmbedder(), golden_images());
  if (std::getenv("TRANSFIG_UPDATE_GOLDEN")) {
    std::ofstream out(golden);
    out << std::setprecision(17);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      for (Eigen::Index j = 0; j < f.dim(); ++j) out << (j ? " " : "") << f.features(i, j);
      out << "\n";
    }
    GTEST_SKIP() << "golden file rewritten";
  }
  std::ifstream in(golden);
  ASSERT_TRUE(in) << golden;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    for (Eigen::Index j = 0; j < f.dim(); ++j) {
      double v = 0;
      ASSERT_TRUE(in >> v);
      EXPECT_NEAR(f.features(i, j), v, 1e-5) << i << "," << j;
    }
  }
}

TEST(Embed, MissingTorchScriptFileIsConfigError) {
  EXPECT_THROW(make_embedder("/nonexistent/inception.pt"), ConfigError);
  EXPECT_EQ(make_embedder("hermetic")->dim(), 32);
}

TEST(Evaluate, PassthroughMatchesSourceFid) {
  HermeticEmbedder e;
  auto source = test::rand_images(20, 32, 1);
  auto target = test::rand_images(20, 32, 2) * 0.5;
  EvalOptions o;
  o.kid_iterations = 10;
  auto entry = evaluate_translation([](const torch::Tensor& x) { return x; }, GeneratorRole::ab(), source, target,
                                    e, o);
  auto expect = fid_bootstrap(embed(e, source), embed(e, target), o.fid_iterations, derive_seed(o.seed, "eval-fid"));
  EXPECT_NEAR(entry.fid_mean, expect.mean, 1e-6);
  EXPECT_EQ(entry.direction, "AB");
  EXPECT_EQ(entry.n_translated, 20);
  EXPECT_TRUE(entry.finite());
}

TEST(MetricReport, CsvRoundTripAndTable) {
  MetricReport r;
  r.embedder_id = "hermetic-conv32@32";
  r.checkpoint_id = "run/step_10.ckpt";
  r.entries = {{"AB", 12.5, 1.25, 3.0, 0.5, 50, 50}, {"BA", 0.1 + 0.2, 1e-17, -0.01, 2, 7, 9}};
  auto back = MetricReport::from_csv(r.to_csv());
  EXPECT_EQ(back.embedder_id, r.embedder_id);
  EXPECT_EQ(back.checkpoint_id, r.checkpoint_id);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[1].fid_mean, r.entries[1].fid_mean);
  EXPECT_EQ(back.entries[1].n_target, 9);
  ASSERT_NE(back.find("BA"), nullptr);
  EXPECT_EQ(back.find("XY"), nullptr);
  const auto table = r.to_table();
  EXPECT_NE(table.find("KID"), std::string::npos);
  EXPECT_NE(table.find("12.5"), std::string::npos);
  EXPECT_THROW(MetricReport::from_csv("not,a,report\n"), std::runtime_error);
}
