#include "transfig/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "transfig/csv.hpp"
#include "transfig/data.hpp"
#include "transfig/errors.hpp"
#include "transfig/rng.hpp"
#include "transfig/trainer.hpp"

namespace transfig {

namespace {

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(v.size()));
  return out;
}

Eigen::MatrixXd rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx, std::size_t count) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m.cols());
  for (std::size_t i = 0; i < count; ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

void check_compatible(const FeatureSet& x, const FeatureSet& y) {
  x.validate();
  y.validate();
  if (x.dim() != y.dim()) {
    throw DimensionError("feature sets differ on the feature axis (1): " + std::to_string(x.dim()) + " vs " +
                         std::to_string(y.dim()));
  }
}

}  // namespace

void FeatureSet::validate() const {
  if (features.rows() < 2) throw DimensionError("a feature set needs at least 2 rows (axis 0)");
  if (!features.allFinite()) throw NumericalError("feature set contains non-finite values");
}

FeatureSet embed(const Embedder& embedder, const torch::Tensor& images, std::int64_t batch_size) {
  if (images.dim() != 4 || images.size(1) != 3) throw DimensionError("embed expects n x 3 x h x w images");
  if (images.size(0) < 2) throw DimensionError("embed needs at least 2 images (axis 0)");
  std::vector<torch::Tensor> parts;
  for (std::int64_t i = 0; i < images.size(0); i += batch_size) {
    auto chunk = images.slice(0, i, std::min(i + batch_size, images.size(0))).to(torch::kFloat).cpu();
    parts.push_back(embedder.embed_batch(resize_square(chunk, embedder.input_size())));
  }
  auto f = torch::cat(parts, 0).to(torch::kDouble).contiguous();
  FeatureSet out;
  out.embedder_id = embedder.id();
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      f.data_ptr<double>(), f.size(0), f.size(1));
  out.validate();
  return out;
}

Moments moments(const FeatureSet& x) {
  x.validate();
  Moments m;
  m.mean = x.features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.features.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(x.size() - 1);
  return m;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "matrix square root did not converge (" << m.rows() << "x" << m.cols()
        << ", max |entry| " << sym.cwiseAbs().maxCoeff() << ", finite " << sym.allFinite() << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double fid_from_moments(const Moments& x, const Moments& y) {
  if (x.mean.size() != y.mean.size() || x.cov.rows() != y.cov.rows()) {
    throw DimensionError("moment dimensions differ on the feature axis");
  }
  // Tr((Cx Cy)^1/2) = Tr((sx Cy sx)^1/2) with sx = Cx^1/2, a symmetric PSD product.
  const Eigen::MatrixXd sx = sqrtm_psd(x.cov);
  const Eigen::MatrixXd inner = sx * y.cov * sx;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(x.cov, Eigen::EigenvaluesOnly).eigenvalues();
    std::ostringstream msg;
    msg << "FID square root did not converge; covariance eigenvalue range [" << ev.minCoeff() << ", "
        << ev.maxCoeff() << "]";
    throw NumericalError(msg.str());
  }
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (x.mean - y.mean).squaredNorm() + x.cov.trace() + y.cov.trace() - 2.0 * tr_sqrt;
  if (!std::isfinite(value)) throw NumericalError("FID evaluated to a non-finite value");
  return value;
}

double fid(const FeatureSet& x, const FeatureSet& y) {
  check_compatible(x, y);
  if (x.size() < x.dim() || y.size() < y.dim()) {
    std::cerr << "warning: FID with fewer samples than feature dimensions (" << std::min(x.size(), y.size())
              << " < " << x.dim() << "); covariances are rank-deficient\n";
  }
  return fid_from_moments(moments(x), moments(y));
}

MeanStd fid_bootstrap(const FeatureSet& generated, const FeatureSet& real, std::int64_t iterations,
                      std::uint64_t seed) {
  check_compatible(generated, real);
  if (iterations < 1) throw ConfigError("FID iterations must be >= 1");
  const auto real_moments = moments(real);
  const auto n = generated.size();
  std::vector<double> values;
  for (std::int64_t it = 0; it < iterations; ++it) {
    std::mt19937_64 rng(derive_seed(seed, "fid-bootstrap", {static_cast<std::uint64_t>(it)}));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    FeatureSet sample;
    sample.features.resize(n, generated.dim());
    for (Eigen::Index i = 0; i < n; ++i) sample.features.row(i) = generated.features.row(pick(rng));
    values.push_back(fid_from_moments(moments(sample), real_moments));
  }
  return mean_std(values);
}

double mmd2_unbiased_poly(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() != y.cols()) throw DimensionError("MMD inputs differ on the feature axis (1)");
  const auto m = static_cast<double>(x.rows());
  const auto n = static_cast<double>(y.rows());
  if (m < 2 || n < 2) throw ConfigError("MMD needs at least 2 samples per set");
  const double d = static_cast<double>(x.cols());
  auto kernel = [d](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return ((a * b.transpose()).array() / d + 1.0).cube().matrix().eval();
  };
  const Eigen::MatrixXd kxx = kernel(x, x);
  const Eigen::MatrixXd kyy = kernel(y, y);
  const Eigen::MatrixXd kxy = kernel(x, y);
  const double sxx = kxx.sum() - kxx.trace();
  const double syy = kyy.sum() - kyy.trace();
  return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2.0 * kxy.sum() / (m * n);
}

MeanStd kid(const FeatureSet& x, const FeatureSet& y, std::int64_t subset_size, std::int64_t iterations,
            std::uint64_t seed) {
  check_compatible(x, y);
  if (subset_size < 2) throw ConfigError("KID subset size must be >= 2");
  if (subset_size > std::min(x.size(), y.size())) {
    throw ConfigError("KID subset size " + std::to_string(subset_size) + " exceeds the smaller set (" +
                      std::to_string(std::min(x.size(), y.size())) + ")");
  }
  if (iterations < 1) throw ConfigError("KID iterations must be >= 1");
  const auto m = static_cast<std::size_t>(subset_size);
  std::vector<double> values;
  for (std::int64_t it = 0; it < iterations; ++it) {
    const auto i = static_cast<std::uint64_t>(it);
    const auto px = seeded_permutation(static_cast<std::size_t>(x.size()), derive_seed(seed, "kid-x", {i}));
    const auto py = seeded_permutation(static_cast<std::size_t>(y.size()), derive_seed(seed, "kid-y", {i}));
    values.push_back(mmd2_unbiased_poly(rows(x.features, px, m), rows(y.features, py, m)));
  }
  return mean_std(values);
}

bool MetricEntry::finite() const {
  return std::isfinite(fid_mean) && std::isfinite(fid_std) && std::isfinite(kid_mean_x100) &&
         std::isfinite(kid_std_x100);
}

const MetricEntry* MetricReport::find(const std::string& direction) const {
  for (const auto& e : entries) {
    if (e.direction == direction) return &e;
  }
  return nullptr;
}

namespace {
constexpr const char* kReportHeader =
    "checkpoint_id,embedder_id,direction,fid_mean,fid_std,kid_mean_x100,kid_std_x100,n_translated,n_target";
}

std::string MetricReport::to_csv() const {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& e : entries) {
    out += csv::quote(checkpoint_id) + "," + csv::quote(embedder_id) + "," + csv::quote(e.direction) + "," +
           csv::num(e.fid_mean) + "," + csv::num(e.fid_std) + "," + csv::num(e.kid_mean_x100) + "," +
           csv::num(e.kid_std_x100) + "," + std::to_string(e.n_translated) + "," + std::to_string(e.n_target) + "\n";
  }
  return out;
}

MetricReport MetricReport::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::split(line) != csv::split(kReportHeader)) {
    throw ConfigError("not a metric report (unexpected header)");
  }
  MetricReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 9) throw ConfigError("metric report row has " + std::to_string(f.size()) + " fields, expected 9");
    r.checkpoint_id = f[0];
    r.embedder_id = f[1];
    MetricEntry e;
    e.direction = f[2];
    e.fid_mean = std::stod(f[3]);
    e.fid_std = std::stod(f[4]);
    e.kid_mean_x100 = std::stod(f[5]);
    e.kid_std_x100 = std::stod(f[6]);
    e.n_translated = std::stoll(f[7]);
    e.n_target = std::stoll(f[8]);
    r.entries.push_back(e);
  }
  return r;
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << "checkpoint: " << checkpoint_id << "\nembedder:   " << embedder_id << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %-20s %-20s\n", "Direction", "FID", "KID x 100");
  out << line;
  for (const auto& e : entries) {
    char fid_cell[48];
    char kid_cell[48];
    std::snprintf(fid_cell, sizeof(fid_cell), "%.2f +- %.2f", e.fid_mean, e.fid_std);
    std::snprintf(kid_cell, sizeof(kid_cell), "%.2f +- %.2f", e.kid_mean_x100, e.kid_std_x100);
    std::snprintf(line, sizeof(line), "%-10s %-20s %-20s\n", e.direction.c_str(), fid_cell, kid_cell);
    out << line;
  }
  return out.str();
}

MetricEntry evaluate_translation(const Translator& translate, GeneratorRole direction, const torch::Tensor& source,
                                 const torch::Tensor& target, const Embedder& embedder, const EvalOptions& options) {
  if (source.size(0) < 2 || target.size(0) < 2) throw ConfigError("evaluation needs at least 2 images per side");
  std::vector<torch::Tensor> outs;
  for (std::int64_t i = 0; i < source.size(0); i += options.batch_size) {
    outs.push_back(translate(source.slice(0, i, std::min(i + options.batch_size, source.size(0)))).cpu());
  }
  const auto translated = embed(embedder, torch::cat(outs, 0));
  const auto real = embed(embedder, target);

  MetricEntry e;
  e.direction = direction.name();
  e.n_translated = translated.size();
  e.n_target = real.size();
  const auto f = fid_bootstrap(translated, real, options.fid_iterations, derive_seed(options.seed, "eval-fid"));
  const auto subset = options.kid_subset_size > 0
                          ? options.kid_subset_size
                          : std::min<std::int64_t>({translated.size(), real.size(), 1000});
  const auto k = kid(translated, real, subset, options.kid_iterations, derive_seed(options.seed, "eval-kid"));
  e.fid_mean = f.mean;
  e.fid_std = f.std;
  e.kid_mean_x100 = 100.0 * k.mean;
  e.kid_std_x100 = 100.0 * k.std;
  return e;
}

Translator generator_translator(const Generator& g, std::int64_t batch_size) {
  return [&g, batch_size](const torch::Tensor& x) {
    torch::NoGradGuard no_grad;
    const bool was_training = g.is_training();
    g.train(false);
    std::vector<torch::Tensor> outs;
    for (std::int64_t i = 0; i < x.size(0); i += batch_size) {
      outs.push_back(g.forward(x.slice(0, i, std::min(i + batch_size, x.size(0)))));
    }
    g.train(was_training);
    return torch::cat(outs, 0);
  };
}

MetricEntry evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& test_source,
                     const std::filesystem::path& test_target, GeneratorRole direction, const Embedder& embedder,
                     const EvalOptions& options) {
  auto gens = load_generators(checkpoint);
  const auto& g = direction == GeneratorRole::ab() ? gens.g_ab : gens.g_ba;
  g.config().validate_image_size(options.eval_size);
  const auto src = load_images(load_domain(test_source, direction.source()), options.eval_size);
  const auto tgt = load_images(load_domain(test_target, direction.target()), options.eval_size);
  return evaluate_translation(generator_translator(g, options.batch_size), direction, src, tgt, embedder, options);
}

MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& data_root,
                                 const Embedder& embedder, const EvalOptions& options) {
  const DataLayout layout{data_root};
  auto gens = load_generators(checkpoint);
  MetricReport report;
  report.embedder_id = embedder.id();
  report.checkpoint_id = checkpoint.string();
  const auto a = load_images(load_domain(layout.test_a(), DomainTag::a()), options.eval_size);
  const auto b = load_images(load_domain(layout.test_b(), DomainTag::b()), options.eval_size);
  gens.g_ab.config().validate_image_size(options.eval_size);
  report.entries.push_back(evaluate_translation(generator_translator(gens.g_ab, options.batch_size),
                                                GeneratorRole::ab(), a, b, embedder, options));
  report.entries.push_back(evaluate_translation(generator_translator(gens.g_ba, options.batch_size),
                                                GeneratorRole::ba(), b, a, embedder, options));
  return report;
}

}  // namespace transfig
