#include "transfig/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "transfig/csv.hpp"
#include "transfig/data.hpp"
#include "transfig/errors.hpp"

namespace transfig {

TrainConfig make_variant(AblationVariant variant, const TrainConfig& base) {
  base.validate();
  if (variant == AblationVariant::baseline) return base;
  TrainConfig c = base;
  c.variant = variant;
  switch (variant) {
    case AblationVariant::d_shared1: c.discriminator_objective = DiscriminatorObjective::compact; break;
    case AblationVariant::no_pool: c.pool.capacity = 0; break;
    case AblationVariant::no_stage1: c.stage_switch_epoch = 0; break;
    case AblationVariant::no_stage2: c.stage_switch_epoch = c.total_epochs; break;
    case AblationVariant::baseline: break;
  }
  return c;
}

TrainConfig make_variant(const std::string& name, const TrainConfig& base) {
  return make_variant(parse_variant(name), base);
}

TrainConfig make_arch(GeneratorArch arch, const TrainConfig& base) {
  TrainConfig c = base;
  c.generator.arch = arch;
  c.validate();
  return c;
}

std::vector<std::string> config_diff(const TrainConfig& a, const TrainConfig& b) {
  const auto ja = a.to_json();
  const auto jb = b.to_json();
  std::set<std::string> keys;
  for (auto it = ja.begin(); it != ja.end(); ++it) keys.insert(it.key());
  for (auto it = jb.begin(); it != jb.end(); ++it) keys.insert(it.key());
  std::vector<std::string> out;
  for (const auto& k : keys) {
    if (!ja.contains(k) || !jb.contains(k) || ja.at(k) != jb.at(k)) out.push_back(k);
  }
  return out;
}

const ComparisonCell* ComparisonReport::find(const std::string& column, const std::string& direction,
                                             const std::string& metric) const {
  for (const auto& c : cells) {
    if (c.column == column && c.direction == direction && c.metric == metric) return &c;
  }
  return nullptr;
}

bool ComparisonReport::all_finite() const {
  for (const auto& c : cells) {
    if (c.failed || !std::isfinite(c.mean) || !std::isfinite(c.std)) return false;
  }
  return !cells.empty();
}

std::string ComparisonReport::to_csv() const {
  std::string out = "kind,title_or_source,column,direction,metric,mean,std,seeds,failed\n";
  for (const auto& c : cells) {
    out += "result," + csv::quote(title) + "," + csv::quote(c.column) + "," + c.direction + "," + c.metric + "," +
           csv::num(c.mean) + "," + csv::num(c.std) + "," + std::to_string(c.seeds) + "," +
           (c.failed ? "1" : "0") + "\n";
  }
  for (const auto& r : references) {
    out += "reference," + csv::quote(r.source) + "," + csv::quote(r.column) + "," + r.direction + "," + r.metric +
           "," + csv::num(r.mean) + "," + csv::num(r.std) + ",,\n";
  }
  return out;
}

ComparisonReport ComparisonReport::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv::split(line).size() != 9) throw ConfigError("not a comparison report");
  ComparisonReport r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 9) throw ConfigError("comparison report row has " + std::to_string(f.size()) + " fields");
    if (f[0] == "result") {
      r.title = f[1];
      ComparisonCell c{f[2], f[3], f[4], std::stod(f[5]), std::stod(f[6]), std::stoll(f[7]), f[8] == "1"};
      if (std::find(r.columns.begin(), r.columns.end(), c.column) == r.columns.end()) r.columns.push_back(c.column);
      r.cells.push_back(std::move(c));
    } else if (f[0] == "reference") {
      r.references.push_back({f[1], f[2], f[3], f[4], std::stod(f[5]), std::stod(f[6])});
    } else {
      throw ConfigError("unknown comparison report row kind '" + f[0] + "'");
    }
  }
  return r;
}

std::string ComparisonReport::to_table() const {
  std::ostringstream out;
  out << title << "\n";
  auto row = [&](const std::string& head, const std::vector<std::string>& cols) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-16s", head.c_str());
    out << buf;
    for (const auto& c : cols) {
      std::snprintf(buf, sizeof(buf), " %-22s", c.c_str());
      out << buf;
    }
    out << "\n";
  };
  auto fmt = [](double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", mean, std);
    return std::string(buf);
  };
  for (const char* metric : {"FID", "KIDx100"}) {
    row(metric, columns);
    for (const char* dir : {"AB", "BA"}) {
      std::vector<std::string> cols;
      for (const auto& col : columns) {
        const auto* c = find(col, dir, metric);
        cols.push_back(!c ? "-" : c->failed ? "failed" : fmt(c->mean, c->std));
      }
      row(dir, cols);
    }
    std::set<std::string> sources;
    for (const auto& r : references) {
      if (r.metric == metric) sources.insert(r.source);
    }
    for (const auto& src : sources) {
      for (const char* dir : {"AB", "BA"}) {
        std::vector<std::string> cols;
        bool any = false;
        for (const auto& col : columns) {
          std::string cell = "-";
          for (const auto& r : references) {
            if (r.source == src && r.metric == metric && r.column == col && r.direction == dir) {
              cell = fmt(r.mean, r.std);
              any = true;
            }
          }
          cols.push_back(cell);
        }
        if (any) row(std::string("ref ") + dir, cols);
      }
      out << "  (ref: " << src << ", published values, not reproduced here)\n";
    }
    out << "\n";
  }
  return out.str();
}

std::vector<ReferenceValue> ablation_references() {
  // AB evaluates translations into zebras, BA into horses. KID scaled by 100.
  struct Row {
    const char* column;
    double fid_horse, fid_horse_sd, fid_zebra, fid_zebra_sd, kid_horse, kid_horse_sd, kid_zebra, kid_zebra_sd;
  };
  const Row at128[] = {
      {"baseline", 207.93, 6.26, 92.91, 6.58, 0.065, 0.003, 0.036, 0.002},
      {"d_shared1", 218.74, 4.69, 100.90, 7.495, 0.084, 0.002, 0.047, 0.003},
      {"no_pool", 216.10, 7.659, 136.63, 10.444, 0.088, 0.002, 0.063, 0.003},
      {"no_stage1", 221.04, 5.005, 139.77, 10.643, 0.085, 0.002, 0.067, 0.003},
      {"no_stage2", 224.02, 6.056, 119.39, 7.025, 0.107, 0.002, 0.050, 0.002},
  };
  const Row at256[] = {
      {"baseline", 212.81, 4.835, 92.72, 9.915, 0.069, 0.002, 0.030, 0.002},
      {"d_shared1", 221.66, 6.185, 148.95, 4.470, 0.090, 0.002, 0.076, 0.004},
      {"no_pool", 213.64, 4.357, 96.16, 5.251, 0.070, 0.002, 0.036, 0.003},
      {"no_stage1", 216.28, 4.884, 118.63, 9.380, 0.072, 0.002, 0.047, 0.003},
      {"no_stage2", 217.67, 6.864, 113.30, 11.212, 0.077, 0.002, 0.045, 0.003},
  };
  std::vector<ReferenceValue> out;
  auto add = [&](const char* source, const Row& r) {
    out.push_back({source, r.column, "AB", "FID", r.fid_zebra, r.fid_zebra_sd});
    out.push_back({source, r.column, "BA", "FID", r.fid_horse, r.fid_horse_sd});
    out.push_back({source, r.column, "AB", "KIDx100", 100 * r.kid_zebra, 100 * r.kid_zebra_sd});
    out.push_back({source, r.column, "BA", "KIDx100", 100 * r.kid_horse, 100 * r.kid_horse_sd});
  };
  for (const auto& r : at128) add("horse2zebra train128/test256", r);
  for (const auto& r : at256) add("horse2zebra train256/test256", r);
  return out;
}

std::vector<ReferenceValue> arch_references() {
  std::vector<ReferenceValue> out;
  const char* h2z = "horse2zebra";
  const char* a2o = "apple2orange";
  // AB: horse->zebra / apple->orange; BA: zebra->horse / orange->apple.
  out.push_back({h2z, "unet", "AB", "FID", 119.99, 14.01});
  out.push_back({h2z, "unet", "BA", "FID", 211.76, 3.65});
  out.push_back({h2z, "resnet", "AB", "FID", 97.47, 7.85});
  out.push_back({h2z, "resnet", "BA", "FID", 210.37, 5.10});
  out.push_back({h2z, "unet", "AB", "KIDx100", 4.6, 0.3});
  out.push_back({h2z, "unet", "BA", "KIDx100", 6.3, 0.2});
  out.push_back({h2z, "resnet", "AB", "KIDx100", 3.0, 0.2});
  out.push_back({h2z, "resnet", "BA", "KIDx100", 5.8, 0.2});
  out.push_back({a2o, "unet", "AB", "FID", 172.30, 2.33});
  out.push_back({a2o, "unet", "BA", "FID", 164.87, 4.20});
  out.push_back({a2o, "resnet", "AB", "FID", 172.30, 2.33});
  out.push_back({a2o, "resnet", "BA", "FID", 168.86, 3.20});
  out.push_back({a2o, "unet", "AB", "KIDx100", 4.4, 0.2});
  out.push_back({a2o, "unet", "BA", "KIDx100", 5.1, 0.3});
  out.push_back({a2o, "resnet", "AB", "KIDx100", 4.4, 0.2});
  out.push_back({a2o, "resnet", "BA", "KIDx100", 5.2, 0.2});
  return out;
}

namespace {

struct Job {
  std::string column;
  TrainConfig config;
};

RunRecord run_one(const Job& job, std::uint64_t seed, const std::filesystem::path& data_root,
                  const SuiteOptions& options, const UnpairedDataset& a, const UnpairedDataset& b) {
  RunRecord rec;
  rec.column = job.column;
  rec.seed = seed;
  rec.run_dir = options.out_dir / job.column / ("seed_" + std::to_string(seed));
  try {
    TrainConfig cfg = job.config;
    cfg.seed = seed;
    FitOptions fo;
    fo.run_dir = rec.run_dir;
    fo.quiet = options.quiet;
    const auto fitted = fit(cfg, a, b, fo);
    rec.steps = fitted.steps;
    rec.d_term_count = fitted.d_term_count;
    rec.inputs_seen = fitted.inputs_seen;
    rec.generated_inputs_seen = fitted.generated_inputs_seen;
    const auto embedder = make_embedder(options.embedder);
    auto eval = options.eval;
    eval.seed = seed;
    rec.metrics = evaluate_checkpoint(fitted.final_checkpoint, data_root, *embedder, eval);
    std::ofstream(rec.run_dir / "metrics.csv") << rec.metrics.to_csv();
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    std::cerr << "run " << job.column << " seed " << seed << " failed: " << e.what() << '\n';
  }
  return rec;
}

ComparisonReport tabulate(const std::string& title, const std::vector<std::string>& columns,
                          const std::vector<RunRecord>& runs) {
  ComparisonReport report;
  report.title = title;
  report.columns = columns;
  for (const auto& col : columns) {
    for (const char* dir : {"AB", "BA"}) {
      for (const char* metric : {"FID", "KIDx100"}) {
        std::vector<double> values;
        bool failed = false;
        for (const auto& r : runs) {
          if (r.column != col) continue;
          const auto* e = r.ok ? r.metrics.find(dir) : nullptr;
          if (!e) {
            failed = true;
            continue;
          }
          values.push_back(std::string(metric) == "FID" ? e->fid_mean : e->kid_mean_x100);
        }
        ComparisonCell cell{col, dir, metric, 0.0, 0.0, static_cast<std::int64_t>(values.size()), failed};
        if (!values.empty()) {
          for (double v : values) cell.mean += v;
          cell.mean /= static_cast<double>(values.size());
          for (double v : values) cell.std += (v - cell.mean) * (v - cell.mean);
          cell.std = std::sqrt(cell.std / static_cast<double>(values.size()));
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

void write_outputs(const SuiteOptions& options, const SuiteResult& result) {
  std::filesystem::create_directories(options.out_dir);
  std::ofstream(options.out_dir / "report.csv") << result.report.to_csv();
  std::ofstream(options.out_dir / "report.txt") << result.report.to_table();
  std::ofstream runs(options.out_dir / "runs.csv");
  runs << "column,seed,ok,steps,d_terms,inputs_seen,generated_inputs_seen,run_dir,error\n";
  for (const auto& r : result.runs) {
    runs << csv::quote(r.column) << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << r.steps << ','
         << r.d_term_count << ',' << r.inputs_seen << ',' << r.generated_inputs_seen << ','
         << csv::quote(r.run_dir.string()) << ',' << csv::quote(r.error) << '\n';
  }
}

SuiteResult run_suite(const std::string& title, const std::vector<Job>& jobs, const std::filesystem::path& data_root,
                      const SuiteOptions& options) {
  if (options.seeds.empty()) throw ConfigError("the suite needs at least one seed");
  if (options.out_dir.empty()) throw ConfigError("the suite needs an output directory");
  const DataLayout layout{data_root};
  const auto datasets = load_unpaired(layout.train_a(), layout.train_b());
  const auto& a = datasets.first;
  const auto& b = datasets.second;
  make_embedder(options.embedder);  // fail early on a bad embedder

  std::vector<std::pair<std::size_t, std::uint64_t>> work;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (auto s : options.seeds) work.emplace_back(j, s);
  }
  SuiteResult result;
  result.runs.resize(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      result.runs[i] = run_one(jobs[work[i].first], work[i].second, data_root, options, a, b);
    }
  };
  const auto n_threads = static_cast<std::size_t>(std::max(1, options.jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(n_threads, work.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<std::string> columns;
  for (const auto& j : jobs) columns.push_back(j.column);
  result.report = tabulate(title, columns, result.runs);
  write_outputs(options, result);
  return result;
}

}  // namespace

SuiteResult run_ablation_suite(const TrainConfig& base, const std::filesystem::path& data_root,
                               const SuiteOptions& options) {
  std::vector<Job> jobs;
  for (auto v : kAllVariants) jobs.push_back({to_string(v), make_variant(v, base)});
  auto result = run_suite("Ablation (rows: direction, columns: variant)", jobs, data_root, options);
  result.report.references = ablation_references();
  write_outputs(options, result);
  return result;
}

SuiteResult run_arch_comparison(const TrainConfig& base, const std::filesystem::path& data_root,
                                const SuiteOptions& options) {
  std::vector<Job> jobs;
  for (auto arch : {GeneratorArch::unet, GeneratorArch::resnet}) jobs.push_back({to_string(arch), make_arch(arch, base)});
  auto result = run_suite("Architecture comparison (rows: direction, columns: generator)", jobs, data_root, options);
  result.report.references = arch_references();
  write_outputs(options, result);
  return result;
}

}  // namespace transfig
