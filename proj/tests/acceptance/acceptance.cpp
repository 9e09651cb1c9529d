// Acceptance run: one PASS/FAIL line per criterion with the pinned tolerances.
//
//   acceptance [--only 1,2,...] [--expect-red 4,5] [--out DIR]
//
// Exit status is 0 when every failing criterion is listed in --expect-red.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fldplus/distortions/distortions.hpp"
#include "fldplus/error.hpp"
#include "fldplus/experiments/monotonicity.hpp"
#include "fldplus/experiments/procedural.hpp"
#include "fldplus/experiments/synthetic.hpp"
#include "fldplus/features/pipeline.hpp"
#include "fldplus/flow/flow_model.hpp"
#include "fldplus/flow/train.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/metric/curve.hpp"
#include "fldplus/metric/summary.hpp"
#include "fldplus/nn/finite_diff.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace fldplus;
using Clock = std::chrono::steady_clock;

namespace {

std::string fmtd(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Desk-scale image setup shared by criteria 4, 5, 7 and 8.

constexpr std::size_t kImageSize = 64;
constexpr std::size_t kTrainImages = 12000;
constexpr std::size_t kSecondBackboneTrain = 4000;
constexpr std::size_t kHoldoutImages = 2000;
constexpr std::size_t kSweepImages = 1000;
constexpr std::uint64_t kTrainCorpusSeed = 1;
constexpr std::uint64_t kHoldoutCorpusSeed = 2;
const char* const kToySpec = "toy:size=64,channels=16-32-4,seed=0";

flow::FlowConfig image_flow_config(std::size_t dim, std::uint64_t seed) {
  flow::FlowConfig c;
  c.input_dim = dim;
  c.coupling_layers = 4;
  c.bins = 8;
  c.tail_bound = 3.0;
  c.hidden_features = 32;
  c.hidden_layers = 2;
  c.seed = seed;
  return c;
}

flow::TrainConfig image_train_config(std::uint64_t seed) {
  flow::TrainConfig t;
  t.epochs = 40;
  t.batch_size = 128;
  t.lr = 1e-3;
  t.patience = 5;
  t.seed = seed;
  return t;
}

struct Pipeline {
  std::string label;
  std::unique_ptr<features::Backbone> backbone;
  features::PoolKind pool = features::PoolKind::kAverage;
  std::size_t train_count = 0;
  features::FeatureSet real;
  features::FeatureSet holdout;
  std::optional<flow::FlowModel<float>> model;
  metric::LogLikelihoodSummary real_summary;
  metric::LogLikelihoodSummary holdout_summary;
  std::size_t best_epoch = 0;
  double train_seconds = 0;
  std::string error;  // set when training or scoring failed
};

void append_rows(features::FeatureSet& dst, const features::FeatureSet& src) {
  if (dst.dim == 0) {
    dst = src;
    return;
  }
  dst.values.insert(dst.values.end(), src.values.begin(), src.values.end());
}

// Streams the corpus in chunks so no more than a chunk of images is resident.
void extract_corpus(std::vector<Pipeline*> pipes, std::uint64_t seed, std::size_t count, bool holdout,
                    std::vector<features::Image>* keep, std::size_t keep_count) {
  constexpr std::size_t kChunk = 500;
  for (std::size_t first = 0; first < count; first += kChunk) {
    const std::size_t n = std::min(kChunk, count - first);
    auto images = experiments::make_corpus(experiments::CorpusKind::kDeadLeaves, first, n, kImageSize, seed);
    for (auto* p : pipes) {
      const std::size_t limit = holdout ? count : p->train_count;
      if (first >= limit) continue;
      std::vector<features::Image> part(images.begin(),
                                        images.begin() + static_cast<std::ptrdiff_t>(std::min(n, limit - first)));
      append_rows(holdout ? p->holdout : p->real, features::extract_images(*p->backbone, part, {p->pool, 1}));
    }
    if (keep) {
      for (std::size_t i = 0; i < n && first + i < keep_count; ++i) keep->push_back(std::move(images[i]));
    }
  }
}

struct ImageSetup {
  std::vector<std::unique_ptr<Pipeline>> pipes;  // toy-avg, toy-max, graph-avg
  std::vector<features::Image> sweep_images;
  std::vector<std::string> sweep_names;
  double seconds = 0;

  Pipeline& toy_avg() { return *pipes[0]; }
  Pipeline& toy_max() { return *pipes[1]; }
  Pipeline& graph_avg() { return *pipes[2]; }
};

ImageSetup& image_setup(const fs::path& graph_file) {
  static std::optional<ImageSetup> setup;
  if (setup) return *setup;
  setup.emplace();
  auto& s = *setup;
  const auto t0 = Clock::now();
  auto add = [&](std::string label, const std::string& spec, features::PoolKind pool, std::size_t train) {
    auto p = std::make_unique<Pipeline>();
    p->label = std::move(label);
    p->backbone = features::make_backbone(spec);
    p->pool = pool;
    p->train_count = train;
    s.pipes.push_back(std::move(p));
  };
  add("toy/avg", kToySpec, features::PoolKind::kAverage, kTrainImages);
  add("toy/max", kToySpec, features::PoolKind::kMax, kTrainImages);
  add("graph/avg", "graph:" + graph_file.string(), features::PoolKind::kAverage, kSecondBackboneTrain);

  std::vector<Pipeline*> raw;
  for (auto& p : s.pipes) raw.push_back(p.get());
  extract_corpus(raw, kTrainCorpusSeed, kTrainImages, false, nullptr, 0);
  extract_corpus(raw, kHoldoutCorpusSeed, kHoldoutImages, true, &s.sweep_images, kSweepImages);
  for (std::size_t i = 0; i < s.sweep_images.size(); ++i) s.sweep_names.push_back("holdout_" + std::to_string(i));

  std::uint64_t seed = 10;
  for (auto& p : s.pipes) {
    const auto t1 = Clock::now();
    try {
      flow::FlowModel<float> init(image_flow_config(p->real.dim, seed));
      auto result = flow::train_flow(std::move(init), p->real.as_tensor<float>(), image_train_config(seed + 1));
      p->model = std::move(result.model);
      p->best_epoch = result.best_epoch;
      p->real_summary = metric::summarize_ll(*p->model, p->real);
      p->holdout_summary = metric::summarize_ll(*p->model, p->holdout);
    } catch (const std::exception& e) {
      p->error = e.what();
      std::printf("  [setup] %-9s failed: %s\n", p->label.c_str(), e.what());
      seed += 10;
      continue;
    }
    p->train_seconds = since(t1);
    std::printf("  [setup] %-9s dim %3zu train %5zu holdout %4zu best epoch %2zu real ll %.4f holdout ll %.4f (%.0fs)\n",
                p->label.c_str(), p->real.dim, p->real.count(), p->holdout.count(), p->best_epoch,
                p->real_summary.mean, p->holdout_summary.mean, p->train_seconds);
    std::fflush(stdout);
    seed += 10;
  }
  s.seconds = since(t0);
  return s;
}

// ---------------------------------------------------------------------------

flow::FlowModel<double> random_flow64(std::size_t dim, std::size_t couplings, std::uint64_t seed, double scale,
                                      nn::Activation act = nn::Activation::kTanh) {
  flow::FlowConfig c;
  c.input_dim = dim;
  c.coupling_layers = couplings;
  c.bins = 8;
  c.tail_bound = 3.0;
  c.hidden_features = 16;
  c.hidden_layers = 2;
  c.activation = act;
  c.seed = seed;
  flow::FlowModel<double> m(c);
  m.randomize(seed + 7, scale);
  return m;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  double worst_logdet = 0;
  for (std::size_t dim : {2u, 4u, 8u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto m = random_flow64(dim, 4, seed * 31 + dim, 0.5);
      const auto xt = testing::random_matrix<double>(3, dim, seed + 17, 1.5);
      for (std::size_t r = 0; r < 3; ++r) {
        const std::vector<double> x(xt.row(r).begin(), xt.row(r).end());
        const auto jac = testing::numeric_jacobian(
            [&](const std::vector<double>& v) { return m.forward(v).value; }, x, 1e-6);
        worst_logdet = std::max(worst_logdet, std::abs(m.forward(x).logdet - testing::log_abs_det(jac, dim)));
      }
    }
  }
  float worst_inverse = 0;
  for (std::size_t dim : {2u, 4u, 8u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      flow::FlowConfig c = random_flow64(dim, 4, seed, 0.3).config();
      flow::FlowModel<float> m(c);
      m.randomize(seed + 7, 0.3);
      const auto x = testing::random_matrix<float>(50, dim, seed + 1000, 1.5);
      for (std::size_t r = 0; r < 50; ++r) {
        const auto back = m.inverse(m.forward(x.row(r)).value);
        for (std::size_t i = 0; i < dim; ++i) worst_inverse = std::max(worst_inverse, std::abs(back.value[i] - x(r, i)));
      }
    }
  }
  const double secs = since(t0);
  return {worst_logdet <= 1e-4 && worst_inverse <= 1e-5f && secs < 60,
          "max |logdet - log|det J_fd|| " + fmtd("%.2e", worst_logdet) + " (tol 1e-4, f64, D=2/4/8 x 10 seeds); "
          "max |x - inv(fwd(x))| " + fmtd("%.2e", worst_inverse) + " (tol 1e-5, f32); " + fmtd("%.1fs", secs) +
              " (limit 60s)"};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t dim = 2 + seed % 5;
    auto m = random_flow64(dim, 3, seed, 0.7);
    const auto batch = testing::random_matrix<double>(6, dim, seed + 300, 1.3);
    flow::FlowGradients<double> grads;
    (void)m.nll_and_gradient(batch, grads);
    auto loss = [&] {
      double s = 0;
      for (double lp : m.log_prob_batch(batch)) s -= lp;
      return s / 6.0;
    };
    auto params = m.parameters();
    for (std::size_t p = 0; p < params.size(); ++p) {
      // step ~ cbrt(machine eps) balances truncation against round-off
      const auto numeric = nn::finite_diff_inplace<double>(params[p].values, 1e-5, loss);
      for (std::size_t i = 0; i < numeric.size(); ++i, ++checked) {
        worst = std::max(worst, testing::relative_error(grads[p][i], numeric[i]));
      }
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-4 && secs < 120,
          "max relative error " + fmtd("%.2e", worst) + " over " + std::to_string(checked) +
              " parameters, 20 seeds (tol 1e-4, central step 1e-5, denominator floor 1e-4); " + fmtd("%.1fs", secs) + " (limit 120s)"};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  constexpr int kSteps = 600;
  const double h = 12.0 / kSteps;
  auto grid = nn::Tensor<double>::matrix(static_cast<std::size_t>(kSteps * kSteps), 2);
  std::size_t r = 0;
  for (int i = 0; i < kSteps; ++i) {
    for (int j = 0; j < kSteps; ++j, ++r) {
      grid(r, 0) = -6.0 + (i + 0.5) * h;
      grid(r, 1) = -6.0 + (j + 0.5) * h;
    }
  }
  double worst = 0;
  std::string masses;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = random_flow64(2, 4, seed, 0.4);
    double mass = 0;
    for (double lp : m.log_prob_batch(grid)) mass += std::exp(lp) * h * h;
    worst = std::max(worst, std::abs(mass - 1.0));
    masses += (masses.empty() ? "" : ", ") + fmtd("%.5f", mass);
  }
  const double secs = since(t0);
  return {worst <= 0.01 && secs < 60,
          "mass on [-6,6]^2 (600x600 midpoints) " + masses + " (tol 1 +- 0.01); " + fmtd("%.1fs", secs) +
              " (limit 60s)"};
}

Outcome criterion4(ImageSetup& s) {
  auto& p = s.toy_avg();
  require(p.error.empty(), ErrorCode::kInvalidArgument, p.label + " pipeline failed: " + p.error);
  const double identity = metric::fld_plus(p.real_summary, p.real_summary);
  const double holdout = metric::fld_plus(p.real_summary, p.holdout_summary);
  const bool identity_ok = std::abs(identity - std::numbers::e) <= 1e-12;
  const bool band_ok = holdout >= 2.5 && holdout <= 3.0;
  return {identity_ok && band_ok,
          "holdout FLD+ " + fmtd("%.4f", holdout) + " (band [2.5, 3.0]; " + std::to_string(p.real.count()) +
              " train / " + std::to_string(p.holdout.count()) + " holdout dead-leaves images, " + kToySpec +
              ", real ll " + fmtd("%.3f", p.real_summary.mean) + ", holdout ll " +
              fmtd("%.3f", p.holdout_summary.mean) + "); fld_plus(S,S) - e = " +
              fmtd("%.1e", identity - std::numbers::e) + " (tol 1e-12)"};
}

const std::vector<double> kNoiseLevels{0, 0.001, 0.005, 0.01, 0.05, 0.1};
const std::vector<double> kBlurLevels{1, 3, 5, 7, 9, 11};

struct SweepSummary {
  bool all_increasing = true;
  double noise_increment = 0;
  std::string detail;
  double worst_seconds = 0;
};

SweepSummary sweep_all(ImageSetup& s, Pipeline& p, const fs::path& out) {
  SweepSummary sum;
  for (auto kind : {distortions::Kind::kGaussianNoise, distortions::Kind::kGaussianBlur,
                    distortions::Kind::kSaltPepper}) {
    experiments::MonotonicityConfig cfg;
    cfg.kind = kind;
    cfg.levels = kind == distortions::Kind::kGaussianBlur ? kBlurLevels : kNoiseLevels;
    cfg.seeds = {0, 1, 2};
    cfg.pool = p.pool;
    const auto t0 = Clock::now();
    const auto r = experiments::run_monotonicity(*p.model, p.real_summary, *p.backbone, s.sweep_images,
                                                 s.sweep_names, cfg);
    sum.worst_seconds = std::max(sum.worst_seconds, since(t0));
    const bool inc = r.strictly_increasing();
    sum.all_increasing = sum.all_increasing && inc;
    if (kind == distortions::Kind::kGaussianNoise) sum.noise_increment = r.mean_increment();
    std::string vals;
    for (const auto& row : r.rows) vals += (vals.empty() ? "" : " ") + fmtd("%.3f", row.mean_fld_plus);
    sum.detail += std::string(sum.detail.empty() ? "" : "; ") + std::string(distortions::to_string(kind)) + " [" +
                  vals + "] " + (inc ? "increasing" : "NOT increasing");
    if (!out.empty()) {
      std::ofstream csv(out / (p.label.substr(0, p.label.find('/')) + "_" + std::string(p.pool == features::PoolKind::kMax ? "max" : "avg") +
                               "_" + std::string(distortions::to_string(kind)) + ".csv"));
      csv << "level,mean_fld_plus,std_fld_plus\n";
      for (const auto& row : r.rows) csv << row.level << "," << row.mean_fld_plus << "," << row.std_fld_plus << "\n";
    }
  }
  return sum;
}

std::map<std::string, SweepSummary>& sweep_cache() {
  static std::map<std::string, SweepSummary> cache;
  return cache;
}

SweepSummary& sweeps_for(ImageSetup& s, Pipeline& p, const fs::path& out) {
  auto& cache = sweep_cache();
  auto it = cache.find(p.label);
  if (it == cache.end()) it = cache.emplace(p.label, sweep_all(s, p, out)).first;
  return it->second;
}

Outcome criterion5(ImageSetup& s, const fs::path& out) {
  auto& p = s.toy_avg();
  require(p.error.empty(), ErrorCode::kInvalidArgument, p.label + " pipeline failed: " + p.error);
  const auto& sw = sweeps_for(s, p, out);
  return {sw.all_increasing && sw.worst_seconds < 1800,
          "mean FLD+ over seeds {0,1,2} on " + std::to_string(s.sweep_images.size()) + " holdout images: " +
              sw.detail + "; slowest sweep " + fmtd("%.1fs", sw.worst_seconds) + " (limit 1800s)"};
}

Outcome criterion6() {
  experiments::SyntheticSpec spec;
  flow::FlowConfig fc;
  fc.input_dim = spec.dim;
  fc.coupling_layers = 4;
  fc.hidden_features = 32;
  fc.tail_bound = 4.0;
  flow::TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 256;
  tc.lr = 3e-3;
  tc.patience = 5;
  std::size_t ordered = 0;
  bool fd_exact = true;
  double worst_est = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    fc.seed = derive_seed(seed, "acceptance/flow");
    tc.seed = derive_seed(seed, "acceptance/train");
    const auto r = experiments::run_synthetic(spec, fc, tc, seed);
    std::string vals;
    for (const auto& row : r.rows) {
      fd_exact = fd_exact && row.analytic_fd == 0.0;
      worst_est = std::max(worst_est, row.estimated_fd);
      vals += (vals.empty() ? "" : " ") + fmtd("%.2f", row.fld_plus);
    }
    ordered += r.fld_strictly_increasing() ? 1 : 0;
    detail += " seed" + std::to_string(seed) + "[" + vals + "]";
  }
  return {fd_exact && worst_est < 0.05 && ordered >= 4,
          "analytic FD exactly 0: " + std::string(fd_exact ? "yes" : "no") + "; max estimated FD " +
              fmtd("%.4f", worst_est) + " (tol 0.05); strictly increasing for " + std::to_string(ordered) +
              "/5 seeds (need 4); FLD+ at rotations 0..45 deg:" + detail};
}

Outcome criterion7(ImageSetup& s) {
  auto& p = s.toy_avg();
  require(p.error.empty(), ErrorCode::kInvalidArgument, p.label + " pipeline failed: " + p.error);
  const auto ll = metric::log_likelihoods(*p.model, p.holdout);
  const double full = metric::fld_plus(p.real_summary, metric::summarize_values(ll));
  const std::vector<std::size_t> sizes{50, 300};
  const auto pts = metric::sample_efficiency_curve(p.real_summary, ll, sizes, 10, 77);
  const double ratio = pts[1].std / pts[0].std;
  const double rel = std::abs(pts[1].mean - full) / full;
  return {ratio < 0.5 && rel <= 0.05,
          "std(n=300)/std(n=50) = " + fmtd("%.3f", pts[1].std) + "/" + fmtd("%.3f", pts[0].std) + " = " +
              fmtd("%.3f", ratio) + " (need < 0.5); mean(n=300) " + fmtd("%.4f", pts[1].mean) + " vs full " +
              fmtd("%.4f", full) + ", rel diff " + fmtd("%.4f", rel) + " (tol 0.05); 10 subsamples of " +
              std::to_string(p.holdout.count()) + " holdout images"};
}

Outcome criterion8(ImageSetup& s, const fs::path& out) {
  require(s.toy_avg().error.empty() && s.toy_max().error.empty(), ErrorCode::kInvalidArgument,
          "toy pipeline failed: " + s.toy_avg().error + s.toy_max().error);
  auto& avg = sweeps_for(s, s.toy_avg(), out);
  auto& mx = sweeps_for(s, s.toy_max(), out);
  auto& graph_p = s.graph_avg();
  std::string graph_detail;
  bool graph_ok = false;
  if (!graph_p.error.empty()) {
    graph_detail = "pipeline failed: " + graph_p.error;
  } else if (graph_p.real_summary.mean < 0) {
    auto& g = sweeps_for(s, graph_p, out);
    graph_ok = g.all_increasing;
    graph_detail = g.detail;
  } else {
    graph_detail = "FLD+ undefined (real mean ll " + fmtd("%.3f", graph_p.real_summary.mean) + " >= 0)";
  }
  const double ratio = mx.noise_increment / avg.noise_increment;
  const bool less_sensitive = avg.noise_increment > 0 && mx.noise_increment < avg.noise_increment;
  return {mx.all_increasing && graph_ok && less_sensitive,
          "max pool: " + mx.detail + " | second backbone (" + graph_p.backbone->id() + "): " + graph_detail +
              " | noise mean increment max/avg = " + fmtd("%.4f", mx.noise_increment) + "/" +
              fmtd("%.4f", avg.noise_increment) + " = " + fmtd("%.3f", ratio) + " (need < 1)"};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = cli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename() == "log.txt") continue;
    out[fs::relative(e.path(), root).string()] = sha256_file(e.path());
  }
  return out;
}

Outcome criterion9(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: '" + cli + "'"};
  testing::TempDir tmp;
  const std::string adapter = "toy:size=32,channels=8-4,seed=2";
  std::vector<std::map<std::string, std::string>> trees;
  std::string failed;
  for (const char* run : {"a", "b"}) {
    const fs::path d = tmp / run;
    fs::create_directories(d);
    auto q = [&](const std::string& name) { return (d / name).string(); };
    const std::vector<std::string> commands{
        "synth-images --count 600 --size 32 --seed 1 --out " + q("real"),
        "synth-images --count 100 --size 32 --seed 2 --out " + q("gen"),
        "extract --images " + q("real") + " --adapter " + adapter + " --out " + q("real.cache"),
        "extract --images " + q("gen") + " --adapter " + adapter + " --pool avg --out " + q("gen.cache"),
        "train --real " + q("real.cache") + " --layers 2 --hidden 16 --epochs 4 --batch 64 --lr 1e-3 --seed 3 --out " +
            q("model.ckpt"),
        "score --model " + q("model.ckpt") + " --real " + q("real.cache") + " --gen " + q("gen.cache") +
            " --fd --out " + q("score.json"),
        "score --model " + q("model.ckpt") + " --gen " + q("gen.cache") + " --format csv --out " + q("score.csv"),
        "distort --images " + q("gen") + " --kind gaussian-noise --levels 0,0.01,0.1 --seed 5 --out " + q("dist"),
        "monotonicity --model " + q("model.ckpt") + " --images " + q("gen") + " --adapter " + adapter +
            " --kind gaussian-blur --levels 1,3,5 --seeds 0,1 --out " + q("mono"),
        "synthetic --train-samples 2000 --eval-samples 2000 --epochs 3 --hidden 16 --seed 2 --out " + q("synthetic"),
        "curve --model " + q("model.ckpt") + " --gen " + q("gen.cache") + " --sizes 10,50 --repeats 5 --seed 4 --out " +
            q("curve"),
    };
    for (const auto& c : commands) {
      if (run_cli(cli, c, d / "log.txt") != 0) {
        failed = c;
        break;
      }
    }
    if (!failed.empty()) break;
    trees.push_back(hash_tree(d));
  }
  if (!failed.empty()) return {false, "command failed: " + failed};
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, hash] : trees[0]) {
    const auto it = trees[1].find(name);
    if (it == trees[1].end() || it->second != hash) {
      ++differing;
      if (first.empty()) first = name;
    }
  }
  differing += trees[1].size() > trees[0].size() ? trees[1].size() - trees[0].size() : 0;
  return {differing == 0 && !trees[0].empty(),
          std::to_string(trees[0].size()) + " artifacts from 11 commands (caches, checkpoint, logs, reports, "
          "manifest, PNGs, CSV/JSON/SVG) compared by sha256 across two runs: " +
              (differing == 0 ? std::string("all identical") : std::to_string(differing) + " differ, e.g. " + first)};
}

std::set<int> parse_ids(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.insert(std::stoi(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  std::set<int> expect_red;
  fs::path out;
  std::string cli = FLDPLUS_CLI;
  fs::path graph = FLDPLUS_SECOND_BACKBONE;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "%s needs a value\n", a.c_str());
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--only") {
      only = parse_ids(next());
    } else if (a == "--expect-red") {
      expect_red = parse_ids(next());
    } else if (a == "--out") {
      out = next();
      fs::create_directories(out);
    } else if (a == "--cli") {
      cli = next();
    } else {
      std::fprintf(stderr, "unknown argument %s\n", a.c_str());
      return 2;
    }
  }

  const std::vector<std::pair<int, std::string>> names{
      {1, "flow correctness"},     {2, "gradient fidelity"},    {3, "density normalization"},
      {4, "identity score"},       {5, "distortion monotonicity"}, {6, "normality-violation study"},
      {7, "sample efficiency"},    {8, "ablations"},            {9, "determinism"}};

  int passed = 0;
  int run = 0;
  std::vector<int> unexpected;
  for (const auto& [id, name] : names) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      switch (id) {
        case 1: o = criterion1(); break;
        case 2: o = criterion2(); break;
        case 3: o = criterion3(); break;
        case 4: o = criterion4(image_setup(graph)); break;
        case 5: o = criterion5(image_setup(graph), out); break;
        case 6: o = criterion6(); break;
        case 7: o = criterion7(image_setup(graph)); break;
        case 8: o = criterion8(image_setup(graph), out); break;
        case 9: o = criterion9(cli); break;
      }
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    ++run;
    passed += o.pass ? 1 : 0;
    if (!o.pass && !expect_red.count(id)) unexpected.push_back(id);
    std::printf("criterion %d %s: %s | %s | %.1fs\n", id, name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria pass", passed, run);
  if (!expect_red.empty()) {
    std::string ids;
    for (int id : expect_red) ids += (ids.empty() ? "" : ",") + std::to_string(id);
    std::printf("; known red: %s", ids.c_str());
  }
  std::printf("\n");
  if (!unexpected.empty()) {
    std::printf("unexpected failures:");
    for (int id : unexpected) std::printf(" %d", id);
    std::printf("\n");
    return 1;
  }
  return 0;
}
