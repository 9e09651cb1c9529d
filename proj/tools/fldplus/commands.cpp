#include "commands.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <memory>

#include "common.hpp"
#include "fldplus/distortions/distortions.hpp"
#include "fldplus/error.hpp"
#include "fldplus/experiments/model_card.hpp"
#include "fldplus/experiments/monotonicity.hpp"
#include "fldplus/experiments/plot.hpp"
#include "fldplus/experiments/procedural.hpp"
#include "fldplus/experiments/synthetic.hpp"
#include "fldplus/features/pipeline.hpp"
#include "fldplus/flow/train.hpp"
#include "fldplus/hash.hpp"
#include "fldplus/metric/curve.hpp"
#include "fldplus/metric/frechet.hpp"
#include "fldplus/metric/report.hpp"
#include "fldplus/parallel.hpp"

namespace fldplus::cli {

namespace fs = std::filesystem;
using experiments::CsvWriter;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Flow hyperparameters shared by train and synthetic.
struct FlowFlags {
  std::size_t layers = 8;
  std::size_t bins = 8;
  double tail_bound = 3.0;
  std::size_t hidden = 512;
  std::size_t hidden_layers = 2;
  std::string activation = "relu";
  std::size_t epochs = 100;
  std::size_t batch = 256;
  double lr = 1e-4;
  std::size_t patience = 10;
  double val_fraction = 0.1;
  double clip = 5.0;
  std::uint64_t seed = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--layers", layers, "coupling layers")->capture_default_str();
    cmd.add_option("--bins", bins, "spline bins")->capture_default_str();
    cmd.add_option("--tail-bound", tail_bound, "spline interval [-B, B]")->capture_default_str();
    cmd.add_option("--hidden", hidden, "conditioner width")->capture_default_str();
    cmd.add_option("--hidden-layers", hidden_layers, "conditioner hidden layers")->capture_default_str();
    cmd.add_option("--activation", activation, "relu|tanh")->capture_default_str();
    cmd.add_option("--epochs", epochs)->capture_default_str();
    cmd.add_option("--batch", batch)->capture_default_str();
    cmd.add_option("--lr", lr)->capture_default_str();
    cmd.add_option("--patience", patience, "early-stop patience in epochs")->capture_default_str();
    cmd.add_option("--val-fraction", val_fraction)->capture_default_str();
    cmd.add_option("--clip", clip, "global gradient-norm clip")->capture_default_str();
    cmd.add_option("--seed", seed)->capture_default_str();
  }

  flow::FlowConfig flow_config(std::size_t dim) const {
    flow::FlowConfig c;
    c.input_dim = dim;
    c.coupling_layers = layers;
    c.bins = bins;
    c.tail_bound = tail_bound;
    c.hidden_features = hidden;
    c.hidden_layers = hidden_layers;
    c.activation = nn::parse_activation(activation);
    c.seed = derive_seed(seed, "flow/init");
    c.validate();
    return c;
  }

  flow::TrainConfig train_config() const {
    flow::TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch;
    t.lr = lr;
    t.patience = patience;
    t.validation_fraction = val_fraction;
    t.clip_norm = clip;
    t.seed = derive_seed(seed, "flow/train");
    t.validate();
    return t;
  }

  Json to_json() const {
    return Json{{"layers", layers},   {"bins", bins},         {"tail_bound", tail_bound},
                {"hidden", hidden},   {"hidden_layers", hidden_layers},
                {"activation", activation},                 {"epochs", epochs},
                {"batch", batch},     {"lr", lr},             {"patience", patience},
                {"val_fraction", val_fraction},             {"clip", clip},
                {"seed", seed}};
  }
};

std::string pool_name(features::PoolKind pool) { return std::string(features::to_string(pool)); }

std::vector<features::Image> read_images(const std::vector<fs::path>& files, std::size_t workers) {
  std::vector<features::Image> images(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) { images[i] = features::read_image(files[i]); });
  return images;
}

// ---- extract ---------------------------------------------------------------

struct ExtractFlags {
  fs::path images;
  fs::path precomputed;
  std::string adapter = "toy";
  std::string pool = "avg";
  fs::path out;
  std::size_t workers = 1;
};

void run_extract(const ExtractFlags& f) {
  const auto t0 = Clock::now();
  const auto pool = features::parse_pool_kind(f.pool);
  require(f.images.empty() != f.precomputed.empty(), ErrorCode::kInvalidArgument,
          "give exactly one of --images or --precomputed");
  features::FeatureSet set;
  if (!f.images.empty()) {
    require_dir(f.images, "--images");
    const auto backbone = features::make_backbone(f.adapter);
    set = features::extract_directory(*backbone, f.images, {pool, f.workers});
  } else {
    require_file(f.precomputed, "--precomputed");
    set = features::load_precomputed(f.precomputed, pool);
  }
  features::write_cache(f.out, set);
  std::printf("count %zu dim %zu elapsed %.2fs\n", set.count(), set.dim, seconds_since(t0));
}

// ---- train -----------------------------------------------------------------

struct TrainFlags {
  fs::path real;
  fs::path out;
  fs::path log;
  std::string precision = "f32";
  std::size_t workers = 1;
  bool verbose = false;
  FlowFlags flow;
};

template <nn::Real T>
void train_as(const TrainFlags& f, const features::FeatureSet& real) {
  const auto t0 = Clock::now();
  flow::FlowModel<T> model(f.flow.flow_config(real.dim));
  auto result = flow::train_flow(std::move(model), real.as_tensor<T>(), f.flow.train_config(),
                                 [&](const flow::EpochRecord& r) {
                                   if (f.verbose) {
                                     std::fprintf(stderr, "epoch %zu train %.4f val %.4f\n", r.epoch,
                                                  r.train_nll, r.val_nll);
                                   }
                                 });

  Json config = f.flow.to_json();
  config["precision"] = f.precision;

  experiments::ModelCard card;
  card.real_summary = metric::summarize_ll(result.model, real, f.workers);
  card.real_features = metric::FeatureSummary::of(real);
  card.real_cache_sha256 = sha256_file(f.real);
  card.train_config_json = config.dump();
  card.best_epoch = result.best_epoch;
  card.stop_reason = result.stop_reason;

  auto meta = OrderedJson::parse(card.to_json());
  meta["provenance"] = provenance("train", config, f.flow.seed, {{"real", card.real_cache_sha256}});
  flow::save_flow(f.out, result.model, meta.dump());

  const fs::path log = f.log.empty() ? fs::path(f.out.string() + ".log.csv") : f.log;
  write_text(log, flow::training_log_csv(result.history, result.initial_val_nll));

  std::printf("best epoch %zu (%s) val nll %.6g real mean ll %.6g elapsed %.2fs\n", result.best_epoch,
              result.stop_reason.c_str(), result.best_val_nll, card.real_summary.mean,
              seconds_since(t0));
  if (card.real_summary.mean >= 0) {
    std::fprintf(stderr,
                 "warning: mean real log-likelihood %.6g is not negative, FLD+ is undefined for this "
                 "model\n",
                 card.real_summary.mean);
  }
}

void run_train(const TrainFlags& f) {
  require_file(f.real, "--real");
  const auto real = features::read_cache(f.real);
  if (f.precision == "f32") {
    train_as<float>(f, real);
  } else if (f.precision == "f64") {
    train_as<double>(f, real);
  } else {
    fail(ErrorCode::kInvalidArgument, "--precision must be f32 or f64, got " + f.precision);
  }
}

// ---- score -----------------------------------------------------------------

struct ScoreFlags {
  fs::path model;
  fs::path real;
  fs::path gen;
  bool fd = false;
  std::string format = "json";
  fs::path out;
  std::size_t workers = 1;
};

void run_score(const ScoreFlags& f) {
  require(f.format == "json" || f.format == "csv", ErrorCode::kInvalidArgument,
          "--format must be json or csv, got " + f.format);
  require(!f.fd || !f.real.empty(), ErrorCode::kInvalidArgument, "--fd needs --real");
  require_file(f.gen, "--gen");
  if (!f.real.empty()) require_file(f.real, "--real");

  const std::string text = with_checkpoint(f.model, [&](const auto& loaded) {
    const auto card = experiments::ModelCard::parse(loaded.metadata_json);
    const auto gen = features::read_cache(f.gen);
    card.check_compatible(metric::FeatureSummary::of(gen), "generated");

    Inputs inputs{{"model", sha256_file(f.model)}, {"gen", sha256_file(f.gen)}};
    metric::LogLikelihoodSummary real_summary = card.real_summary;
    metric::FeatureSummary real_features = card.real_features;
    std::optional<features::FeatureSet> real;
    if (!f.real.empty()) {
      real = features::read_cache(f.real);
      card.check_compatible(metric::FeatureSummary::of(*real), "real");
      real_summary = metric::summarize_ll(loaded.model, *real, f.workers);
      real_features = metric::FeatureSummary::of(*real);
      inputs.emplace_back("real", sha256_file(f.real));
    }
    const auto gen_summary = metric::summarize_ll(loaded.model, gen, f.workers);
    auto report = metric::make_report(real_summary, gen_summary);
    if (f.fd) {
      report.fd_baseline = metric::frechet_distance(metric::gaussian_moments(*real),
                                                    metric::gaussian_moments(gen));
    }
    report.model_id = inputs[0].second;
    report.real_features = real_features;
    report.gen_features = metric::FeatureSummary::of(gen);
    report.artifact.command = "score";
    report.artifact.config_json =
        Json{{"fd", f.fd}, {"format", f.format}, {"real_from", f.real.empty() ? "checkpoint" : "cache"}}
            .dump();
    report.artifact.inputs = inputs;
    return f.format == "json" ? report.to_json() : metric::MetricReport::csv_header() + report.csv_row();
  });
  if (f.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_text(f.out, text);
  }
}

// ---- distort ---------------------------------------------------------------

struct DistortFlags {
  fs::path images;
  std::string kind;
  std::vector<double> levels;
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t workers = 1;
};

void run_distort(const DistortFlags& f) {
  require_dir(f.images, "--images");
  distortions::SweepOptions o;
  o.kind = distortions::parse_kind(f.kind);
  o.levels = f.levels;
  o.seed = f.seed;
  o.workers = f.workers;
  const auto t0 = Clock::now();
  const auto r = distortions::distort_sweep(f.images, f.out, o);
  std::printf("%zu outputs over %zu levels, %zu failed, elapsed %.2fs\n", r.entries.size(),
              r.level_dirs.size(), r.failures(), seconds_since(t0));
  require(r.failures() == 0, ErrorCode::kIo,
          fmt::format("{} images could not be distorted, see {}", r.failures(),
                      (f.out / "manifest.json").string()));
}

// ---- monotonicity ----------------------------------------------------------

struct MonotonicityFlags {
  fs::path model;
  fs::path images;
  std::string adapter = "toy";
  std::string pool = "avg";
  std::string kind;
  std::vector<double> levels;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  fs::path out;
  std::size_t workers = 1;
};

void run_monotonicity(const MonotonicityFlags& f) {
  require_dir(f.images, "--images");
  const auto t0 = Clock::now();
  experiments::MonotonicityConfig cfg;
  cfg.kind = distortions::parse_kind(f.kind);
  cfg.levels = f.levels;
  cfg.seeds = f.seeds;
  cfg.pool = features::parse_pool_kind(f.pool);
  cfg.workers = f.workers;
  cfg.validate();

  const auto files = features::list_images(f.images);
  require(!files.empty(), ErrorCode::kInsufficientData, "no images in " + f.images.string());
  std::vector<std::string> names;
  for (const auto& p : files) names.push_back(p.filename().string());
  const auto images = read_images(files, f.workers);
  const auto backbone = features::make_backbone(f.adapter);

  Json config{{"adapter", f.adapter}, {"pool", f.pool},     {"kind", std::string(to_string(cfg.kind))},
              {"levels", f.levels},   {"seeds", f.seeds}};
  std::vector<std::string> hashes(files.size());
  parallel_for(files.size(), f.workers, [&](std::size_t i) { hashes[i] = sha256_file(files[i]); });

  const auto result = with_checkpoint(f.model, [&](const auto& loaded) {
    const auto card = experiments::ModelCard::parse(loaded.metadata_json);
    metric::FeatureSummary probe = card.real_features;
    probe.backbone = backbone->id();
    probe.pooling = pool_name(cfg.pool);
    probe.dim = features::image_features(*backbone, images[0], cfg.pool).size();
    card.check_compatible(probe, "image");
    return std::make_pair(
        experiments::run_monotonicity(loaded.model, card.real_summary, *backbone, images, names, cfg),
        card.real_summary);
  });
  const auto& rows = result.first.rows;

  std::vector<std::string> header{"level", "mean_fld_plus", "std_fld_plus"};
  for (auto s : f.seeds) header.push_back(fmt::format("fld_plus_seed{}", s));
  for (auto s : f.seeds) header.push_back(fmt::format("gen_mean_ll_seed{}", s));
  CsvWriter csv(header);
  OrderedJson jrows = OrderedJson::array();
  experiments::Series series{fmt::format("{} ({} pool)", to_string(cfg.kind), f.pool), {}, {}, {}};
  for (const auto& row : rows) {
    std::vector<std::string> fields{CsvWriter::number(row.level), CsvWriter::number(row.mean_fld_plus),
                                    CsvWriter::number(row.std_fld_plus)};
    for (double v : row.fld_plus) fields.push_back(CsvWriter::number(v));
    for (const auto& g : row.gen) fields.push_back(CsvWriter::number(g.mean));
    csv.row(fields);
    std::vector<double> gen_means;
    for (const auto& g : row.gen) gen_means.push_back(g.mean);
    jrows.push_back({{"level", row.level},
                     {"mean_fld_plus", row.mean_fld_plus},
                     {"std_fld_plus", row.std_fld_plus},
                     {"fld_plus", row.fld_plus},
                     {"gen_mean_ll", gen_means}});
    series.x.push_back(row.level);
    series.y.push_back(row.mean_fld_plus);
    series.y_err.push_back(row.std_fld_plus);
  }

  const Inputs inputs{{"model", sha256_file(f.model)},
                      {"images", features::hash_file_list(names, hashes)}};
  const auto prov = provenance("monotonicity", config, f.seeds.front(), inputs);
  OrderedJson report;
  report["kind"] = std::string(to_string(cfg.kind));
  report["real_mean_ll"] = result.second.mean;
  report["images"] = images.size();
  report["strictly_increasing"] = result.first.strictly_increasing();
  report["mean_increment"] = result.first.mean_increment();
  report["rows"] = jrows;
  report["provenance"] = prov;

  experiments::PlotOptions plot;
  plot.title = fmt::format("FLD+ under {}", to_string(cfg.kind));
  plot.x_label = cfg.kind == distortions::Kind::kGaussianBlur ? "kernel size k" : "level";
  plot.y_label = "FLD+ (mean over seeds)";
  plot.metadata = prov.dump();

  const std::string stem(to_string(cfg.kind));
  write_text(f.out / (stem + ".csv"), csv.str());
  write_text(f.out / (stem + ".json"), report.dump(2) + "\n");
  write_text(f.out / (stem + ".svg"), experiments::line_plot_svg({series}, plot));
  std::printf("%s: %zu levels x %zu seeds on %zu images, strictly increasing: %s, elapsed %.2fs\n",
              stem.c_str(), rows.size(), f.seeds.size(), images.size(),
              result.first.strictly_increasing() ? "yes" : "no", seconds_since(t0));
}

// ---- synthetic -------------------------------------------------------------

struct SyntheticFlags {
  experiments::SyntheticSpec spec;
  FlowFlags flow;
  fs::path out;
  std::size_t workers = 1;

  SyntheticFlags() {
    flow.layers = 4;
    flow.hidden = 32;
    flow.tail_bound = 4.0;
    flow.epochs = 30;
    flow.lr = 3e-3;
    flow.patience = 5;
  }
};

void run_synthetic(const SyntheticFlags& f) {
  const auto t0 = Clock::now();
  f.spec.validate();
  const auto r = experiments::run_synthetic(f.spec, f.flow.flow_config(f.spec.dim), f.flow.train_config(),
                                            f.flow.seed, f.workers);
  Json config{{"flow", f.flow.to_json()},
              {"spec",
               {{"dim", f.spec.dim},
                {"total_variance", f.spec.total_variance},
                {"separation", f.spec.separation},
                {"levels", f.spec.levels},
                {"train_samples", f.spec.train_samples},
                {"eval_samples", f.spec.eval_samples}}}};
  const auto prov = provenance("synthetic", config, f.flow.seed, {});

  CsvWriter csv({"level_degrees", "analytic_fd", "estimated_fd", "gen_mean_ll", "fld_plus"});
  OrderedJson rows = OrderedJson::array();
  experiments::Series series{"FLD+", {}, {}, {}};
  for (const auto& row : r.rows) {
    csv.row({CsvWriter::number(row.level), CsvWriter::number(row.analytic_fd),
             CsvWriter::number(row.estimated_fd), CsvWriter::number(row.gen_summary.mean),
             CsvWriter::number(row.fld_plus)});
    rows.push_back({{"level_degrees", row.level},
                    {"analytic_fd", row.analytic_fd},
                    {"estimated_fd", row.estimated_fd},
                    {"gen_mean_ll", row.gen_summary.mean},
                    {"fld_plus", row.fld_plus}});
    series.x.push_back(row.level);
    series.y.push_back(row.fld_plus);
  }
  OrderedJson report;
  report["real_mean_ll"] = r.real_summary.mean;
  report["best_epoch"] = r.best_epoch;
  report["stop_reason"] = r.stop_reason;
  report["fld_plus_strictly_increasing"] = r.fld_strictly_increasing();
  report["rows"] = rows;
  report["provenance"] = prov;

  experiments::PlotOptions plot;
  plot.title = "Moment-matched mixtures: FLD+ vs rotation";
  plot.x_label = "component rotation (degrees)";
  plot.y_label = "FLD+";
  plot.metadata = prov.dump();

  write_text(f.out / "synthetic.csv", csv.str());
  write_text(f.out / "synthetic.json", report.dump(2) + "\n");
  write_text(f.out / "synthetic.svg", experiments::line_plot_svg({series}, plot));
  std::printf("%s", csv.str().c_str());
  std::printf("strictly increasing: %s, elapsed %.2fs\n", r.fld_strictly_increasing() ? "yes" : "no",
              seconds_since(t0));
}

// ---- curve -----------------------------------------------------------------

struct CurveFlags {
  fs::path model;
  fs::path gen;
  std::vector<std::size_t> sizes{10, 25, 50, 100, 200, 300};
  std::size_t repeats = 10;
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t workers = 1;
};

void run_curve(const CurveFlags& f) {
  require_file(f.gen, "--gen");
  const auto gen = features::read_cache(f.gen);
  const auto [points, real_mean, full] = with_checkpoint(f.model, [&](const auto& loaded) {
    const auto card = experiments::ModelCard::parse(loaded.metadata_json);
    card.check_compatible(metric::FeatureSummary::of(gen), "generated");
    const auto ll = metric::log_likelihoods(loaded.model, gen, f.workers);
    const double full_score = metric::fld_plus(card.real_summary, metric::summarize_values(ll));
    return std::make_tuple(
        metric::sample_efficiency_curve(card.real_summary, ll, f.sizes, f.repeats, f.seed),
        card.real_summary.mean, full_score);
  });

  std::vector<std::string> header{"size", "mean_fld_plus", "std_fld_plus", "disjoint"};
  for (std::size_t r = 0; r < f.repeats; ++r) header.push_back(fmt::format("repeat{}", r));
  CsvWriter csv(header);
  OrderedJson rows = OrderedJson::array();
  experiments::Series series{"FLD+ (mean, std over repeats)", {}, {}, {}};
  for (const auto& p : points) {
    std::vector<std::string> fields{std::to_string(p.size), CsvWriter::number(p.mean),
                                    CsvWriter::number(p.std), p.disjoint ? "1" : "0"};
    for (double s : p.scores) fields.push_back(CsvWriter::number(s));
    while (fields.size() < header.size()) fields.emplace_back();
    csv.row(fields);
    rows.push_back({{"size", p.size}, {"mean", p.mean}, {"std", p.std}, {"disjoint", p.disjoint},
                    {"scores", p.scores}});
    series.x.push_back(static_cast<double>(p.size));
    series.y.push_back(p.mean);
    series.y_err.push_back(p.std);
  }

  Json config{{"sizes", f.sizes}, {"repeats", f.repeats}};
  const auto prov =
      provenance("curve", config, f.seed, {{"model", sha256_file(f.model)}, {"gen", sha256_file(f.gen)}});
  OrderedJson report;
  report["real_mean_ll"] = real_mean;
  report["full_set_fld_plus"] = full;
  report["gen_count"] = gen.count();
  report["rows"] = rows;
  report["provenance"] = prov;

  experiments::PlotOptions plot;
  plot.title = "FLD+ vs number of generated samples";
  plot.x_label = "samples";
  plot.y_label = "FLD+";
  plot.log_x = true;
  plot.metadata = prov.dump();

  write_text(f.out / "curve.csv", csv.str());
  write_text(f.out / "curve.json", report.dump(2) + "\n");
  write_text(f.out / "curve.svg", experiments::line_plot_svg({series}, plot));
  std::printf("full set FLD+ %.6g over %zu samples\n", full, gen.count());
}

// ---- synth-images ----------------------------------------------------------

struct SynthImagesFlags {
  std::string kind = "dead-leaves";
  std::size_t count = 100;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  fs::path out;
  std::size_t workers = 1;
};

void run_synth_images(const SynthImagesFlags& f) {
  const auto t0 = Clock::now();
  const auto kind = experiments::parse_corpus_kind(f.kind);
  const auto paths = experiments::write_corpus(f.out, kind, f.count, f.size, f.seed, f.workers);
  std::printf("%zu %s images of %zux%zu in %s, elapsed %.2fs\n", paths.size(),
              std::string(experiments::to_string(kind)).c_str(), f.size, f.size, f.out.string().c_str(),
              seconds_since(t0));
}

}  // namespace

void register_commands(CLI::App& app) {
  {
    auto f = std::make_shared<ExtractFlags>();
    auto* c = app.add_subcommand("extract", "Extract backbone features from images into a cache");
    auto* images = c->add_option("--images", f->images, "directory of images");
    auto* pre = c->add_option("--precomputed", f->precomputed, "feature cache produced elsewhere");
    images->excludes(pre);
    c->add_option("--adapter", f->adapter, "toy[:size=..,channels=a-b-c,seed=..] or graph:<file>")
        ->capture_default_str();
    c->add_option("--pool", f->pool, "avg|max")->capture_default_str();
    c->add_option("--out", f->out, "output cache")->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_extract(*f); });
  }
  {
    auto f = std::make_shared<TrainFlags>();
    auto* c = app.add_subcommand("train", "Train a flow on a real feature cache");
    c->add_option("--real", f->real, "real feature cache")->required();
    c->add_option("--out", f->out, "output checkpoint")->required();
    c->add_option("--log", f->log, "training log CSV (default <out>.log.csv)");
    c->add_option("--precision", f->precision, "f32|f64")->capture_default_str();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->add_flag("--verbose,-v", f->verbose, "per-epoch progress on stderr");
    f->flow.add_to(*c);
    c->callback([f] { run_train(*f); });
  }
  {
    auto f = std::make_shared<ScoreFlags>();
    auto* c = app.add_subcommand("score", "FLD+ of a generated feature cache");
    c->add_option("--model", f->model, "checkpoint written by train")->required();
    c->add_option("--real", f->real, "real cache (default: summary stored in the checkpoint)");
    c->add_option("--gen", f->gen, "generated feature cache")->required();
    c->add_flag("--fd", f->fd, "also report the Frechet distance (needs --real)");
    c->add_option("--format", f->format, "json|csv")->capture_default_str();
    c->add_option("--out", f->out, "report file (default stdout)");
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_score(*f); });
  }
  {
    auto f = std::make_shared<DistortFlags>();
    auto* c = app.add_subcommand("distort", "Write distorted copies of an image directory");
    c->add_option("--images", f->images)->required();
    c->add_option("--kind", f->kind, "gaussian-noise|gaussian-blur|salt-pepper")->required();
    c->add_option("--levels", f->levels, "comma separated")->required()->delimiter(',');
    c->add_option("--seed", f->seed)->capture_default_str();
    c->add_option("--out", f->out)->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_distort(*f); });
  }
  {
    auto f = std::make_shared<MonotonicityFlags>();
    auto* c = app.add_subcommand("monotonicity", "FLD+ across distortion levels, averaged over seeds");
    c->add_option("--model", f->model)->required();
    c->add_option("--images", f->images, "clean images")->required();
    c->add_option("--adapter", f->adapter)->capture_default_str();
    c->add_option("--pool", f->pool, "avg|max")->capture_default_str();
    c->add_option("--kind", f->kind, "gaussian-noise|gaussian-blur|salt-pepper")->required();
    c->add_option("--levels", f->levels, "comma separated")->required()->delimiter(',');
    c->add_option("--seeds", f->seeds, "comma separated")->delimiter(',')->capture_default_str();
    c->add_option("--out", f->out, "output directory for <kind>.csv/.json/.svg")->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_monotonicity(*f); });
  }
  {
    auto f = std::make_shared<SyntheticFlags>();
    auto* c = app.add_subcommand("synthetic", "Moment-matched mixture study: FD vs FLD+");
    c->add_option("--dim", f->spec.dim)->capture_default_str();
    c->add_option("--variance", f->spec.total_variance, "per-axis variance of the reference")
        ->capture_default_str();
    c->add_option("--separation", f->spec.separation, "component distance from the origin")
        ->capture_default_str();
    c->add_option("--levels", f->spec.levels, "rotation angles in degrees, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    c->add_option("--train-samples", f->spec.train_samples)->capture_default_str();
    c->add_option("--eval-samples", f->spec.eval_samples)->capture_default_str();
    c->add_option("--out", f->out, "output directory")->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    f->flow.add_to(*c);
    c->callback([f] { run_synthetic(*f); });
  }
  {
    auto f = std::make_shared<CurveFlags>();
    auto* c = app.add_subcommand("curve", "FLD+ mean/std vs generated-set size");
    c->add_option("--model", f->model)->required();
    c->add_option("--gen", f->gen)->required();
    c->add_option("--sizes", f->sizes, "comma separated")->delimiter(',')->capture_default_str();
    c->add_option("--repeats", f->repeats)->capture_default_str();
    c->add_option("--seed", f->seed)->capture_default_str();
    c->add_option("--out", f->out, "output directory")->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_curve(*f); });
  }
  {
    auto f = std::make_shared<SynthImagesFlags>();
    auto* c = app.add_subcommand("synth-images", "Write a seeded synthetic image corpus");
    c->add_option("--kind", f->kind, "dead-leaves|procedural")->capture_default_str();
    c->add_option("--count", f->count)->capture_default_str();
    c->add_option("--size", f->size)->capture_default_str();
    c->add_option("--seed", f->seed)->capture_default_str();
    c->add_option("--out", f->out)->required();
    c->add_option("--workers", f->workers)->capture_default_str();
    c->callback([f] { run_synth_images(*f); });
  }
}

}  // namespace fldplus::cli
