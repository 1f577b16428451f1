#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nrdq/denoisers.hpp"
#include "nrdq/features.hpp"
#include "nrdq/forest.hpp"
#include "nrdq/harness/benchmark.hpp"
#include "nrdq/harness/common.hpp"
#include "nrdq/harness/dataset.hpp"
#include "nrdq/harness/evaluation.hpp"
#include "nrdq/harness/plot.hpp"
#include "nrdq/image_io.hpp"
#include "nrdq/tuner.hpp"

namespace fs = std::filesystem;
using namespace nrdq;
using namespace nrdq::harness;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string target = "psnr";
  std::string model;
  std::string config;
  bool quiet = false;

  Target target_value() const { return parse_target(target); }

  Settings settings() const {
    Settings s = config.empty() ? Settings{} : load_settings(config);
    if (seed) {
      s.forest.seed = *seed;
      s.split.seed = *seed;
    }
    s.forest.jobs = jobs;
    return s;
  }

  std::function<void(std::string_view)> logger() const {
    if (quiet) return {};
    return [](std::string_view msg) { fmt::print(stderr, "{}\n", msg); };
  }

  const std::string& require_model() const {
    if (model.empty()) throw CLI::RequiredError("--model");
    return model;
  }
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_file(out, text);
  }
}

std::vector<std::pair<double, double>> read_trace(const fs::path& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty() || lines.front() != "iter,theta,q,grad") {
    throw Error(fmt::format("'{}' is not a tuner trace", path.string()));
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv(lines[i]);
    if (f.size() != 4) throw Error("bad trace row");
    pts.emplace_back(parse_double(f[0]), parse_double(f[1]));
  }
  return pts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-reference denoising quality assessment, ranking and parameter tuning"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides seeds from --config)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--target", g.target, "Quality target")->check(CLI::IsMember({"psnr", "ssim"}));
  app.add_option("--model", g.model, "Model file");
  app.add_option("--config", g.config, "key = value settings file")->check(CLI::ExistingFile);
  app.add_flag("-q,--quiet", g.quiet, "No progress messages");

  // gen
  auto* gen = app.add_subcommand("gen", "Build the benchmark: noisy images, denoised results, labels");
  std::string gen_clean = "data/corpus", gen_out;
  bool gen_intermediate = false;
  int gen_limit = 0;
  gen->add_option("--clean", gen_clean, "Directory of clean images")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--intermediate", gen_intermediate, "Use the intermediate noise levels");
  gen->add_option("--limit", gen_limit, "Use only the first N clean images");

  // features
  auto* feat = app.add_subcommand("features", "Extract the 19 features for every manifest row");
  std::string feat_manifest, feat_out;
  feat->add_option("--manifest", feat_manifest)->required()->check(CLI::ExistingFile);
  feat->add_option("--out", feat_out, "Feature CSV")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a quality model from a feature CSV");
  std::string tr_features, tr_method, tr_noise;
  std::vector<std::string> tr_families;
  tr->add_option("--features", tr_features)->required()->check(CLI::ExistingFile);
  tr->add_option("--method", tr_method, "Train only on this method's results");
  tr->add_option("--noise", tr_noise, "Train only on this noise kind");
  tr->add_option("--families", tr_families, "Restrict splits to these feature families")
      ->delimiter(',');

  // predict
  auto* pr = app.add_subcommand("predict", "Predict quality of denoised results");
  std::string pr_noisy;
  std::vector<std::string> pr_results;
  pr->add_option("--noisy", pr_noisy)->required()->check(CLI::ExistingFile);
  pr->add_option("results", pr_results, "Denoised images")->required()->check(CLI::ExistingFile);

  // rank
  auto* rk = app.add_subcommand("rank", "Order denoised results best first");
  std::string rk_noisy;
  std::vector<std::string> rk_results;
  rk->add_option("--noisy", rk_noisy)->required()->check(CLI::ExistingFile);
  rk->add_option("results", rk_results, "Denoised images")->required()->check(CLI::ExistingFile);

  // tune
  auto* tn = app.add_subcommand("tune", "Tune a denoiser parameter by gradient ascent");
  std::string tn_noisy, tn_method = "nlm", tn_out, tn_trace;
  tn->add_option("--noisy", tn_noisy)->required()->check(CLI::ExistingFile);
  tn->add_option("--method", tn_method)->capture_default_str();
  tn->add_option("--out", tn_out, "Write the tuned result image");
  tn->add_option("--trace", tn_trace, "Write the iterates as CSV");

  // eval-rank
  auto* er = app.add_subcommand("eval-rank", "Kendall tau and regression study over repeated splits");
  std::string er_features, er_out;
  bool er_no_studies = false, er_holdout = false;
  er->add_option("--features", er_features)->required()->check(CLI::ExistingFile);
  er->add_option("--out", er_out, "Report path (default stdout)");
  er->add_flag("--no-studies", er_no_studies, "Skip single-family and leave-one-out models");
  er->add_flag("--holdout-intermediate", er_holdout,
               "Train on benchmark levels, test on intermediate levels");

  // eval-tune
  auto* et = app.add_subcommand("eval-tune", "Compare tuned parameters with the brute-force optimum");
  std::string et_manifest, et_method = "nlm", et_noise = "gaussian", et_out, et_clean, et_traces;
  int et_train_grid = 80, et_brute_grid = 80, et_cases = 25;
  bool et_no_calibrate = false;
  et->add_option("--manifest", et_manifest)->required()->check(CLI::ExistingFile);
  et->add_option("--method", et_method)->capture_default_str();
  et->add_option("--noise", et_noise, "Noise kind of the cases, or 'all'")->capture_default_str();
  et->add_option("--train-grid", et_train_grid)->capture_default_str()->check(CLI::Range(2, 100000));
  et->add_option("--brute-grid", et_brute_grid)->capture_default_str()->check(CLI::PositiveNumber);
  et->add_option("--cases", et_cases)->capture_default_str()->check(CLI::PositiveNumber);
  et->add_option("--clean-dir", et_clean, "Clean images (default: from the manifest)");
  et->add_option("--traces", et_traces, "Directory for per-case trace CSVs");
  et->add_option("--out", et_out, "Report path (default stdout)");
  et->add_flag("--no-calibrate", et_no_calibrate,
               "Keep the configured step and dtheta instead of calibrating on training images");

  // plot
  auto* pl = app.add_subcommand("plot", "SVG charts: scatter, taus, trace");
  std::string pl_kind, pl_input, pl_feature = "ss_97", pl_out;
  pl->add_option("kind", pl_kind)->required()->check(CLI::IsMember({"scatter", "taus", "trace"}));
  pl->add_option("input", pl_input, "Feature CSV, ranking report or trace CSV")
      ->required()
      ->check(CLI::ExistingFile);
  pl->add_option("--feature", pl_feature, "Feature for scatter")->capture_default_str();
  pl->add_option("--out", pl_out, "SVG path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    const auto log = g.logger();
    if (*gen) {
      BenchmarkOptions opt;
      opt.clean_dir = gen_clean;
      opt.out_dir = gen_out;
      opt.seed = g.seed.value_or(1);
      opt.jobs = g.jobs;
      opt.intermediate = gen_intermediate;
      opt.limit = gen_limit;
      opt.log = log;
      const auto r = build_benchmark(opt);
      fmt::print("{} rows ({} generated, {} reused, {} failed) -> {}\n", r.manifest.rows.size(),
                 r.generated, r.reused, r.failures.size(), (fs::path(gen_out) / "manifest.csv").string());
      return r.failures.empty() ? 0 : 2;
    }
    if (*feat) {
      const auto manifest = read_manifest(feat_manifest);
      const auto r = extract_dataset(manifest, fs::path(feat_manifest).parent_path(), g.jobs, log);
      write_feature_csv(r.rows, feat_out);
      fmt::print("{} samples ({} skipped) -> {}\n", r.rows.size(), r.failures.size(), feat_out);
      return r.failures.empty() ? 0 : 2;
    }
    if (*tr) {
      auto rows = read_feature_csv(tr_features);
      RowFilter filter;
      if (!tr_method.empty()) filter.method = parse_method(tr_method);
      if (!tr_noise.empty()) filter.noise_kind = parse_noise_kind(tr_noise);
      rows = filter_rows(rows, filter);
      if (rows.empty()) throw Error("no training rows left after filtering");
      ForestConfig cfg = g.settings().forest;
      for (const auto& name : tr_families) {
        const auto span = family_span(parse_family(name));
        for (std::size_t i = 0; i < span.size; ++i) cfg.allowed_features.push_back(int(span.offset + i));
      }
      const auto samples = to_samples(rows, g.target_value());
      const auto model = train(samples, cfg, g.target_value());
      save_model(model, g.require_model());
      fmt::print("trained {} trees on {} samples, OOB RMSE {:.6g} -> {}\n", model.trees.size(),
                 samples.size(), model.oob_rmse, g.model);
      return 0;
    }
    if (*pr || *rk) {
      const auto model = load_model(g.require_model());
      const auto noisy = load_image(*pr ? pr_noisy : rk_noisy);
      const auto& files = *pr ? pr_results : rk_results;
      std::vector<ResultPair> pairs;
      for (const auto& f : files) pairs.push_back({f, noisy, load_image(f)});
      if (*pr) {
        std::vector<Image> images;
        for (const auto& p : pairs) images.push_back(p.denoised);
        const auto features = extract_features_batch(noisy, images);
        for (std::size_t i = 0; i < files.size(); ++i) {
          fmt::print("{}\t{}\n", files[i], model.predict(features[i]));
        }
      } else {
        for (const auto& r : rank_results(model, pairs)) fmt::print("{}\t{}\n", r.id, r.score);
      }
      return 0;
    }
    if (*tn) {
      const auto model = load_model(g.require_model());
      const Method method = parse_method(tn_method);
      const auto cfg = g.settings().tune_config(TuneConfig::for_method(method, model.target));
      const auto noisy = load_image(tn_noisy);
      const auto trace = tune(noisy, method, model, cfg);
      if (!tn_trace.empty()) write_trace_csv(trace, tn_trace);
      if (!tn_out.empty()) save_image(trace.result, tn_out);
      fmt::print("theta {}\nquality {}\niterations {}\nevaluations {}\nconverged {}\n", trace.theta,
                 trace.q, trace.iterations(), trace.evaluations, trace.converged ? "yes" : "no");
      return 0;
    }
    if (*er) {
      const auto s = g.settings();
      RankingOptions opt;
      opt.target = g.target_value();
      opt.split = s.split;
      opt.forest = s.forest;
      opt.studies = !er_no_studies;
      opt.holdout_intermediate = er_holdout;
      opt.jobs = g.jobs;
      opt.log = log;
      const auto report = run_ranking_eval(read_feature_csv(er_features), opt);
      emit(format_ranking_report(report), er_out);
      return 0;
    }
    if (*et) {
      const auto s = g.settings();
      TuningOptions opt;
      opt.method = parse_method(et_method);
      opt.target = g.target_value();
      if (et_noise == "all") {
        opt.noise_kind.reset();
      } else {
        opt.noise_kind = parse_noise_kind(et_noise);
      }
      opt.train_grid = et_train_grid;
      opt.brute_grid = et_brute_grid;
      opt.max_cases = et_cases;
      opt.seed = g.seed.value_or(1);
      opt.forest = s.forest;
      opt.tune = s.tune_config(TuneConfig::for_method(opt.method, opt.target));
      opt.calibrate = !et_no_calibrate && !s.step && !s.dtheta;
      opt.clean_dir = et_clean;
      opt.trace_dir = et_traces;
      opt.jobs = g.jobs;
      opt.log = log;
      const auto report =
          run_tuning_eval(read_manifest(et_manifest), fs::path(et_manifest).parent_path(), opt);
      emit(format_tuning_report(report), et_out);
      return 0;
    }
    if (*pl) {
      std::string svg;
      if (pl_kind == "scatter") {
        const auto rows = read_feature_csv(pl_input);
        std::size_t idx = kFeatureCount;
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
          if (kFeatureNames[i] == pl_feature) idx = i;
        }
        if (idx == kFeatureCount) throw Error(fmt::format("unknown feature '{}'", pl_feature));
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : rows) pts.emplace_back(r.features[idx], r.label(g.target_value()));
        svg = svg_scatter(pts, {fmt::format("{} vs {}", pl_feature, g.target), pl_feature, g.target});
      } else if (pl_kind == "taus") {
        std::vector<Bar> bars;
        for (const auto& row : parse_ranking_summary(read_file(pl_input))) {
          bars.push_back({row.variant, row.tau_mean, row.tau_std});
        }
        svg = svg_bars(bars, {"Kendall tau per feature set", "", "mean tau"});
      } else {
        svg = svg_line(read_trace(pl_input), {"Tuner trajectory", "iteration", "theta"});
      }
      emit(svg, pl_out);
      return 0;
    }
  } catch (const CLI::RequiredError& e) {
    fmt::print(stderr, "error: {} is required\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 1;
}
