#include "nrdq/harness/evaluation.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "nrdq/image_io.hpp"
#include "nrdq/metrics.hpp"
#include "nrdq/parallel.hpp"
#include "nrdq/rng.hpp"

namespace nrdq::harness {

namespace fs = std::filesystem;

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  if (repetitions <= 0) throw Error("repetitions must be positive");
}

CleanSplit split_by_clean(std::vector<std::string> ids, double train_fraction,
                          std::uint64_t seed, std::uint64_t repetition) {
  std::ranges::sort(ids);
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw Error("a split needs at least 2 clean images");
  Rng rng = Rng(seed).split({repetition});
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[rng.below(i + 1)]);
  }
  const auto n = static_cast<std::int64_t>(ids.size());
  const auto n_train = std::clamp<std::int64_t>(
      std::llround(train_fraction * static_cast<double>(n)), 1, n - 1);
  CleanSplit s;
  s.train.assign(ids.begin(), ids.begin() + n_train);
  s.test.assign(ids.begin() + n_train, ids.end());
  std::ranges::sort(s.train);
  std::ranges::sort(s.test);
  return s;
}

std::vector<std::string> clean_ids(const Dataset& rows) {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.clean_id);
  return {ids.begin(), ids.end()};
}

namespace {

std::vector<int> best_first(const std::vector<double>& scores,
                            const std::vector<std::string>& ids) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  return order;
}

}  // namespace

double ranking_tau(const RankedGroup& g) {
  if (g.ids.size() != g.predicted.size() || g.ids.size() != g.truth.size()) {
    throw Error("ranking_tau: ids, predictions and labels differ in length");
  }
  return kendall_tau({best_first(g.predicted, g.ids), best_first(g.truth, g.ids)});
}

std::vector<Variant> ranking_variants(bool studies) {
  std::vector<Variant> out;
  std::vector<int> all(kFeatureCount);
  std::iota(all.begin(), all.end(), 0);
  out.push_back({"all", all});
  if (!studies) return out;
  for (FeatureFamily f : kAllFamilies) {
    const auto span = family_span(f);
    Variant v{fmt::format("only_{}", to_string(f)), {}};
    for (std::size_t i = 0; i < span.size; ++i) v.features.push_back(int(span.offset + i));
    out.push_back(std::move(v));
  }
  for (FeatureFamily f : kAllFamilies) {
    const auto span = family_span(f);
    Variant v{fmt::format("without_{}", to_string(f)), {}};
    for (int i : all) {
      if (i < int(span.offset) || i >= int(span.offset + span.size)) v.features.push_back(i);
    }
    out.push_back(std::move(v));
  }
  return out;
}

const VariantResult& RankingReport::find(std::string_view name) const {
  for (const auto& v : variants) {
    if (v.variant.name == name) return v;
  }
  throw Error(fmt::format("report has no variant '{}'", name));
}

RankingReport run_ranking_eval(const Dataset& rows, const RankingOptions& opt) {
  opt.split.validate();
  opt.forest.validate();
  if (rows.empty()) throw Error("ranking evaluation needs a nonempty dataset");

  RankingReport report;
  report.options = opt;
  report.samples = rows.size();
  report.dataset_hash = hex64(fnv1a64(format_feature_csv(rows)));
  const auto variants = ranking_variants(opt.studies);
  const auto ids = clean_ids(rows);
  const int reps = opt.split.repetitions;

  struct RepData {
    std::vector<std::size_t> train, test;
    std::vector<std::vector<std::size_t>> groups;  // test rows per noisy image
  };
  std::vector<RepData> reps_data(reps);
  for (int rep = 0; rep < reps; ++rep) {
    const auto split = split_by_clean(ids, opt.split.train_fraction, opt.split.seed, rep);
    const std::set<std::string> train_ids(split.train.begin(), split.train.end());
    auto& d = reps_data[rep];
    std::map<std::string, std::size_t> group_of;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool intermediate = is_intermediate_level(rows[i].noise.kind, rows[i].noise.level);
      if (train_ids.contains(rows[i].clean_id)) {
        if (!(opt.holdout_intermediate && intermediate)) d.train.push_back(i);
      } else if (!opt.holdout_intermediate || intermediate) {
        d.test.push_back(i);
        auto [it, inserted] = group_of.try_emplace(rows[i].noisy_key(), d.groups.size());
        if (inserted) d.groups.emplace_back();
        d.groups[it->second].push_back(i);
      }
    }
    std::erase_if(d.groups, [](const auto& g) { return g.size() < 2; });
    if (d.train.empty() || d.groups.empty()) {
      throw Error(fmt::format("repetition {}: degenerate split (train {}, test groups {})", rep,
                              d.train.size(), d.groups.size()));
    }
    report.test_groups.push_back(static_cast<int>(d.groups.size()));
  }

  report.variants.resize(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    auto& out = report.variants[v];
    out.variant = variants[v];
    out.tau.assign(reps, 0.0);
    out.rmse.assign(reps, 0.0);
    out.rse.assign(reps, 0.0);
    out.oob_rmse.assign(reps, 0.0);
  }

  const std::size_t jobs_total = static_cast<std::size_t>(reps) * variants.size();
  parallel_for(jobs_total, opt.jobs, [&](std::size_t job) {
    const int rep = static_cast<int>(job / variants.size());
    const std::size_t v = job % variants.size();
    const auto& d = reps_data[rep];
    ForestConfig cfg = opt.forest;
    cfg.allowed_features = variants[v].features;
    cfg.seed = Rng(opt.forest.seed).split({static_cast<std::uint64_t>(rep)}).key();
    cfg.jobs = 1;

    std::vector<LabeledSample> train;
    train.reserve(d.train.size());
    for (std::size_t i : d.train) {
      train.push_back({rows[i].features, rows[i].label(opt.target), {}});
    }
    const auto model = nrdq::train(train, cfg, opt.target);

    std::vector<double> pred, truth;
    double tau_sum = 0.0;
    for (const auto& g : d.groups) {
      RankedGroup rg;
      for (std::size_t i : g) {
        rg.ids.push_back(rows[i].denoiser.to_string());
        rg.predicted.push_back(model.predict(rows[i].features));
        rg.truth.push_back(rows[i].label(opt.target));
      }
      tau_sum += ranking_tau(rg);
      pred.insert(pred.end(), rg.predicted.begin(), rg.predicted.end());
      truth.insert(truth.end(), rg.truth.begin(), rg.truth.end());
    }
    auto& out = report.variants[v];
    out.tau[rep] = tau_sum / static_cast<double>(d.groups.size());
    const auto err = rmse_rse(pred, truth);
    out.rmse[rep] = err.rmse;
    out.rse[rep] = err.rse;
    out.oob_rmse[rep] = model.oob_rmse;
    if (opt.log) {
      opt.log(fmt::format("rep {} {}: tau {:.4f} rmse {:.4f}", rep, variants[v].name,
                          out.tau[rep], err.rmse));
    }
  });
  return report;
}

std::string echo_forest(const ForestConfig& c) {
  return fmt::format(
      "n_trees={} max_depth={} min_leaf={} features_per_split={} bootstrap_fraction={} "
      "seed={}",
      c.n_trees, c.max_depth, c.min_leaf, c.features_per_split, c.bootstrap_fraction, c.seed);
}

std::string echo_split(const SplitSpec& s) {
  return fmt::format("train_fraction={} repetitions={} seed={}", s.train_fraction,
                     s.repetitions, s.seed);
}

std::string echo_tune(const TuneConfig& t) {
  return fmt::format("step={} dtheta={} max_iters={} theta_min={} theta_max={}", t.step,
                     t.half_step(), t.max_iters, t.theta_min, t.theta_max);
}

std::string format_ranking_report(const RankingReport& r) {
  const auto& o = r.options;
  std::string config = fmt::format(
      "target {}\nholdout_intermediate {}\nforest {}\nsplit {}\n", to_string(o.target),
      o.holdout_intermediate ? 1 : 0, echo_forest(o.forest), echo_split(o.split));
  std::string out;
  auto sink = std::back_inserter(out);
  fmt::format_to(sink, "# nrdq ranking report\n");
  fmt::format_to(sink, "tool_version {}\n", kToolVersion);
  out += config;
  fmt::format_to(sink, "config_hash {}\n", hex64(fnv1a64(config)));
  fmt::format_to(sink, "dataset_hash {}\n", r.dataset_hash);
  fmt::format_to(sink, "samples {}\n", r.samples);
  fmt::format_to(sink, "[repetitions]\nrep,variant,tau,rmse,rse,oob_rmse,test_groups\n");
  for (std::size_t rep = 0; rep < r.test_groups.size(); ++rep) {
    for (const auto& v : r.variants) {
      fmt::format_to(sink, "{},{},{},{},{},{},{}\n", rep, v.variant.name, v.tau[rep],
                     v.rmse[rep], v.rse[rep], v.oob_rmse[rep], r.test_groups[rep]);
    }
  }
  fmt::format_to(sink,
                 "[summary]\nvariant,tau_mean,tau_std,rmse_mean,rmse_std,rse_mean,rse_std\n");
  for (const auto& v : r.variants) {
    const auto t = mean_std(v.tau), e = mean_std(v.rmse), s = mean_std(v.rse);
    fmt::format_to(sink, "{},{},{},{},{},{},{}\n", v.variant.name, t.mean, t.std, e.mean, e.std,
                   s.mean, s.std);
  }
  return out;
}

std::vector<SummaryRow> parse_ranking_summary(std::string_view report) {
  std::vector<SummaryRow> out;
  bool in_summary = false, header = false;
  for (const auto& line : split_lines(report)) {
    if (line == "[summary]") {
      in_summary = true;
      continue;
    }
    if (!in_summary || line.empty()) continue;
    if (line.front() == '[') break;
    if (!header) {
      header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 7) throw Error("report summary: bad row");
    out.push_back({f[0], parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
                   parse_double(f[4])});
  }
  if (out.empty()) throw Error("report has no [summary] block");
  return out;
}

std::vector<double> oob_curve(std::span<const LabeledSample> samples, ForestConfig cfg,
                              std::span<const int> tree_counts) {
  std::vector<double> out;
  for (int n : tree_counts) {
    cfg.n_trees = n;
    out.push_back(train(samples, cfg).oob_rmse);
  }
  return out;
}

// --- tuning evaluation --------------------------------------------------------

MeanStd TuningReport::gap() const {
  std::vector<double> v;
  for (const auto& c : cases) v.push_back(c.gap);
  return mean_std(v);
}

MeanStd TuningReport::iterations() const {
  std::vector<double> v;
  for (const auto& c : cases) v.push_back(c.iterations);
  return mean_std(v);
}

TuningReport run_tuning_eval(const Manifest& manifest, const fs::path& base,
                             const TuningOptions& opt) {
  if (!theta_range(opt.method)) {
    throw Error(fmt::format("method '{}' has no continuous parameter", to_string(opt.method)));
  }
  if (opt.train_grid < 2 || opt.brute_grid < 1 || opt.max_cases < 1) {
    throw Error("tuning evaluation grids and case count must be positive");
  }
  auto log = [&](std::string_view msg) {
    if (opt.log) opt.log(msg);
  };
  TuningReport report;
  report.options = opt;
  report.tune = opt.tune ? *opt.tune : TuneConfig::for_method(opt.method, opt.target);
  report.tune.validate();

  struct Noisy {
    std::string clean_id;
    NoiseSpec noise;
    std::string path;
  };
  std::vector<Noisy> noisy;
  {
    std::set<std::string> seen;
    for (const auto& r : manifest.rows) {
      if (opt.noise_kind && r.noise.kind != *opt.noise_kind) continue;
      if (seen.insert(r.noisy_path).second) noisy.push_back({r.clean_id, r.noise, r.noisy_path});
    }
  }
  std::vector<std::string> ids;
  for (const auto& n : noisy) ids.push_back(n.clean_id);
  const auto split = split_by_clean(ids, opt.train_fraction, opt.seed, 0);
  const std::set<std::string> train_ids(split.train.begin(), split.train.end());

  std::vector<Noisy> train_set, test_set;
  for (const auto& n : noisy) (train_ids.contains(n.clean_id) ? train_set : test_set).push_back(n);
  {
    Rng rng = Rng(opt.seed).split({1});
    for (std::size_t i = test_set.size(); i > 1; --i) {
      std::swap(test_set[i - 1], test_set[rng.below(i)]);
    }
    if (test_set.size() > static_cast<std::size_t>(opt.max_cases)) test_set.resize(opt.max_cases);
    std::ranges::sort(test_set, [](const Noisy& a, const Noisy& b) { return a.path < b.path; });
  }

  const fs::path clean_dir = opt.clean_dir.empty() ? fs::path(manifest.clean_dir) : opt.clean_dir;
  auto load_pair = [&](const Noisy& n) {
    return std::pair{load_image(base / n.path), load_image(clean_dir / n.clean_id)};
  };

  // Dedicated model: features of this method over a θ grid on the training half.
  const auto grid = theta_grid(opt.method, opt.train_grid);
  std::vector<std::vector<LabeledSample>> per_image(train_set.size());
  parallel_for(train_set.size(), opt.jobs, [&](std::size_t i) {
    const auto [img, clean] = load_pair(train_set[i]);
    std::vector<Image> outs;
    for (double theta : grid) outs.push_back(denoise(img, DenoiserId::with_theta(opt.method, theta)));
    const auto features = extract_features_batch(img, outs);
    for (std::size_t k = 0; k < outs.size(); ++k) {
      per_image[i].push_back({features[k], true_quality(clean, outs[k], opt.target),
                              fmt::format("{}|{}", train_set[i].path, grid[k])});
    }
    log(fmt::format("tune training image {}/{}", i + 1, train_set.size()));
  });
  std::vector<LabeledSample> samples;
  for (const auto& v : per_image) samples.insert(samples.end(), v.begin(), v.end());
  ForestConfig fcfg = opt.forest;
  fcfg.jobs = opt.jobs;
  const QualityModel model = train(samples, fcfg, opt.target);
  report.model_oob_rmse = model.oob_rmse;
  report.training_samples = samples.size();

  if (opt.calibrate) {
    // Cross-fitted: each training image's curve is predicted by a model that
    // never saw its clean image.
    std::map<std::string, int> fold;
    for (std::size_t k = 0; k < split.train.size(); ++k) fold[split.train[k]] = k % 2;
    std::array<QualityModel, 2> fold_models;
    for (int f = 0; f < 2; ++f) {
      std::vector<LabeledSample> part;
      for (std::size_t i = 0; i < per_image.size(); ++i) {
        if (fold[train_set[i].clean_id] != f) {
          part.insert(part.end(), per_image[i].begin(), per_image[i].end());
        }
      }
      fold_models[f] = part.empty() ? model : train(part, fcfg, opt.target);
    }
    std::vector<CalibrationCurve> curves;
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      const auto& m = fold_models[fold[train_set[i].clean_id]];
      CalibrationCurve c;
      for (std::size_t k = 0; k < per_image[i].size(); ++k) {
        c.theta.push_back(grid[k]);
        c.predicted.push_back(m.predict(per_image[i][k].features));
        c.truth.push_back(per_image[i][k].label);
      }
      curves.push_back(std::move(c));
    }
    report.calibration = calibrate_step(curves, report.tune);
    report.tune = report.calibration->config;
    log(fmt::format("calibrated step {} dtheta {} (training gap {:.4f})", report.tune.step,
                    report.tune.dtheta, report.calibration->mean_gap));
  }

  const auto oracle_grid = theta_grid(opt.method, opt.brute_grid);
  report.cases.resize(test_set.size());
  if (!opt.trace_dir.empty()) fs::create_directories(opt.trace_dir);
  parallel_for(test_set.size(), opt.jobs, [&](std::size_t i) {
    const auto& n = test_set[i];
    const auto [img, clean] = load_pair(n);
    const TuneTrace trace = tune(img, opt.method, model, report.tune);
    const auto best = brute_force_optimum(img, clean, opt.method, oracle_grid, opt.target);
    auto& c = report.cases[i];
    c.clean_id = n.clean_id;
    c.noise = n.noise;
    c.theta_star = trace.theta;
    c.theta_gt = best.theta;
    c.gap = tune_quality_gap(img, clean, opt.method, trace.theta, best.theta, opt.target);
    c.iterations = trace.iterations();
    c.evaluations = trace.evaluations;
    c.converged = trace.converged;
    if (!opt.trace_dir.empty()) {
      write_trace_csv(trace, opt.trace_dir / (fs::path(n.path).stem().string() + ".csv"));
    }
    log(fmt::format("tune {} {}: theta* {:.4f} theta_gt {:.4f} gap {:.4f} iters {}", n.clean_id,
                    n.noise.to_string(), c.theta_star, c.theta_gt, c.gap, c.iterations));
  });
  return report;
}

std::string format_tuning_report(const TuningReport& r) {
  const auto& o = r.options;
  std::string config = fmt::format(
      "method {}\ntarget {}\nnoise_kind {}\ntrain_grid {}\nbrute_grid {}\nmax_cases {}\n"
      "train_fraction {}\nseed {}\nforest {}\ncalibrate {}\ntune {}\n",
      to_string(o.method), to_string(o.target),
      o.noise_kind ? std::string(to_string(*o.noise_kind)) : std::string("all"), o.train_grid,
      o.brute_grid, o.max_cases, o.train_fraction, o.seed, echo_forest(o.forest),
      o.calibrate ? 1 : 0, echo_tune(r.tune));
  std::string out;
  auto sink = std::back_inserter(out);
  fmt::format_to(sink, "# nrdq tuning report\n");
  fmt::format_to(sink, "tool_version {}\n", kToolVersion);
  out += config;
  fmt::format_to(sink, "config_hash {}\n", hex64(fnv1a64(config)));
  fmt::format_to(sink, "training_samples {}\nmodel_oob_rmse {}\n", r.training_samples,
                 r.model_oob_rmse);
  if (r.calibration) {
    fmt::format_to(sink, "calibration_train_gap {}\ncalibration_train_iterations {}\n",
                   r.calibration->mean_gap, r.calibration->mean_iterations);
  }
  fmt::format_to(sink,
                 "[cases]\nclean_id,noise,theta_star,theta_gt,diff,iterations,evaluations,"
                 "converged\n");
  for (const auto& c : r.cases) {
    fmt::format_to(sink, "{},{},{},{},{},{},{},{}\n", c.clean_id, c.noise.to_string(),
                   c.theta_star, c.theta_gt, c.gap, c.iterations, c.evaluations,
                   c.converged ? 1 : 0);
  }
  const auto g = r.gap(), it = r.iterations();
  fmt::format_to(sink, "[summary]\ncases {}\ndiff_{}_mean {}\ndiff_{}_std {}\n", r.cases.size(),
                 to_string(o.target), g.mean, to_string(o.target), g.std);
  fmt::format_to(sink, "iterations_mean {}\niterations_std {}\n", it.mean, it.std);
  return out;
}

// --- settings -----------------------------------------------------------------

TuneConfig Settings::tune_config(TuneConfig base) const {
  if (step) base.step = *step;
  if (dtheta) base.dtheta = *dtheta;
  if (theta_min) base.theta_min = *theta_min;
  if (theta_max) base.theta_max = *theta_max;
  if (max_iters) base.max_iters = *max_iters;
  return base;
}

Settings parse_settings(std::string_view text, Settings s) {
  int line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      return v.substr(b, v.find_last_not_of(" \t") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(fmt::format("config line {}: expected key = value", line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "n_trees") s.forest.n_trees = int(parse_int(value));
      else if (key == "max_depth") s.forest.max_depth = int(parse_int(value));
      else if (key == "min_leaf") s.forest.min_leaf = int(parse_int(value));
      else if (key == "features_per_split") s.forest.features_per_split = int(parse_int(value));
      else if (key == "bootstrap_fraction") s.forest.bootstrap_fraction = parse_double(value);
      else if (key == "forest_seed") s.forest.seed = parse_u64(value);
      else if (key == "train_fraction") s.split.train_fraction = parse_double(value);
      else if (key == "repetitions") s.split.repetitions = int(parse_int(value));
      else if (key == "split_seed") s.split.seed = parse_u64(value);
      else if (key == "step") s.step = parse_double(value);
      else if (key == "dtheta") s.dtheta = parse_double(value);
      else if (key == "max_iters") s.max_iters = int(parse_int(value));
      else if (key == "theta_min") s.theta_min = parse_double(value);
      else if (key == "theta_max") s.theta_max = parse_double(value);
      else throw Error(fmt::format("unknown key '{}'", key));
    } catch (const Error& e) {
      throw Error(fmt::format("config line {}: {}", line_no, e.what()));
    }
  }
  s.forest.validate();
  s.split.validate();
  return s;
}

Settings load_settings(const fs::path& path, Settings base) {
  return parse_settings(read_file(path), std::move(base));
}

}  // namespace nrdq::harness
