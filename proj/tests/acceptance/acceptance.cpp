// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Heavy stages (benchmark, features) are cached in --work and
// reused when their inputs are unchanged.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "nrdq/denoisers.hpp"
#include "nrdq/features.hpp"
#include "nrdq/harness/benchmark.hpp"
#include "nrdq/harness/dataset.hpp"
#include "nrdq/harness/evaluation.hpp"
#include "nrdq/image_io.hpp"
#include "nrdq/metrics.hpp"
#include "nrdq/noise.hpp"
#include "nrdq/svd.hpp"
#include "nrdq/tuner.hpp"
#include "oracles.hpp"

using namespace nrdq;
using namespace nrdq::harness;
namespace fs = std::filesystem;

namespace {

// --- pinned tolerances --------------------------------------------------------
constexpr double kPsnrTol = 1e-9;
constexpr double kSsimTol = 1e-6;
constexpr double kRmseTol = 1e-12;  // relative
constexpr int kOracleCases = 100;
constexpr double kMetricSeconds = 60;

constexpr int kFeaturePairs = 200;
constexpr double kFeatureSeconds = 300;

constexpr int kSvdCases = 100;
constexpr double kSvdRelTol = 1e-8;
constexpr double kSvdClosedTol = 1e-8;

constexpr int kSweeps = 50;
constexpr double kSweepPassRate = 0.90;
constexpr double kSrRatio = 3.0;

constexpr double kTauPsnr = 0.55;
constexpr double kTauSsim = 0.45;
constexpr double kLeaveOneOutDrop = 0.05;
constexpr double kRankTrainFraction = 0.5;
constexpr int kRankRepetitions = 10;
constexpr int kOobTrees[] = {10, 25, 50, 100};

constexpr double kStubTheta = 7.0;
constexpr double kTuneGap = 1.0;
constexpr double kTuneIterations = 10.0;
constexpr int kTuneCases = 25;
constexpr int kTuneTrainGrid = 80;

constexpr double kAwgnRel = 0.02;
constexpr double kSaltPepperAbs = 0.005;
constexpr double kPoissonRel = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path corpus;
  fs::path work;
  fs::path cli;
  int jobs = 1;
  std::uint64_t seed = 7;
  bool verbose = false;

  std::optional<Manifest> manifest;
  std::optional<Dataset> dataset;
  std::optional<RankingReport> ranking[2];

  std::function<void(std::string_view)> log() const {
    if (!verbose) return {};
    return [](std::string_view m) { fmt::print(stderr, "  {}\n", m); };
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- pipeline stages ----------------------------------------------------------

const Manifest& benchmark(Context& ctx) {
  if (!ctx.manifest) {
    BenchmarkOptions opt;
    opt.clean_dir = ctx.corpus;
    opt.out_dir = ctx.work / "bench";
    opt.seed = ctx.seed;
    opt.jobs = ctx.jobs;
    opt.log = ctx.log();
    const auto t0 = std::chrono::steady_clock::now();
    auto r = build_benchmark(opt);
    fmt::print(stderr, "  benchmark: {} rows ({} generated, {} reused) in {:.0f}s\n",
               r.manifest.rows.size(), r.generated, r.reused, seconds_since(t0));
    if (!r.failures.empty()) throw Error(fmt::format("{} benchmark rows failed", r.failures.size()));
    ctx.manifest = std::move(r.manifest);
  }
  return *ctx.manifest;
}

const Dataset& dataset(Context& ctx) {
  if (!ctx.dataset) {
    const auto& m = benchmark(ctx);
    const fs::path csv = ctx.work / "features.csv", stamp = ctx.work / "features.stamp";
    const std::string key = fmt::format(
        "{} {}\n", kToolVersion, hex64(fnv1a64(read_file(ctx.work / "bench" / "manifest.csv"))));
    if (fs::exists(csv) && fs::exists(stamp) && read_file(stamp) == key) {
      ctx.dataset = read_feature_csv(csv);
      fmt::print(stderr, "  features: reused {} rows\n", ctx.dataset->size());
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      auto r = extract_dataset(m, ctx.work / "bench", ctx.jobs, ctx.log());
      if (!r.failures.empty()) throw Error(fmt::format("{} feature rows failed", r.failures.size()));
      write_feature_csv(r.rows, csv);
      write_file(stamp, key);
      fmt::print(stderr, "  features: {} rows in {:.0f}s\n", r.rows.size(), seconds_since(t0));
      ctx.dataset = std::move(r.rows);
    }
  }
  return *ctx.dataset;
}

const RankingReport& ranking(Context& ctx, Target target) {
  auto& slot = ctx.ranking[target == Target::psnr ? 0 : 1];
  if (!slot) {
    RankingOptions opt;
    opt.target = target;
    opt.split.train_fraction = kRankTrainFraction;
    opt.split.repetitions = kRankRepetitions;
    opt.jobs = ctx.jobs;
    opt.log = ctx.log();
    const auto t0 = std::chrono::steady_clock::now();
    slot = run_ranking_eval(dataset(ctx), opt);
    write_file(ctx.work / fmt::format("ranking_{}.txt", to_string(target)),
               format_ranking_report(*slot));
    fmt::print(stderr, "  ranking {}: {:.0f}s\n", to_string(target), seconds_since(t0));
  }
  return *slot;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// --- criteria -----------------------------------------------------------------

Outcome metric_oracles(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double psnr_err = 0, ssim_err = 0, rmse_err = 0;
  int tau_mismatch = 0, tau_cases = 0;
  for (int i = 0; i < kOracleCases; ++i) {
    const int w = 11 + static_cast<int>(rng.below(30)), h = 11 + static_cast<int>(rng.below(30));
    const int c = rng.below(3) == 0 ? 3 : 1;
    const Image a = oracle::random_image(rng, w, h, c);
    Image b = a;
    const double amp = 2 + 80 * rng.uniform();
    for (float& v : b.data()) v = static_cast<float>(std::clamp(v + amp * rng.normal(), 0.0, 255.0));
    psnr_err = std::max(psnr_err, std::abs(psnr(a, b) - oracle::psnr(a, b)));
    ssim_err = std::max(ssim_err, std::abs(ssim(a, b) - oracle::ssim(a, b)));

    const int n = 2 + static_cast<int>(rng.below(300));
    std::vector<double> p(n), t(n);
    for (int k = 0; k < n; ++k) {
      t[k] = 20 + 10 * rng.normal();
      p[k] = t[k] + 3 * rng.normal();
    }
    const auto got = rmse_rse(p, t);
    const auto [rmse, rse] = oracle::rmse_rse(p, t);
    rmse_err = std::max({rmse_err, std::abs(got.rmse - rmse) / std::max(1.0, rmse),
                         std::abs(got.rse - rse) / std::max(1.0, rse)});

    const int m = 2 + static_cast<int>(rng.below(80));
    std::vector<int> x(m), y(m);
    std::iota(x.begin(), x.end(), 0);
    std::iota(y.begin(), y.end(), 0);
    for (int k = m; k > 1; --k) std::swap(x[k - 1], x[rng.below(k)]);
    for (int k = m; k > 1; --k) std::swap(y[k - 1], y[rng.below(k)]);
    tau_mismatch += kendall_tau({x, y}) != oracle::kendall_tau(x, y);
    ++tau_cases;
  }
  // every pair of permutations for n <= 5, every permutation against a fixed truth for n = 6
  for (int n = 2; n <= 6; ++n) {
    std::vector<int> base(n);
    std::iota(base.begin(), base.end(), 0);
    std::vector<std::vector<int>> perms;
    auto p = base;
    do perms.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    std::vector<std::vector<int>> truths = perms;
    if (n == 6) truths = {base, std::vector<int>(base.rbegin(), base.rend()), perms[perms.size() / 3]};
    for (const auto& t : truths) {
      for (const auto& q : perms) {
        tau_mismatch += kendall_tau({q, t}) != oracle::kendall_tau(q, t);
        ++tau_cases;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = psnr_err <= kPsnrTol && ssim_err <= kSsimTol && tau_mismatch == 0 &&
                    rmse_err <= kRmseTol && secs < kMetricSeconds;
  return {pass, fmt::format("max |psnr diff| {:.2e}, max |ssim diff| {:.2e}, tau mismatches {}/{}, "
                            "max rel rmse/rse diff {:.2e}, {:.1f}s",
                            psnr_err, ssim_err, tau_mismatch, tau_cases, rmse_err, secs)};
}

Outcome feature_invariants(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  const auto grid = full_grid();
  std::vector<std::string> problems;
  auto fail = [&](int i, const std::string& what) {
    if (problems.size() < 5) problems.push_back(fmt::format("pair {}: {}", i, what));
    else problems.push_back("");
  };
  for (int i = 0; i < kFeaturePairs; ++i) {
    const int w = 30 + static_cast<int>(rng.below(35)), h = 30 + static_cast<int>(rng.below(35));
    const Image clean = oracle::smooth_image(rng, w, h);
    const NoiseKind kind = kNoiseKinds[rng.below(3)];
    const auto levels = noise_levels(kind);
    const Image noisy = apply_noise(clean, {kind, levels[rng.below(3)], rng.next_u64()}).quantized();
    const Image denoised = denoise(noisy, grid[rng.below(grid.size())]).quantized();

    const auto f = extract_features(noisy, denoised);
    const auto self = extract_features(noisy, noisy);
    auto at = [&](const FeatureVector& v, FeatureFamily fam, std::size_t k) {
      return v[family_span(fam).offset + k];
    };
    for (double v : f) {
      if (!std::isfinite(v)) fail(i, "non-finite feature");
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double s = at(f, FeatureFamily::ss, k);
      if (!(s > 0.0 && s <= 1.0)) fail(i, fmt::format("ss {} out of (0,1]", s));
      if (k > 0 && s < at(f, FeatureFamily::ss, k - 1)) fail(i, "ss not monotone in alpha");
      if (at(f, FeatureFamily::sr, k) < 0.0) fail(i, "sr negative");
      if (at(self, FeatureFamily::sr, k) != 0.0) fail(i, "sr(a,a) != 0");
      const double sc = at(f, FeatureFamily::sc, k);
      if (!(sc >= -1.0 && sc <= 1.0)) fail(i, fmt::format("sc {} out of [-1,1]", sc));
      if (at(self, FeatureFamily::sc, k) != 0.0) fail(i, "sc degenerate case != 0");
      // presets come in (lambda 0.5, lambda 1) pairs per norm choice
      if (at(f, FeatureFamily::vr, 2 * k + 1) < at(f, FeatureFamily::vr, 2 * k)) {
        fail(i, "vr(lambda=1) < vr(lambda=0.5)");
      }
    }
    const double gh = at(f, FeatureFamily::gh, 0);
    if (!(gh >= 0.0 && gh <= 2.0)) fail(i, fmt::format("gh {} out of [0,2]", gh));
    if (f.size() != 19) fail(i, "length != 19");

    const Image rn = Image::merge(std::vector<Image>{noisy, noisy, noisy});
    const Image rd = Image::merge(std::vector<Image>{denoised, denoised, denoised});
    if (extract_features(rn, rd) != f) fail(i, "rgb replica differs from gray");
  }
  const double secs = seconds_since(t0);
  if (secs >= kFeatureSeconds) problems.push_back("too slow");
  std::string detail = fmt::format("{} pairs, {} violations, {:.1f}s", kFeaturePairs,
                                   problems.size(), secs);
  for (const auto& p : problems) {
    if (!p.empty()) detail += "; " + p;
  }
  return {problems.empty(), detail};
}

Outcome svd_kernel(Context&) {
  Rng rng(303);
  double frob = 0.0, closed = 0.0;
  for (int i = 0; i < kSvdCases; ++i) {
    const int w = 15 * (1 + static_cast<int>(rng.below(5))) + static_cast<int>(rng.below(15));
    const int h = 15 * (1 + static_cast<int>(rng.below(5))) + static_cast<int>(rng.below(15));
    const Image img = i % 2 ? oracle::random_image(rng, w, h) : oracle::smooth_image(rng, w, h);
    const auto m = extract_patches(img, 15);
    const auto s = singular_values(m);
    double a = 0.0, b = 0.0;
    for (double v : m.values) a += v * v;
    for (double v : s.values) b += v * v;
    frob = std::max(frob, std::abs(a - b) / a);
  }
  for (int i = 0; i < 20; ++i) {
    const int rows = 2 + static_cast<int>(rng.below(40)), cols = 2 + static_cast<int>(rng.below(40));
    std::vector<double> u(rows), v(cols), a(static_cast<std::size_t>(rows) * cols);
    for (double& x : u) x = rng.normal();
    for (double& x : v) x = rng.normal();
    double nu = 0, nv = 0;
    for (double x : u) nu += x * x;
    for (double x : v) nv += x * x;
    for (int j = 0; j < cols; ++j) {
      for (int r = 0; r < rows; ++r) a[j * rows + r] = u[r] * v[j];
    }
    const auto s = singular_values(a, rows, cols);
    const double top = std::sqrt(nu * nv);
    closed = std::max(closed, std::abs(s.values[0] - top) / top);
    for (std::size_t k = 1; k < s.values.size(); ++k) closed = std::max(closed, s.values[k] / top);

    const int n = 2 + static_cast<int>(rng.below(10));
    std::vector<double> diag(n), d(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
      diag[k] = 0.5 + 10 * rng.uniform();
      d[k * n + k] = k % 2 ? -diag[k] : diag[k];
    }
    std::ranges::sort(diag, std::greater<>());
    const auto sd = singular_values(d, n, n);
    for (int k = 0; k < n; ++k) closed = std::max(closed, std::abs(sd.values[k] - diag[k]));
  }
  {
    const auto s = singular_values(std::vector<double>{3, 0, 0, 2}, 2, 2);
    closed = std::max({closed, std::abs(s.values[0] - 3), std::abs(s.values[1] - 2)});
  }
  return {frob <= kSvdRelTol && closed <= kSvdClosedTol,
          fmt::format("max rel Frobenius gap {:.2e} over {} patch matrices, max closed-form error {:.2e}",
                      frob, kSvdCases, closed)};
}

Outcome figure_patterns(Context& ctx) {
  const auto files = list_images(ctx.corpus);
  if (files.empty()) return {false, "empty corpus"};
  Rng rng(404);
  const std::vector<double> sigmas = {0.5, 0.7, 1.0, 1.3, 1.7, 2.2, 3.0, 4.0};
  int ss_ok = 0, sgm_ok = 0, sr_ok = 0;
  for (int i = 0; i < kSweeps; ++i) {
    const Image clean = to_grayscale(load_image(files[rng.below(files.size())]));
    const double level = 10 + 20 * rng.uniform();
    const Image noisy = add_gaussian(clean, level, rng.next_u64()).quantized();

    // under-smoothed, PSNR-optimal, over-smoothed
    double best = -1.0, best_sigma = sigmas[0];
    for (double s : sigmas) {
      const double p = psnr(clean, gaussian_filter(noisy, s).quantized());
      if (p > best) {
        best = p;
        best_sigma = s;
      }
    }
    const auto under = feature_ss(gaussian_filter(noisy, 0.3).quantized());
    const auto opt = feature_ss(gaussian_filter(noisy, best_sigma).quantized());
    const auto over = feature_ss(gaussian_filter(noisy, 2.5 * best_sigma).quantized());
    ss_ok += under[0] > opt[0] && opt[0] > over[0];

    // increasing smoothing strength
    const auto g1 = feature_sgm(gaussian_filter(noisy, 0.5));
    const auto g2 = feature_sgm(gaussian_filter(noisy, 1.0));
    const auto g3 = feature_sgm(gaussian_filter(noisy, 2.0));
    sgm_ok += g1[1] > g2[1] && g2[1] > g3[1];

    // edge-shaped residual vs i.i.d. residual of the same energy
    const auto edges = gradient_field(clean);
    double energy = 0.0;
    for (float m : edges.magnitude) energy += double(m) * m;
    const double sd = std::sqrt(energy / static_cast<double>(edges.magnitude.size()));
    Image structured = noisy, iid = noisy;
    for (std::size_t k = 0; k < noisy.size(); ++k) {
      structured.data()[k] += edges.magnitude[k];
      iid.data()[k] += static_cast<float>(sd * rng.normal());
    }
    sr_ok += feature_sr(noisy, structured)[2] > kSrRatio * feature_sr(noisy, iid)[2];
  }
  const int need = static_cast<int>(std::ceil(kSweepPassRate * kSweeps));
  return {ss_ok >= need && sgm_ok >= need && sr_ok >= need,
          fmt::format("SS under>opt>over {}/{}, SGM decreasing {}/{}, SR structured > {}x iid {}/{} "
                      "(need {})",
                      ss_ok, kSweeps, sgm_ok, kSweeps, kSrRatio, sr_ok, kSweeps, need)};
}

Outcome ranking_study(Context& ctx) {
  const auto n_clean = clean_ids(dataset(ctx)).size();
  bool pass = n_clean >= 30;
  std::string detail = fmt::format("{} clean images, {} samples", n_clean, dataset(ctx).size());
  for (Target t : {Target::psnr, Target::ssim}) {
    const auto& r = ranking(ctx, t);
    const double all = mean_of(r.find("all").tau);
    const double floor = t == Target::psnr ? kTauPsnr : kTauSsim;
    double best_single = -2.0, worst_drop = -2.0;
    std::string best_name, drop_name;
    for (auto fam : kAllFamilies) {
      const double only = mean_of(r.find(fmt::format("only_{}", to_string(fam))).tau);
      const double without = mean_of(r.find(fmt::format("without_{}", to_string(fam))).tau);
      if (only > best_single) {
        best_single = only;
        best_name = to_string(fam);
      }
      if (all - without > worst_drop) {
        worst_drop = all - without;
        drop_name = to_string(fam);
      }
    }
    const bool ok = all >= floor && all > best_single && worst_drop <= kLeaveOneOutDrop;
    pass = pass && ok;
    detail += fmt::format("; {}: tau {:.3f} (>= {}), best single {} {:.3f}, worst drop without_{} {:.3f}",
                          to_string(t), all, floor, best_name, best_single, drop_name, worst_drop);
  }
  return {pass, detail};
}

Outcome regression_study(Context& ctx) {
  bool pass = true;
  std::string detail;
  for (Target t : {Target::psnr, Target::ssim}) {
    const auto& r = ranking(ctx, t);
    const double all = mean_of(r.find("all").rmse);
    double best_single = 1e300;
    std::string best_name;
    for (auto fam : kAllFamilies) {
      const double v = mean_of(r.find(fmt::format("only_{}", to_string(fam))).rmse);
      if (v < best_single) {
        best_single = v;
        best_name = to_string(fam);
      }
    }
    pass = pass && all < best_single;
    detail += fmt::format("{}: rmse {:.4f} vs best single {} {:.4f}; ", to_string(t), all, best_name,
                          best_single);
  }
  const auto samples = to_samples(dataset(ctx), Target::psnr);
  ForestConfig cfg;
  cfg.jobs = ctx.jobs;
  const auto curve = oob_curve(samples, cfg, kOobTrees);
  detail += "oob rmse";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    detail += fmt::format(" {}:{:.4f}", kOobTrees[i], curve[i]);
    if (i > 0 && curve[i] > curve[i - 1]) pass = false;
  }
  return {pass, detail};
}

Outcome tuner(Context& ctx) {
  TuneConfig stub;
  stub.theta_min = 0.0;
  stub.theta_max = 16.0;
  stub.step = 0.3;
  stub.dtheta = 0.5;
  stub.max_iters = 20;
  auto q = [](double x) { return -(x - kStubTheta) * (x - kStubTheta); };
  const auto a = tune(q, stub), b = tune(q, stub);
  const bool stub_ok = std::abs(a.theta - kStubTheta) <= stub.dtheta && a.theta == b.theta &&
                       a.iterations() == b.iterations() && a.evaluations == 2 * a.iterations() + 1;

  TuningOptions opt;
  opt.train_grid = kTuneTrainGrid;
  opt.max_cases = kTuneCases;
  opt.forest.jobs = ctx.jobs;
  opt.trace_dir = ctx.work / "traces";
  opt.jobs = ctx.jobs;
  opt.log = ctx.log();
  benchmark(ctx);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_tuning_eval(*ctx.manifest, ctx.work / "bench", opt);
  write_file(ctx.work / "tuning.txt", format_tuning_report(r));
  fmt::print(stderr, "  tuning: {:.0f}s\n", seconds_since(t0));
  bool counts = true;
  for (const auto& c : r.cases) counts = counts && c.evaluations == 2 * c.iterations + 1;
  const auto gap = r.gap(), it = r.iterations();
  const bool pass = stub_ok && r.cases.size() == static_cast<std::size_t>(kTuneCases) &&
                    gap.mean <= kTuneGap && it.mean <= kTuneIterations && counts;
  return {pass, fmt::format("stub theta* {:.4f} in {} iterations ({}); {} NLM cases: Diff_PSNR "
                            "{:.3f} +- {:.3f} dB (<= {}), iterations {:.2f} +- {:.2f} (<= {}), "
                            "evaluations == 2 iters + 1: {}; step {} dtheta {:.4f}",
                            a.theta, a.iterations(), stub_ok ? "ok" : "bad", r.cases.size(),
                            gap.mean, gap.std, kTuneGap, it.mean, it.std, kTuneIterations,
                            counts ? "yes" : "no", r.tune.step, r.tune.half_step())};
}

int run_cli(const Context& ctx, const std::string& args) {
  const std::string cmd = fmt::format("{} {} > {} 2>&1", ctx.cli.string(), args,
                                      (ctx.work / "det" / "cli.log").string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::pair<std::string, std::uint64_t>> tree_hashes(const fs::path& root) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), root).string(), hash_file(e.path()));
  }
  std::ranges::sort(out);
  return out;
}

Outcome determinism(Context& ctx) {
  const fs::path d = ctx.work / "det";
  fs::remove_all(d);
  fs::create_directories(d);
  write_file(d / "forest.cfg", "n_trees = 30\n");
  const std::string corpus = ctx.corpus.string();
  int bad_exit = 0;
  for (const char* run : {"a", "b"}) {
    bad_exit += run_cli(ctx, fmt::format("-q --seed 7 gen --clean {} --limit 3 --out {}", corpus,
                                         (d / run).string())) != 0;
  }
  const bool trees_equal = tree_hashes(d / "a") == tree_hashes(d / "b");
  const bool manifests_equal = read_file(d / "a" / "manifest.csv") == read_file(d / "b" / "manifest.csv");
  bad_exit += run_cli(ctx, fmt::format("-q features --manifest {} --out {}",
                                       (d / "a" / "manifest.csv").string(), (d / "f.csv").string())) != 0;
  for (const char* m : {"m1.txt", "m2.txt"}) {
    bad_exit += run_cli(ctx, fmt::format("-q --seed 11 --config {} --model {} train --features {}",
                                         (d / "forest.cfg").string(), (d / m).string(),
                                         (d / "f.csv").string())) != 0;
  }
  const bool models_equal = read_file(d / "m1.txt") == read_file(d / "m2.txt");
  const auto manifest = read_manifest(d / "a" / "manifest.csv");
  const std::string noisy = (d / "a" / manifest.rows.front().noisy_path).string();
  for (const char* t : {"t1", "t2"}) {
    bad_exit += run_cli(ctx, fmt::format("--model {} tune --noisy {} --trace {} --out {}",
                                         (d / "m1.txt").string(), noisy,
                                         (d / (std::string(t) + ".csv")).string(),
                                         (d / (std::string(t) + ".png")).string())) != 0;
  }
  const bool traces_equal = read_file(d / "t1.csv") == read_file(d / "t2.csv") &&
                            hash_file(d / "t1.png") == hash_file(d / "t2.png");
  const bool pass = bad_exit == 0 && trees_equal && manifests_equal && models_equal && traces_equal;
  return {pass, fmt::format("gen trees {}, manifests {}, models {}, traces {}, failed commands {}",
                            trees_equal ? "identical" : "differ",
                            manifests_equal ? "identical" : "differ",
                            models_equal ? "identical" : "differ",
                            traces_equal ? "identical" : "differ", bad_exit)};
}

Outcome noise_generators(Context&) {
  std::string detail;
  bool pass = true;
  for (double sigma : {10.0, 20.0, 30.0}) {
    // clipped samples are dropped
    const Image noisy = add_gaussian(Image(512, 512, 1, 128.0f), sigma, 5 + sigma);
    double s = 0, ss = 0;
    std::size_t n = 0;
    for (float v : noisy.data()) {
      if (v <= 0.0f || v >= 255.0f) continue;
      s += v - 128.0;
      ss += (v - 128.0) * (v - 128.0);
      ++n;
    }
    const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
    const double rel = std::abs(sd - sigma) / sigma;
    pass = pass && rel <= kAwgnRel && n >= 100000;
    detail += fmt::format("awgn {} sd {:.3f} ({:.2f}%); ", sigma, sd, 100 * rel);
  }
  for (double d : {0.1, 0.2, 0.3}) {
    const Image noisy = add_salt_pepper(Image(512, 512, 1, 128.0f), d, 9);
    std::size_t hit = 0;
    bool values_ok = true;
    for (float v : noisy.data()) {
      if (v != 128.0f) {
        ++hit;
        values_ok = values_ok && (v == 0.0f || v == 255.0f);
      }
    }
    const double frac = static_cast<double>(hit) / noisy.size();
    pass = pass && values_ok && std::abs(frac - d) <= kSaltPepperAbs;
    detail += fmt::format("s&p {} fraction {:.4f}; ", d, frac);
  }
  {
    Rng rng(13);
    double s = 0, ss = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(sample_poisson(rng, 100.0));
      s += x;
      ss += x * x;
    }
    const double mean = s / n, var = (ss - n * mean * mean) / (n - 1);
    // pixel value 100 at k = 0.1 is a rate-1000 draw scaled by k
    const Image noisy = add_poisson(Image(512, 512, 1, 100.0f), 0.1, 17);
    double ps = 0, pss = 0;
    for (float v : noisy.data()) {
      ps += v;
      pss += double(v) * v;
    }
    const double pn = static_cast<double>(noisy.size());
    const double pmean = ps / pn, pvar = (pss - pn * pmean * pmean) / (pn - 1);
    const bool ok = std::abs(mean - 100) / 100 <= kPoissonRel && std::abs(var - 100) / 100 <= kPoissonRel &&
                    std::abs(pmean - 100) / 100 <= kPoissonRel && std::abs(pvar - 10) / 10 <= kPoissonRel;
    pass = pass && ok;
    detail += fmt::format("poisson rate 100 mean {:.3f} var {:.3f}; image k=0.1 mean {:.3f} var {:.3f}",
                          mean, var, pmean, pvar);
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Context ctx;
  std::string corpus = NRDQ_CORPUS, work, cli = NRDQ_CLI;
  std::vector<int> only;
  app.add_option("--corpus", corpus)->capture_default_str();
  app.add_option("--work", work, "Cache directory (default: <tmp>/nrdq_acceptance)");
  app.add_option("--cli", cli)->capture_default_str();
  app.add_option("--jobs", ctx.jobs)->check(CLI::PositiveNumber);
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_flag("-v,--verbose", ctx.verbose);
  CLI11_PARSE(app, argc, argv);
  ctx.corpus = corpus;
  ctx.cli = cli;
  ctx.work = work.empty() ? fs::temp_directory_path() / "nrdq_acceptance" : fs::path(work);
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, Outcome (*)(Context&)>> criteria = {
      {"metric oracles", metric_oracles},   {"feature invariants", feature_invariants},
      {"svd kernel", svd_kernel},           {"figure patterns", figure_patterns},
      {"ranking study", ranking_study},     {"regression validation", regression_study},
      {"tuner", tuner},                     {"determinism", determinism},
      {"noise generators", noise_generators}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::ranges::find(only, id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, fmt::format("error: {}", e.what())};
    }
    failed += !o.pass;
    fmt::print("{} {} {}: {}\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
