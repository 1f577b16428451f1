#include "nrdq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace nrdq {

std::vector<double> SsimConfig::taps() const {
  if (size <= 0) throw Error("SSIM window size must be positive");
  std::vector<double> t(static_cast<std::size_t>(size));
  if (window == Window::uniform) {
    std::ranges::fill(t, 1.0 / size);
    return t;
  }
  const double center = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    t[i] = std::exp(-d * d / (2.0 * gaussian_sigma * gaussian_sigma));
    sum += t[i];
  }
  for (double& v : t) v /= sum;
  return t;
}

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  auto x = a.data();
  auto y = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = double(x[i]) - y[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(x.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

// Valid-mode separable filtering of a plane with the same taps on both axes.
std::vector<double> filter_valid(std::span<const double> src, int w, int h,
                                 std::span<const double> taps) {
  const int k = static_cast<int>(taps.size());
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    const double* in = src.data() + static_cast<std::size_t>(y) * w;
    double* out = rows.data() + static_cast<std::size_t>(y) * ow;
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += taps[i] * in[x + i];
      out[x] = acc;
    }
  }
  std::vector<double> result(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        acc += taps[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      }
      result[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return result;
}

}  // namespace

SsimMap ssim_map(const Image& a, const Image& b, const SsimConfig& cfg) {
  require_gray(a, "ssim_map");
  require_same_shape(a, b, "ssim_map");
  const int w = a.width(), h = a.height(), k = cfg.size;
  if (w < k || h < k) {
    throw Error(fmt::format("image {}x{} smaller than SSIM window {}", w, h, k));
  }
  const auto taps = cfg.taps();
  const std::size_t n = a.plane_size();
  std::vector<double> xa(n), xb(n), aa(n), bb(n), ab(n);
  auto pa = a.plane(0), pb = b.plane(0);
  for (std::size_t i = 0; i < n; ++i) {
    xa[i] = pa[i];
    xb[i] = pb[i];
    aa[i] = xa[i] * xa[i];
    bb[i] = xb[i] * xb[i];
    ab[i] = xa[i] * xb[i];
  }
  const auto mu_a = filter_valid(xa, w, h, taps);
  const auto mu_b = filter_valid(xb, w, h, taps);
  const auto e_aa = filter_valid(aa, w, h, taps);
  const auto e_bb = filter_valid(bb, w, h, taps);
  const auto e_ab = filter_valid(ab, w, h, taps);

  SsimMap map;
  map.width = w - k + 1;
  map.height = h - k + 1;
  map.values.resize(mu_a.size());
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    map.values[i] = ((2.0 * ma * mb + cfg.c1) * (2.0 * cov + cfg.c2)) /
                    ((ma * ma + mb * mb + cfg.c1) * (va + vb + cfg.c2));
  }
  return map;
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const auto cfg = SsimConfig::gaussian_11();
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    const auto map = ssim_map(a.channel(c), b.channel(c), cfg);
    total += std::accumulate(map.values.begin(), map.values.end(), 0.0) /
             static_cast<double>(map.values.size());
  }
  return total / a.channels();
}

std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error("pearson needs two equally sized, nonempty series");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::uint64_t count_inversions(std::vector<int>& v, std::vector<int>& scratch,
                               std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, scratch, lo, mid) +
                      count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      scratch[out++] = v[i++];
    } else {
      inv += mid - i;
      scratch[out++] = v[j++];
    }
  }
  while (i < mid) scratch[out++] = v[i++];
  while (j < hi) scratch[out++] = v[j++];
  std::copy(scratch.begin() + lo, scratch.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

double kendall_tau(const RankingPair& r) {
  const std::size_t n = r.truth.size();
  if (r.predicted.size() != n) throw Error("kendall_tau: length mismatch");
  if (n < 2) throw Error("kendall_tau needs at least two items");

  std::vector<int> sorted = r.truth;
  std::ranges::sort(sorted);
  if (std::ranges::adjacent_find(sorted) != sorted.end()) {
    throw Error("kendall_tau: truth ranking repeats an id");
  }
  auto rank_of = [&](int id) {
    auto it = std::ranges::lower_bound(sorted, id);
    if (it == sorted.end() || *it != id) {
      throw Error("kendall_tau: rankings are not permutations of one id set");
    }
    return static_cast<std::size_t>(it - sorted.begin());
  };
  std::vector<int> truth_pos(n);
  for (std::size_t i = 0; i < n; ++i) truth_pos[rank_of(r.truth[i])] = static_cast<int>(i);

  std::vector<int> seq(n);
  std::vector<char> seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = rank_of(r.predicted[i]);
    if (seen[k]) throw Error("kendall_tau: predicted ranking repeats an id");
    seen[k] = 1;
    seq[i] = truth_pos[k];
  }
  std::vector<int> scratch(n);
  const auto discordant = static_cast<double>(count_inversions(seq, scratch, 0, n));
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return (pairs - 2.0 * discordant) / pairs;
}

RegressionError rmse_rse(std::span<const double> predicted,
                         std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw Error("rmse_rse: length mismatch");
  if (truth.empty()) throw Error("rmse_rse: empty input");
  const double n = static_cast<double>(truth.size());
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = predicted[i] - truth[i];
    const double d = truth[i] - mean;
    sse += e * e;
    sst += d * d;
  }
  if (sst == 0.0) throw Error("rmse_rse: relative error undefined for constant truth");
  return {std::sqrt(sse / n), sse / sst};
}

}  // namespace nrdq
