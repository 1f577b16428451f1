#include "nrdq/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "nrdq/parallel.hpp"
#include "nrdq/rng.hpp"

namespace nrdq {

std::string_view to_string(Target t) { return t == Target::psnr ? "psnr" : "ssim"; }

Target parse_target(std::string_view text) {
  if (text == "psnr") return Target::psnr;
  if (text == "ssim") return Target::ssim;
  throw Error(fmt::format("unknown target '{}' (expected psnr or ssim)", text));
}

void ForestConfig::validate() const {
  if (n_trees <= 0 || max_depth <= 0 || min_leaf <= 0 || features_per_split <= 0) {
    throw Error("forest parameters must be positive");
  }
  if (features_per_split > static_cast<int>(kFeatureCount)) {
    throw Error("features_per_split cannot exceed the feature count");
  }
  if (!(bootstrap_fraction > 0.0)) throw Error("bootstrap fraction must be positive");
  for (int f : allowed_features) {
    if (f < 0 || f >= static_cast<int>(kFeatureCount)) {
      throw Error(fmt::format("allowed feature index {} out of range", f));
    }
  }
}

std::vector<int> ForestConfig::split_candidates() const {
  std::vector<int> out = allowed_features;
  if (out.empty()) {
    out.resize(kFeatureCount);
    std::iota(out.begin(), out.end(), 0);
  }
  std::ranges::sort(out);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double Tree::predict(const FeatureVector& f) const {
  int i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = f[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].value;
}

int Tree::depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (nodes[i].feature >= 0) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

double QualityModel::predict(const FeatureVector& f) const {
  if (trees.empty()) throw Error("model has no trees");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(f);
  return std::clamp(sum / static_cast<double>(trees.size()), label_min, label_max);
}

double QualityModel::predict(std::span<const double> f) const {
  if (f.size() != kFeatureCount) {
    throw Error(fmt::format("feature vector has {} entries, expected {}", f.size(),
                            kFeatureCount));
  }
  FeatureVector v{};
  std::ranges::copy(f, v.begin());
  return predict(v);
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const LabeledSample> samples, const ForestConfig& cfg,
              const std::vector<int>& candidates, Rng rng)
      : samples_(samples), cfg_(cfg), candidates_(candidates), rng_(rng) {}

  Tree build(std::vector<std::size_t> indices,
             std::array<double, kFeatureCount>& gains) {
    Tree tree;
    struct Pending {
      int node;
      int depth;
      std::vector<std::size_t> idx;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, std::move(indices)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      const double mean = mean_label(job.idx);
      tree.nodes[job.node].value = mean;
      if (job.depth >= cfg_.max_depth ||
          job.idx.size() < 2 * static_cast<std::size_t>(cfg_.min_leaf)) {
        continue;
      }
      const Split split = best_split(job.idx, mean);
      if (split.feature < 0) continue;

      gains[split.feature] += split.gain;
      std::vector<std::size_t> left, right;
      for (std::size_t i : job.idx) {
        (samples_[i].features[split.feature] <= split.threshold ? left : right).push_back(i);
      }
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[job.node];
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = l;
      node.right = l + 1;
      // right first so the left subtree is expanded first
      stack.push_back({l + 1, job.depth + 1, std::move(right)});
      stack.push_back({l, job.depth + 1, std::move(left)});
    }
    return tree;
  }

 private:
  double mean_label(const std::vector<std::size_t>& idx) const {
    double s = 0.0;
    for (std::size_t i : idx) s += samples_[i].label;
    return s / static_cast<double>(idx.size());
  }

  std::vector<int> draw_features() {
    std::vector<int> pool = candidates_;
    const std::size_t m = std::min<std::size_t>(pool.size(), cfg_.features_per_split);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + rng_.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    std::ranges::sort(pool);
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& idx, double mean) {
    const std::size_t n = idx.size();
    const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_leaf);
    double total = 0.0, sse = 0.0;
    for (std::size_t i : idx) {
      const double d = samples_[i].label - mean;
      total += d;
      sse += d * d;
    }
    Split best;
    if (sse <= 0.0) return best;
    const double parent_term = total * total / static_cast<double>(n);

    // Gains within round-off of each other count as ties, so the lowest
    // feature index and threshold win regardless of summation order.
    const double margin = 1e-12 * sse;
    std::vector<std::pair<double, std::size_t>> order(n);
    for (int f : draw_features()) {
      for (std::size_t k = 0; k < n; ++k) {
        order[k] = {samples_[idx[k]].features[f], idx[k]};
      }
      std::ranges::sort(order);
      double left_sum = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left_sum += samples_[order[k].second].label - mean;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < min_leaf) continue;
        if (nr < min_leaf) break;
        const double a = order[k].first, b = order[k + 1].first;
        if (!(a < b)) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) -
                            parent_term;
        if (gain > best.gain + margin) {
          double threshold = a + 0.5 * (b - a);
          if (!(threshold < b)) threshold = a;
          best = {f, threshold, gain, nl};
        }
      }
    }
    if (best.gain <= margin) best.feature = -1;
    return best;
  }

  std::span<const LabeledSample> samples_;
  const ForestConfig& cfg_;
  const std::vector<int>& candidates_;
  Rng rng_;
};

}  // namespace

QualityModel train(std::span<const LabeledSample> samples, const ForestConfig& cfg,
                   Target target) {
  cfg.validate();
  if (samples.empty()) throw Error("cannot train on an empty sample set");
  for (const auto& s : samples) {
    if (!std::isfinite(s.label)) throw Error(fmt::format("non-finite label for '{}'", s.key));
    for (double v : s.features) {
      if (!std::isfinite(v)) throw Error(fmt::format("non-finite feature for '{}'", s.key));
    }
  }

  QualityModel model;
  model.target = target;
  model.config = cfg;
  model.config.allowed_features = cfg.split_candidates();
  if (model.config.allowed_features.size() == kFeatureCount) {
    model.config.allowed_features.clear();
  }
  const auto [lo, hi] = std::ranges::minmax(
      samples, {}, [](const LabeledSample& s) { return s.label; });
  model.label_min = lo.label;
  model.label_max = hi.label;

  const std::size_t n = samples.size();
  const auto draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(cfg.bootstrap_fraction * n)));
  const auto candidates = cfg.split_candidates();
  const Rng master(cfg.seed);

  model.trees.resize(cfg.n_trees);
  std::vector<std::vector<unsigned>> in_bag(cfg.n_trees);
  std::vector<std::array<double, kFeatureCount>> gains(cfg.n_trees);
  parallel_for(static_cast<std::size_t>(cfg.n_trees), cfg.jobs, [&](std::size_t t) {
    Rng rng = master.split({t});
    Rng bootstrap_rng = rng.split({0});
    std::vector<std::size_t> idx(draws);
    in_bag[t].assign(n, 0);
    for (auto& i : idx) {
      i = bootstrap_rng.below(n);
      ++in_bag[t][i];
    }
    std::ranges::sort(idx);
    gains[t].fill(0.0);
    TreeBuilder builder(samples, cfg, candidates, rng.split({1}));
    model.trees[t] = builder.build(std::move(idx), gains[t]);
  });

  model.split_gain.fill(0.0);
  for (const auto& g : gains) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) model.split_gain[f] += g[f];
  }

  double sse = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int votes = 0;
    for (int t = 0; t < cfg.n_trees; ++t) {
      if (in_bag[t][i] == 0) {
        sum += model.trees[t].predict(samples[i].features);
        ++votes;
      }
    }
    if (votes == 0) continue;
    const double e = sum / votes - samples[i].label;
    sse += e * e;
    ++counted;
  }
  model.oob_count = counted;
  model.oob_rmse = counted > 0 ? std::sqrt(sse / counted) : 0.0;
  return model;
}

std::array<double, kFeatureCount> feature_importance(const QualityModel& model) {
  std::array<double, kFeatureCount> out{};
  const double total = std::accumulate(model.split_gain.begin(), model.split_gain.end(), 0.0);
  if (total <= 0.0) {
    out.fill(1.0 / kFeatureCount);
    return out;
  }
  for (std::size_t f = 0; f < kFeatureCount; ++f) out[f] = model.split_gain[f] / total;
  return out;
}

// --- serialization ----------------------------------------------------------

std::string serialize_model(const QualityModel& model) {
  std::string out;
  auto sink = std::back_inserter(out);
  const auto& c = model.config;
  fmt::format_to(sink, "nrdq-quality-model {}\n", QualityModel::kFormatVersion);
  fmt::format_to(sink, "target {}\n", to_string(model.target));
  fmt::format_to(sink, "n_trees {}\n", c.n_trees);
  fmt::format_to(sink, "max_depth {}\n", c.max_depth);
  fmt::format_to(sink, "min_leaf {}\n", c.min_leaf);
  fmt::format_to(sink, "features_per_split {}\n", c.features_per_split);
  fmt::format_to(sink, "bootstrap_fraction {}\n", c.bootstrap_fraction);
  fmt::format_to(sink, "seed {}\n", c.seed);
  if (c.allowed_features.empty()) {
    fmt::format_to(sink, "allowed_features all\n");
  } else {
    fmt::format_to(sink, "allowed_features {}\n", fmt::join(c.allowed_features, " "));
  }
  fmt::format_to(sink, "label_range {} {}\n", model.label_min, model.label_max);
  fmt::format_to(sink, "oob {} {}\n", model.oob_rmse, model.oob_count);
  fmt::format_to(sink, "feature_order {}\n", fmt::join(kFeatureNames, " "));
  fmt::format_to(sink, "split_gain {}\n", fmt::join(model.split_gain, " "));
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    fmt::format_to(sink, "tree {} {}\n", t, model.trees[t].nodes.size());
    for (const auto& n : model.trees[t].nodes) {
      fmt::format_to(sink, "{} {} {} {} {}\n", n.feature, n.threshold, n.left, n.right, n.value);
    }
  }
  fmt::format_to(sink, "end\n");
  return out;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : in_(std::string(text)) {}

  std::vector<std::string> expect(std::string_view key, std::size_t min_fields) {
    std::string raw;
    if (!std::getline(in_, raw)) {
      throw Error(fmt::format("model file truncated before '{}'", key));
    }
    ++line_no_;
    std::istringstream ls(raw);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (fields.empty() || fields[0] != key || fields.size() < min_fields + 1) {
      throw Error(fmt::format("model file line {}: expected '{}'", line_no_, key));
    }
    fields.erase(fields.begin());
    return fields;
  }

  std::vector<std::string> next_fields() {
    std::string raw;
    if (!std::getline(in_, raw)) throw Error("model file truncated");
    ++line_no_;
    std::istringstream ls(raw);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    return fields;
  }

  int line() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

template <typename T>
T parse_number(const std::string& s) {
  T value{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), value);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw Error(fmt::format("model file: bad number '{}'", s));
  }
  return value;
}

}  // namespace

QualityModel parse_model(std::string_view text) {
  Reader r(text);
  auto header = r.expect("nrdq-quality-model", 1);
  if (parse_number<int>(header[0]) != QualityModel::kFormatVersion) {
    throw Error(fmt::format("model format version {} not supported (expected {})",
                            header[0], QualityModel::kFormatVersion));
  }
  QualityModel m;
  m.target = parse_target(r.expect("target", 1)[0]);
  auto& c = m.config;
  c.n_trees = parse_number<int>(r.expect("n_trees", 1)[0]);
  c.max_depth = parse_number<int>(r.expect("max_depth", 1)[0]);
  c.min_leaf = parse_number<int>(r.expect("min_leaf", 1)[0]);
  c.features_per_split = parse_number<int>(r.expect("features_per_split", 1)[0]);
  c.bootstrap_fraction = parse_number<double>(r.expect("bootstrap_fraction", 1)[0]);
  c.seed = parse_number<std::uint64_t>(r.expect("seed", 1)[0]);
  auto allowed = r.expect("allowed_features", 1);
  if (!(allowed.size() == 1 && allowed[0] == "all")) {
    for (const auto& f : allowed) c.allowed_features.push_back(parse_number<int>(f));
  }
  c.validate();
  auto range = r.expect("label_range", 2);
  m.label_min = parse_number<double>(range[0]);
  m.label_max = parse_number<double>(range[1]);
  auto oob = r.expect("oob", 2);
  m.oob_rmse = parse_number<double>(oob[0]);
  m.oob_count = parse_number<int>(oob[1]);
  auto order = r.expect("feature_order", kFeatureCount);
  if (order.size() != kFeatureCount ||
      !std::equal(order.begin(), order.end(), kFeatureNames.begin())) {
    throw Error("model file: feature order does not match this build");
  }
  auto gains = r.expect("split_gain", kFeatureCount);
  if (gains.size() != kFeatureCount) throw Error("model file: bad split_gain");
  for (std::size_t f = 0; f < kFeatureCount; ++f) m.split_gain[f] = parse_number<double>(gains[f]);

  for (int t = 0; t < c.n_trees; ++t) {
    auto head = r.expect("tree", 2);
    if (parse_number<int>(head[0]) != t) throw Error("model file: trees out of order");
    const int count = parse_number<int>(head[1]);
    if (count <= 0) throw Error("model file: empty tree");
    Tree tree;
    tree.nodes.resize(count);
    for (auto& node : tree.nodes) {
      auto f = r.next_fields();
      if (f.size() != 5) throw Error(fmt::format("model file line {}: bad node", r.line()));
      node.feature = parse_number<int>(f[0]);
      node.threshold = parse_number<double>(f[1]);
      node.left = parse_number<int>(f[2]);
      node.right = parse_number<int>(f[3]);
      node.value = parse_number<double>(f[4]);
      if (node.feature >= static_cast<int>(kFeatureCount) ||
          (node.feature >= 0 && (node.left <= 0 || node.right <= 0 ||
                                 node.left >= count || node.right >= count))) {
        throw Error(fmt::format("model file line {}: bad node links", r.line()));
      }
    }
    m.trees.push_back(std::move(tree));
  }
  r.expect("end", 0);
  return m;
}

void save_model(const QualityModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write model '{}'", path.string()));
  out << serialize_model(model);
  if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

QualityModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open model '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::vector<RankedResult> order_by_score(std::vector<RankedResult> results) {
  std::ranges::sort(results, [](const RankedResult& a, const RankedResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return results;
}

std::vector<RankedResult> rank_results(const QualityModel& model,
                                       std::span<const ResultPair> pairs) {
  if (pairs.empty()) throw Error("rank_results: nothing to rank");
  std::vector<RankedResult> scored;
  for (const auto& p : pairs) {
    if (!(p.noisy == pairs.front().noisy)) {
      throw Error(fmt::format("rank_results: '{}' refers to a different noisy image", p.id));
    }
    scored.push_back({p.id, model.predict(extract_features(p.noisy, p.denoised))});
  }
  return order_by_score(std::move(scored));
}

}  // namespace nrdq
