#include "nrdq/harness/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>

#include <fmt/format.h>

#include "nrdq/harness/common.hpp"
#include "nrdq/image_io.hpp"
#include "nrdq/metrics.hpp"
#include "nrdq/parallel.hpp"
#include "nrdq/rng.hpp"

namespace nrdq::harness {

namespace fs = std::filesystem;

std::vector<double> noise_levels(NoiseKind kind, bool intermediate) {
  switch (kind) {
    case NoiseKind::gaussian:
      return intermediate ? std::vector{15.0, 25.0} : std::vector{10.0, 20.0, 30.0};
    case NoiseKind::poisson:
      return intermediate ? std::vector{0.075, 0.125} : std::vector{0.05, 0.10, 0.15};
    case NoiseKind::salt_pepper:
      return intermediate ? std::vector{0.15, 0.25} : std::vector{0.1, 0.2, 0.3};
  }
  return {};
}

bool is_intermediate_level(NoiseKind kind, double level) {
  for (double v : noise_levels(kind, true)) {
    if (std::abs(v - level) <= 1e-12 * std::max(1.0, v)) return true;
  }
  return false;
}

std::uint64_t noise_seed(std::uint64_t master, std::string_view clean_id, NoiseKind kind,
                         int level_index) {
  Rng rng = Rng(master).split({fnv1a64(clean_id), static_cast<std::uint64_t>(kind),
                               static_cast<std::uint64_t>(level_index)});
  return rng.next_u64();
}

// --- manifest CSV -------------------------------------------------------------

std::string format_manifest(const Manifest& m) {
  std::string out;
  auto sink = std::back_inserter(out);
  fmt::format_to(sink, "# nrdq benchmark manifest\n");
  fmt::format_to(sink, "# tool_version={}\n", m.tool_version);
  fmt::format_to(sink, "# seed={}\n", m.seed);
  fmt::format_to(sink, "# clean_dir={}\n", m.clean_dir);
  fmt::format_to(sink, "{}\n", kManifestColumns);
  for (const auto& r : m.rows) {
    fmt::format_to(sink, "{},{},{},{},{},{},{},{},{},{}\n", r.clean_id, to_string(r.noise.kind),
                   r.noise.level, r.noise.seed, r.noisy_path, to_string(r.denoiser.method),
                   r.denoiser.param_string(), r.denoised_path, r.psnr, r.ssim);
  }
  return out;
}

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  bool header_seen = false;
  int line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const auto key = line.substr(2, eq - 2);
      const auto value = line.substr(eq + 1);
      if (key == "tool_version") m.tool_version = value;
      if (key == "seed") m.seed = parse_u64(value);
      if (key == "clean_dir") m.clean_dir = value;
      continue;
    }
    if (!header_seen) {
      if (line != kManifestColumns) {
        throw Error(fmt::format("manifest line {}: unexpected header", line_no));
      }
      header_seen = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 10) {
      throw Error(fmt::format("manifest line {}: expected 10 fields, got {}", line_no, f.size()));
    }
    try {
      ManifestRow r;
      r.clean_id = f[0];
      r.noise = {parse_noise_kind(f[1]), parse_double(f[2]), parse_u64(f[3])};
      r.noisy_path = f[4];
      r.denoiser = DenoiserId::parse(f[5], f[6]);
      r.denoised_path = f[7];
      r.psnr = parse_double(f[8]);
      r.ssim = parse_double(f[9]);
      m.rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(fmt::format("manifest line {}: {}", line_no, e.what()));
    }
  }
  if (!header_seen) throw Error("manifest has no column header");
  return m;
}

void write_manifest(const Manifest& m, const fs::path& path) {
  write_file(path, format_manifest(m));
}

Manifest read_manifest(const fs::path& path) { return parse_manifest(read_file(path)); }

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(fmt::format("'{}' is not a directory", dir.string()));
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") out.push_back(entry.path());
  }
  std::ranges::sort(out);
  return out;
}

// --- generation ---------------------------------------------------------------

namespace {

constexpr std::string_view kStateHeader = "nrdq-benchmark-state 1";

struct StateEntry {
  std::string path;
  std::uint64_t hash = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

std::string state_line(const std::string& key, const StateEntry& e) {
  return fmt::format("{}\t{}\t{}\t{}\t{}\n", key, e.path, hex64(e.hash), e.psnr, e.ssim);
}

std::map<std::string, StateEntry> read_state(const fs::path& path) {
  std::map<std::string, StateEntry> out;
  if (!fs::exists(path)) return out;
  const auto lines = split_lines(read_file(path));
  if (lines.empty() || lines.front() != kStateHeader) return out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> f;
    std::size_t start = 0;
    const auto& l = lines[i];
    while (true) {
      const auto pos = l.find('\t', start);
      f.push_back(l.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (f.size() != 5) continue;  // a torn final line from an interrupted run
    try {
      StateEntry e{f[1], std::stoull(f[2], nullptr, 16), parse_double(f[3]), parse_double(f[4])};
      out[f[0]] = e;
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

struct Job {
  std::size_t clean_index;
  NoiseKind kind;
  int level_index;
  double level;
};

struct JobOutput {
  std::vector<ManifestRow> rows;
  std::vector<std::pair<std::string, StateEntry>> state;
  std::vector<std::string> failures;
  int generated = 0;
  int reused = 0;
};

}  // namespace

BenchmarkResult build_benchmark(const BenchmarkOptions& opt) {
  auto log = [&](std::string_view msg) {
    if (opt.log) opt.log(msg);
  };
  auto cleans = list_images(opt.clean_dir);
  if (opt.limit > 0 && static_cast<std::size_t>(opt.limit) < cleans.size()) {
    cleans.resize(opt.limit);
  }
  if (cleans.size() < 2) {
    throw Error(fmt::format("'{}' holds fewer than 2 images", opt.clean_dir.string()));
  }
  std::vector<std::string> ids, stems;
  for (const auto& p : cleans) {
    ids.push_back(p.filename().string());
    stems.push_back(p.stem().string());
    require_csv_safe(ids.back());
  }
  {
    auto sorted = stems;
    std::ranges::sort(sorted);
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("clean images must have distinct file stems");
    }
  }

  fs::create_directories(opt.out_dir / "noisy");
  fs::create_directories(opt.out_dir / "denoised");
  const fs::path state_path = opt.out_dir / "state.tsv";
  const auto previous = read_state(state_path);
  {
    std::ofstream reset(state_path, std::ios::binary | std::ios::trunc);
    reset << kStateHeader << '\n';
    for (const auto& [key, e] : previous) reset << state_line(key, e);
  }
  std::mutex state_mutex;

  auto verified = [&](const std::string& key) -> std::optional<StateEntry> {
    auto it = previous.find(key);
    if (it == previous.end()) return std::nullopt;
    const fs::path p = opt.out_dir / it->second.path;
    try {
      if (fs::exists(p) && hash_file(p) == it->second.hash) return it->second;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  };

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cleans.size(); ++i) {
    for (NoiseKind kind : kNoiseKinds) {
      const auto levels = noise_levels(kind, opt.intermediate);
      for (int li = 0; li < static_cast<int>(levels.size()); ++li) {
        jobs.push_back({i, kind, li, levels[li]});
      }
    }
  }
  const auto grid = full_grid();
  std::vector<JobOutput> outputs(jobs.size());

  parallel_for(jobs.size(), opt.jobs, [&](std::size_t j) {
    const Job& job = jobs[j];
    JobOutput& out = outputs[j];
    const std::string& id = ids[job.clean_index];
    const std::string level_tag =
        fmt::format("{}{}", opt.intermediate ? "i" : "", job.level_index);
    const std::string base =
        fmt::format("{}__{}_{}", stems[job.clean_index], to_string(job.kind), level_tag);
    const NoiseSpec spec{job.kind, job.level,
                         noise_seed(opt.seed, id, job.kind,
                                    job.level_index + (opt.intermediate ? 100 : 0))};
    const std::string spec_key = spec.to_string();
    const std::string noisy_rel = "noisy/" + base + ".png";

    std::optional<Image> clean;
    auto get_clean = [&]() -> const Image& {
      if (!clean) clean = load_image(cleans[job.clean_index]);
      return *clean;
    };
    std::optional<Image> noisy;
    const auto noisy_state = verified(spec_key);
    auto get_noisy = [&]() -> const Image& {
      if (noisy) return *noisy;
      if (noisy_state) {
        noisy = load_image(opt.out_dir / noisy_rel);
      } else {
        noisy = apply_noise(get_clean(), spec).quantized();
        save_image(*noisy, opt.out_dir / noisy_rel);
      }
      return *noisy;
    };

    StateEntry noisy_entry;
    try {
      if (noisy_state) {
        noisy_entry = *noisy_state;
      } else {
        get_noisy();
        noisy_entry = {noisy_rel, hash_file(opt.out_dir / noisy_rel), 0.0, 0.0};
      }
    } catch (const std::exception& e) {
      out.failures.push_back(fmt::format("{} {}: {}", id, spec_key, e.what()));
      return;
    }
    out.state.emplace_back(spec_key, noisy_entry);

    for (const auto& did : grid) {
      const std::string key = spec_key + "|" + did.to_string();
      const std::string den_rel = fmt::format("denoised/{}__{}_{}.png", base,
                                              to_string(did.method), did.param_string());
      ManifestRow row{id, spec, noisy_rel, did, den_rel, 0.0, 0.0};
      try {
        if (auto s = verified(key); s && s->path == den_rel) {
          row.psnr = s->psnr;
          row.ssim = s->ssim;
          out.state.emplace_back(key, *s);
          ++out.reused;
        } else {
          const Image den = denoise(get_noisy(), did).quantized();
          save_image(den, opt.out_dir / den_rel);
          row.psnr = psnr(get_clean(), den);
          row.ssim = ssim(get_clean(), den);
          if (!std::isfinite(row.psnr) || !std::isfinite(row.ssim)) {
            throw Error("non-finite label");
          }
          out.state.emplace_back(
              key, StateEntry{den_rel, hash_file(opt.out_dir / den_rel), row.psnr, row.ssim});
          ++out.generated;
        }
        out.rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        out.failures.push_back(fmt::format("{} {}: {}", id, key, e.what()));
      }
    }

    std::lock_guard lock(state_mutex);
    std::ofstream append(state_path, std::ios::binary | std::ios::app);
    for (const auto& [key, e] : out.state) append << state_line(key, e);
    log(fmt::format("{} {} done ({} new, {} reused)", id, spec_key, out.generated, out.reused));
  });

  BenchmarkResult result;
  result.manifest.seed = opt.seed;
  result.manifest.tool_version = std::string(kToolVersion);
  result.manifest.clean_dir = opt.clean_dir.string();
  std::string state = std::string(kStateHeader) + "\n";
  for (auto& o : outputs) {
    for (auto& r : o.rows) result.manifest.rows.push_back(std::move(r));
    for (const auto& [key, e] : o.state) state += state_line(key, e);
    for (auto& f : o.failures) {
      log("failed: " + f);
      result.failures.push_back(std::move(f));
    }
    result.generated += o.generated;
    result.reused += o.reused;
  }
  write_file(state_path, state);
  write_manifest(result.manifest, opt.out_dir / "manifest.csv");
  return result;
}

}  // namespace nrdq::harness
