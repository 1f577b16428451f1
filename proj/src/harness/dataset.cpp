#include "nrdq/harness/dataset.hpp"

#include <map>

#include <fmt/format.h>

#include "nrdq/harness/common.hpp"
#include "nrdq/image_io.hpp"
#include "nrdq/parallel.hpp"

namespace nrdq::harness {

namespace fs = std::filesystem;

std::string DatasetRow::key() const {
  return fmt::format("{}|{}|{}", clean_id, noise.to_string(), denoiser.to_string());
}

std::string DatasetRow::noisy_key() const {
  return fmt::format("{}|{}", clean_id, noise.to_string());
}

std::string feature_csv_header() {
  return fmt::format("clean_id,noise_kind,noise_level,noise_seed,method,param,{},psnr,ssim",
                     fmt::join(kFeatureNames, ","));
}

std::string format_feature_csv(const Dataset& rows) {
  std::string out = feature_csv_header() + "\n";
  auto sink = std::back_inserter(out);
  for (const auto& r : rows) {
    fmt::format_to(sink, "{},{},{},{},{},{},{},{},{}\n", r.clean_id, to_string(r.noise.kind),
                   r.noise.level, r.noise.seed, to_string(r.denoiser.method),
                   r.denoiser.param_string(), fmt::join(r.features, ","), r.psnr, r.ssim);
  }
  return out;
}

Dataset parse_feature_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != feature_csv_header()) {
    throw Error("feature CSV: unexpected header");
  }
  Dataset rows;
  constexpr std::size_t kFields = 6 + kFeatureCount + 2;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv(lines[i]);
    if (f.size() != kFields) {
      throw Error(fmt::format("feature CSV line {}: expected {} fields, got {}", i + 1, kFields,
                              f.size()));
    }
    try {
      DatasetRow r;
      r.clean_id = f[0];
      r.noise = {parse_noise_kind(f[1]), parse_double(f[2]), parse_u64(f[3])};
      r.denoiser = DenoiserId::parse(f[4], f[5]);
      for (std::size_t k = 0; k < kFeatureCount; ++k) r.features[k] = parse_double(f[6 + k]);
      r.psnr = parse_double(f[6 + kFeatureCount]);
      r.ssim = parse_double(f[7 + kFeatureCount]);
      rows.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(fmt::format("feature CSV line {}: {}", i + 1, e.what()));
    }
  }
  return rows;
}

void write_feature_csv(const Dataset& rows, const fs::path& path) {
  write_file(path, format_feature_csv(rows));
}

Dataset read_feature_csv(const fs::path& path) { return parse_feature_csv(read_file(path)); }

ExtractResult extract_dataset(const Manifest& manifest, const fs::path& base, int jobs,
                              const std::function<void(std::string_view)>& log) {
  // Group rows by noisy image, keeping manifest order inside and across groups.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> group_of;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& path = manifest.rows[i].noisy_path;
    auto [it, inserted] = group_of.try_emplace(path, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  std::vector<std::vector<std::optional<DatasetRow>>> results(groups.size());
  std::vector<std::vector<std::string>> failures(groups.size());
  parallel_for(groups.size(), jobs, [&](std::size_t g) {
    const auto& idx = groups[g];
    results[g].resize(idx.size());
    Image noisy;
    try {
      noisy = load_image(base / manifest.rows[idx.front()].noisy_path);
    } catch (const std::exception& e) {
      failures[g].push_back(fmt::format("{}: {}", manifest.rows[idx.front()].noisy_path, e.what()));
      return;
    }
    std::vector<Image> denoised;
    std::vector<std::size_t> loaded;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& row = manifest.rows[idx[k]];
      try {
        Image d = load_image(base / row.denoised_path);
        if (!d.same_shape(noisy)) throw Error("shape differs from the noisy image");
        denoised.push_back(std::move(d));
        loaded.push_back(k);
      } catch (const std::exception& e) {
        failures[g].push_back(fmt::format("{}: {}", row.denoised_path, e.what()));
      }
    }
    const auto features = extract_features_batch(noisy, denoised);
    for (std::size_t n = 0; n < loaded.size(); ++n) {
      const auto& row = manifest.rows[idx[loaded[n]]];
      results[g][loaded[n]] =
          DatasetRow{row.clean_id, row.noise, row.denoiser, features[n], row.psnr, row.ssim};
    }
    if (log) log(fmt::format("features {}/{}", g + 1, groups.size()));
  });

  ExtractResult out;
  // Emit in manifest order.
  std::vector<std::optional<DatasetRow>> by_row(manifest.rows.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t k = 0; k < groups[g].size(); ++k) {
      if (!results[g].empty()) by_row[groups[g][k]] = std::move(results[g][k]);
    }
    for (auto& f : failures[g]) out.failures.push_back(std::move(f));
  }
  for (auto& r : by_row) {
    if (r) out.rows.push_back(std::move(*r));
  }
  if (log) {
    for (const auto& f : out.failures) log("skipped " + f);
  }
  return out;
}

Dataset filter_rows(const Dataset& rows, const RowFilter& filter) {
  Dataset out;
  for (const auto& r : rows) {
    if (filter.method && r.denoiser.method != *filter.method) continue;
    if (filter.noise_kind && r.noise.kind != *filter.noise_kind) continue;
    out.push_back(r);
  }
  return out;
}

std::vector<LabeledSample> to_samples(const Dataset& rows, Target target) {
  std::vector<LabeledSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.features, r.label(target), r.key()});
  return out;
}

}  // namespace nrdq::harness
