#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nrdq/denoisers.hpp"
#include "nrdq/features.hpp"
#include "nrdq/forest.hpp"
#include "nrdq/harness/benchmark.hpp"
#include "nrdq/noise.hpp"

namespace nrdq::harness {

struct DatasetRow {
  std::string clean_id;
  NoiseSpec noise;
  DenoiserId denoiser;
  FeatureVector features{};
  double psnr = 0.0;
  double ssim = 0.0;

  double label(Target t) const { return t == Target::psnr ? psnr : ssim; }
  /// "clean_id|noise spec|denoiser"
  std::string key() const;
  /// Identifies the noisy image the row was computed from.
  std::string noisy_key() const;
};

using Dataset = std::vector<DatasetRow>;

/// Feature CSV: clean_id,noise_kind,noise_level,noise_seed,method,param,
/// the 19 feature names, psnr,ssim.
std::string feature_csv_header();
std::string format_feature_csv(const Dataset& rows);
Dataset parse_feature_csv(std::string_view text);
void write_feature_csv(const Dataset& rows, const std::filesystem::path& path);
Dataset read_feature_csv(const std::filesystem::path& path);

struct ExtractResult {
  Dataset rows;
  std::vector<std::string> failures;
};

/// Features for every manifest row; paths are relative to `base`. Rows whose
/// images cannot be read are skipped and reported.
ExtractResult extract_dataset(const Manifest& manifest, const std::filesystem::path& base,
                              int jobs = 1,
                              const std::function<void(std::string_view)>& log = {});

struct RowFilter {
  std::optional<Method> method;
  std::optional<NoiseKind> noise_kind;
};
Dataset filter_rows(const Dataset& rows, const RowFilter& filter);

std::vector<LabeledSample> to_samples(const Dataset& rows, Target target);

}  // namespace nrdq::harness
