#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sns/evaluation.hpp"

namespace sns {

struct Aggregate {
  double mean = 0.0;
  std::optional<double> stddev;  // sample std (n-1); absent for n < 2
  std::size_t n = 0;
};

Aggregate aggregate(std::span<const double> values);

// Scene x variant grid of results. Known scenes come first in the order
// ETH, HOTEL, UNIV, ZARA-01, ZARA-02; variants in vanilla, S, SN, SS, SNS order.
struct ReportTable {
  std::vector<std::string> scenes;
  std::vector<std::string> variants;
  std::map<std::pair<std::string, std::string>, EvalResult> cells;

  const EvalResult* find(const std::string& scene, const std::string& variant) const;
  // Over the scenes that have a value for `variant`.
  Aggregate average(const std::string& variant, bool fde) const;
};

// Duplicate (scene, variant) rows are rejected.
ReportTable build_report(std::span<const EvalResult> results);

// Two blocks (ADE then FDE), one row per scene plus an "Average" row
// formatted as mean ± std. Missing cells print "-".
std::string format_report(const ReportTable& table);
// metric,scene,<variant columns...>; the Average row carries "mean±std".
void write_report_csv(const std::filesystem::path& path, const ReportTable& table);

// Published reference numbers, for side-by-side display only.
struct PublishedRow {
  const char* variant;
  double ade[5];
  double fde[5];
  double ade_mean, ade_std, fde_mean, fde_std;
};
std::span<const PublishedRow> published_reference();
inline constexpr const char* kPublishedScenes[] = {"ETH", "HOTEL", "UNIV", "ZARA-01", "ZARA-02"};
std::string format_published_reference();

}  // namespace sns
