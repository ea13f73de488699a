#include "sns/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sns/error.hpp"
#include "sns/model.hpp"

namespace sns {

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  a.n = values.size();
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(a.n);
  if (a.n >= 2) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(a.n - 1));
  }
  return a;
}

namespace {

// Position of a scene among the standard five, or 5 for anything else.
int scene_rank(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) key += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (key == "ETH") return 0;
  if (key == "HOTEL") return 1;
  if (key == "UNIV") return 2;
  if (key == "ZARA01" || key == "ZARA1") return 3;
  if (key == "ZARA02" || key == "ZARA2") return 4;
  return 5;
}

int variant_rank(const std::string& name) {
  try {
    const Variant v = parse_variant(name);
    for (int i = 0; i < 5; ++i) {
      if (kAllVariants[i] == v) return i;
    }
  } catch (const ConfigError&) {
  }
  return 5;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string cell_text(const Aggregate& a) {
  if (a.n == 0) return "-";
  std::string s = fixed(a.mean, 2);
  if (a.stddev) s += "±" + fixed(*a.stddev, 2);
  return s;
}

std::string heading(const std::string& variant) {
  try {
    return std::string(display_name(parse_variant(variant)));
  } catch (const ConfigError&) {
    return variant;
  }
}

// Pads by code points so "±" counts as one column.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  return cps >= width ? s : s + std::string(width - cps, ' ');
}

}  // namespace

const EvalResult* ReportTable::find(const std::string& scene, const std::string& variant) const {
  auto it = cells.find({scene, variant});
  return it == cells.end() ? nullptr : &it->second;
}

Aggregate ReportTable::average(const std::string& variant, bool fde) const {
  std::vector<double> values;
  for (const std::string& s : scenes) {
    if (const EvalResult* r = find(s, variant)) values.push_back(fde ? r->fde : r->ade);
  }
  return aggregate(values);
}

ReportTable build_report(std::span<const EvalResult> results) {
  ReportTable t;
  for (const EvalResult& r : results) {
    if (!t.cells.emplace(std::make_pair(r.scene, r.variant), r).second) {
      throw DataError("duplicate result for scene '" + r.scene + "' variant '" + r.variant + "'");
    }
    if (std::find(t.scenes.begin(), t.scenes.end(), r.scene) == t.scenes.end()) t.scenes.push_back(r.scene);
    if (std::find(t.variants.begin(), t.variants.end(), r.variant) == t.variants.end()) {
      t.variants.push_back(r.variant);
    }
  }
  std::stable_sort(t.scenes.begin(), t.scenes.end(),
                   [](const std::string& a, const std::string& b) { return scene_rank(a) < scene_rank(b); });
  std::stable_sort(t.variants.begin(), t.variants.end(), [](const std::string& a, const std::string& b) {
    return variant_rank(a) < variant_rank(b);
  });
  return t;
}

std::string format_report(const ReportTable& table) {
  std::ostringstream os;
  const std::size_t w0 = 10, w = 15;
  for (int metric = 0; metric < 2; ++metric) {
    const bool is_fde = metric == 1;
    os << (is_fde ? "FDE (m)" : "ADE (m)") << '\n';
    os << pad("Scene", w0);
    for (const auto& v : table.variants) os << pad(heading(v), w);
    os << '\n';
    for (const auto& s : table.scenes) {
      os << pad(s, w0);
      for (const auto& v : table.variants) {
        const EvalResult* r = table.find(s, v);
        os << pad(r ? fixed(is_fde ? r->fde : r->ade, 2) : "-", w);
      }
      os << '\n';
    }
    os << pad("Average", w0);
    for (const auto& v : table.variants) os << pad(cell_text(table.average(v, is_fde)), w);
    os << "\n\n";
  }
  return os.str();
}

void write_report_csv(const std::filesystem::path& path, const ReportTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "metric,scene";
  for (const auto& v : table.variants) out << ',' << v;
  out << '\n';
  for (int metric = 0; metric < 2; ++metric) {
    const bool is_fde = metric == 1;
    const char* name = is_fde ? "FDE" : "ADE";
    for (const auto& s : table.scenes) {
      out << name << ',' << s;
      for (const auto& v : table.variants) {
        const EvalResult* r = table.find(s, v);
        out << ',' << (r ? full(is_fde ? r->fde : r->ade) : "");
      }
      out << '\n';
    }
    out << name << ",Average";
    for (const auto& v : table.variants) {
      const Aggregate a = table.average(v, is_fde);
      out << ',';
      if (a.n > 0) out << full(a.mean) << (a.stddev ? "±" + full(*a.stddev) : "");
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

constexpr PublishedRow kPublished[] = {
    {"vanilla", {0.52, 0.33, 0.52, 0.41, 0.27}, {2.84, 1.90, 2.92, 2.35, 1.48}, 0.41, 0.11, 2.30, 0.61},
    {"S", {0.51, 0.31, 0.55, 0.36, 0.25}, {2.82, 1.67, 3.04, 2.05, 1.42}, 0.40, 0.13, 2.20, 0.71},
    {"SN", {0.47, 0.44, 0.39, 0.29, 0.28}, {2.55, 2.25, 2.10, 1.56, 1.59}, 0.37, 0.09, 2.01, 0.43},
    {"SS", {0.48, 0.24, 0.43, 0.33, 0.31}, {2.57, 1.38, 2.54, 1.81, 1.63}, 0.36, 0.10, 1.99, 0.54},
    {"SNS", {0.58, 0.30, 0.37, 0.28, 0.26}, {2.43, 1.58, 2.08, 1.53, 1.44}, 0.36, 0.13, 1.81, 0.43},
};

}  // namespace

std::span<const PublishedRow> published_reference() { return kPublished; }

std::string format_published_reference() {
  std::ostringstream os;
  os << "Published reference values (not produced by this run)\n";
  const std::size_t w0 = 10, w = 15;
  for (int metric = 0; metric < 2; ++metric) {
    const bool is_fde = metric == 1;
    os << (is_fde ? "FDE (m)" : "ADE (m)") << '\n' << pad("Scene", w0);
    for (const PublishedRow& r : kPublished) os << pad(heading(r.variant), w);
    os << '\n';
    for (std::size_t s = 0; s < 5; ++s) {
      os << pad(kPublishedScenes[s], w0);
      for (const PublishedRow& r : kPublished) os << pad(fixed(is_fde ? r.fde[s] : r.ade[s], 2), w);
      os << '\n';
    }
    os << pad("Average", w0);
    for (const PublishedRow& r : kPublished) {
      os << pad(is_fde ? fixed(r.fde_mean, 2) + "±" + fixed(r.fde_std, 2)
                       : fixed(r.ade_mean, 2) + "±" + fixed(r.ade_std, 2),
                w);
    }
    os << "\n\n";
  }
  return os.str();
}

}  // namespace sns
