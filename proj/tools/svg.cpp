#include "svg.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "tva/error.hpp"

namespace tva::cli {

void writeRmseScatter(const std::filesystem::path& path, const std::string& title,
                      std::span<const metrics::ExperimentReport> reports) {
  constexpr double kWidth = 640, kHeight = 400, kPad = 50;
  constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::vector<std::string> models;
  double maxRun = 1, maxRmse = 0;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.modelName) == models.end()) models.push_back(r.modelName);
    if (!r.ok()) continue;
    maxRun = std::max(maxRun, static_cast<double>(r.runIndex));
    maxRmse = std::max(maxRmse, r.scores->rmse);
  }
  if (maxRmse <= 0) maxRmse = 1;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}">)", kWidth, kHeight) << '\n';
  out << fmt::format(R"(<text x="{}" y="20" font-size="14">{}</text>)", kPad, title) << '\n';
  out << fmt::format(R"(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>)", kPad, kHeight - kPad,
                     kWidth - kPad)
      << '\n';
  out << fmt::format(R"(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>)", kPad, kHeight - kPad, kPad)
      << '\n';
  out << fmt::format(R"(<text x="{}" y="{}" font-size="11">run</text>)", kWidth / 2, kHeight - 15) << '\n';
  out << fmt::format(R"(<text x="5" y="{}" font-size="11">RMSE (max {:.4g})</text>)", kPad - 10, maxRmse) << '\n';

  for (const auto& r : reports) {
    if (!r.ok()) continue;
    const auto idx = static_cast<std::size_t>(std::find(models.begin(), models.end(), r.modelName) - models.begin());
    const double x = kPad + (kWidth - 2 * kPad) * static_cast<double>(r.runIndex) / maxRun;
    const double y = kHeight - kPad - (kHeight - 2 * kPad) * r.scores->rmse / maxRmse;
    out << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="{}"/>)", x, y, kColors[idx % kColors.size()])
        << '\n';
  }
  for (std::size_t i = 0; i < models.size(); ++i) {
    out << fmt::format(R"(<text x="{}" y="{}" font-size="11" fill="{}">{}</text>)", kWidth - kPad - 120,
                       40 + 14 * static_cast<double>(i), kColors[i % kColors.size()], models[i])
        << '\n';
  }
  out << "</svg>\n";
}

}  // namespace tva::cli
