#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "tva/metrics.hpp"

namespace tva::cli {

/// Scatter of per-run RMSE, one series per model.
void writeRmseScatter(const std::filesystem::path& path, const std::string& title,
                      std::span<const metrics::ExperimentReport> reports);

}  // namespace tva::cli
