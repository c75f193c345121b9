#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "elinspect/eval.hpp"

namespace elinspect {

/// Standalone SVG document with one ROC polyline per labeled curve plus the
/// random-classifier diagonal.
std::string roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves,
                    const std::string& title = "ROC");

/// Standalone SVG with one Tukey box per labeled group; outliers drawn as
/// circles.
std::string boxplot_svg(const std::vector<std::pair<std::string, BoxplotStats>>& groups,
                        const std::string& title, const std::string& y_label);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace elinspect
