#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ricenet/ablation.hpp"

namespace ricenet {

// Columns: combo,fold0..fold4,mean,sd,test_f1; numbers printed with %.17g.
std::string results_to_csv(const std::vector<ExperimentResult>& results);

// Published validation macro-F1 per canonical combo index (none for
// POST_OP+EVENT) and the single published test-ensemble score, which the
// chart places on the all-modality test bar.
std::optional<double> reference_val_f1(int combo_index);
inline constexpr double kReferenceTestF1 = 0.916;

// Grouped bar chart: per combo one striped validation bar (mean, population
// sd error bar) and one dotted test bar. Self-contained SVG, byte-stable.
std::string render_chart_svg(const std::vector<ExperimentResult>& results, bool paper_reference);

// Writes ablation_results.csv and figure2.svg into out_dir.
void emit_report(const std::vector<ExperimentResult>& results, const std::filesystem::path& out_dir,
                 bool paper_reference);

} // namespace ricenet
