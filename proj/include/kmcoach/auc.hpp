#pragma once

#include <span>

namespace kmc {

/// ROC-AUC as the normalized Mann-Whitney U statistic with average ranks for
/// tied scores. Throws Error(kDomain, "degenerate_labels") unless both classes occur.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace kmc
