#pragma once

#include <array>
#include <string>

namespace kmc {

/// Metacognitive learner patterns: well calibrated, aware of limitations,
/// underconfident, overconfident, liberal criterion.
enum class Pattern { kWC, kAL, kUC, kOC, kLC };
inline constexpr std::array<Pattern, 5> kAllPatterns{Pattern::kWC, Pattern::kAL, Pattern::kUC, Pattern::kOC,
                                                     Pattern::kLC};
std::string to_string(Pattern p);
std::string pattern_name(Pattern p);  // "Well Calibrated", ...
Pattern pattern_from_string(const std::string& tag);

}  // namespace kmc
