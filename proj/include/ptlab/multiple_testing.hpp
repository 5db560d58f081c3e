#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace ptlab {

enum class Adjustment { kBonferroni, kHolm, kHochberg, kHommel };

std::string_view to_string(Adjustment method);
/// Throws Error(kInvalidInput) for an unknown name.
Adjustment parse_adjustment(std::string_view name);

/// Familywise-error adjusted p-values, returned in the input order.
/// Throws Error(kDomain) if any raw p lies outside [0, 1].
std::vector<double> adjust_pvalues(std::span<const double> raw, Adjustment method);

}  // namespace ptlab
