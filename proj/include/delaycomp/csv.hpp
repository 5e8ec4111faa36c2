#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace delaycomp::csv {

// Shortest round-trip representation; locale independent, '.' decimal separator.
// Infinities are written as "inf"/"-inf", NaN as "nan".
[[nodiscard]] std::string number(double v);

void write_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace delaycomp::csv
