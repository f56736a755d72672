#pragma once

#include <string>

namespace owr::snapshot {

/// Reals are written as C hexfloats ("%a"): bit-exact round-trips, and the
/// pending infinite radius of a fresh first ball survives serialization.
std::string real_to_text(double v);
double real_from_text(const std::string& token);

} // namespace owr::snapshot
