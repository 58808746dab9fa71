#pragma once

#include <cmath>
#include <cstdint>

namespace lotflow {

// Capital values are kept exact to 1e-4 at module boundaries; rounding is
// half-to-even so that state keys are well defined.
inline double round_money(double x) {
    return std::nearbyint(x * 1e4) / 1e4;
}

// Integer key in 1e-4 currency units, for hashing states.
inline std::int64_t money_key(double x) {
    return static_cast<std::int64_t>(std::llround(std::nearbyint(x * 1e4)));
}

}  // namespace lotflow
