#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "lotflow/demand.hpp"
#include "lotflow/money.hpp"

namespace lotflow {

// Full problem definition: horizon, cost/price/interest parameters, initial
// state and per-period demand models.
struct Instance {
    int T = 1;              // period count
    double B0 = 0.0;        // initial capital
    int I0 = 0;             // initial inventory
    double p = 0.0;         // unit selling price
    double a = 0.0;         // fixed ordering cost
    double v = 0.0;         // unit variable ordering cost
    double h = 0.0;         // unit holding cost per period
    double pi = 0.0;        // unit backorder penalty per period
    double b = 0.0;         // overdraft interest rate per period
    std::vector<DemandModel> demand;  // length T

    // Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

// End-of-period (net inventory, capital). Inventory may be negative
// (backorders), capital may be negative (overdraft in use).
struct State {
    int I = 0;
    double B = 0.0;

    int stock() const { return std::max(I, 0); }
    int backlog() const { return std::max(-I, 0); }

    std::int64_t capital_key() const { return money_key(B); }
    bool operator==(const State& o) const { return I == o.I && capital_key() == o.capital_key(); }
};

struct Decision {
    int Q = 0;
    bool R = false;  // order indicator, true iff Q > 0

    static Decision order(int q) { return {q, q > 0}; }
};

// I' = I + Q - D
inline int inventory_transition(int inv_prev, int order_qty, int demand) {
    return inv_prev + order_qty - demand;
}

// One period of the cash/inventory dynamics: revenue on the realized sales
// (capped by demand plus backlog and by order plus stock), minus ordering,
// holding, penalty and overdraft interest charges.
State capital_transition(const State& state, const Decision& decision, int demand,
                         const Instance& inst);

// B_T minus interest when the terminal balance is negative.
inline double final_capital(double terminal_balance, double interest_rate) {
    return round_money(terminal_balance - interest_rate * std::max(-terminal_balance, 0.0));
}

// Per-path objective: final capital minus initial capital.
inline double objective(double final_cap, const Instance& inst) {
    return round_money(final_cap - inst.B0);
}

}  // namespace lotflow
