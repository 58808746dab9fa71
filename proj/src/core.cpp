#include "lotflow/core.hpp"

#include <stdexcept>
#include <string>

namespace lotflow {

void Instance::validate() const {
    if (T < 1) throw std::invalid_argument("Instance: T must be >= 1");
    if (p < 0 || a < 0 || v < 0 || h < 0 || pi < 0)
        throw std::invalid_argument("Instance: costs and price must be nonnegative");
    if (b < 0) throw std::invalid_argument("Instance: interest rate must be nonnegative");
    if (static_cast<int>(demand.size()) != T)
        throw std::invalid_argument("Instance: demand list length " +
                                    std::to_string(demand.size()) + " != T = " + std::to_string(T));
    for (const auto& m : demand) {
        if (m.kind == DemandModel::Kind::ExplicitPmf) validate_pmf(m.pmf);
        else if (m.mean < 0) throw std::invalid_argument("Instance: poisson mean must be >= 0");
    }
}

State capital_transition(const State& state, const Decision& decision, int demand,
                         const Instance& inst) {
    const int sales = std::min(demand + state.backlog(), decision.Q + state.stock());
    const int inv_next = inventory_transition(state.I, decision.Q, demand);
    const State next{inv_next, 0.0};

    const double charges = inst.v * decision.Q + (decision.R ? inst.a : 0.0) +
                           inst.h * next.stock() + inst.pi * next.backlog();
    const double interest = inst.b * std::max(-state.B, 0.0);
    const double cap_next = round_money(state.B + inst.p * sales - charges - interest);
    return {inv_next, cap_next};
}

}  // namespace lotflow
