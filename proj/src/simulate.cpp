#include "bellscope/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bellscope/errors.hpp"
#include "bellscope/parallel.hpp"
#include "bellscope/rng.hpp"

namespace bellscope {

void ShotPlan::validate() const {
    if (shots < 1) throw ValidationError("shots must be at least 1");
    for (const auto& b : biases)
        if (!std::isfinite(b.delta)) throw ValidationError("bias must be finite");
}

namespace {

// One block P(a, b) of a setting pair, outputs na x nb, row-major in a.
void bias_block(std::vector<double>& blk, int na, int nb, const MarginalBias& bias) {
    const bool alice = bias.party == Party::Alice;
    const int n_self = alice ? na : nb, n_other = alice ? nb : na;
    if (bias.outcome < 0 || bias.outcome >= n_self) throw ValidationError("bias outcome out of range");
    auto at = [&](int s, int o) -> double& { return alice ? blk[s * nb + o] : blk[o * nb + s]; };
    double m = 0.0;
    for (int o = 0; o < n_other; ++o) m += at(bias.outcome, o);
    const double d = bias.delta;
    if (m + d < -1e-12 || m + d > 1.0 + 1e-12) throw ValidationError("bias pushes a marginal outside [0, 1]");
    if (d > 0) {
        // P' = (1 - l) P + l * [s = outcome] P_other,  l = d / (1 - m)
        const double l = d / (1.0 - m);
        std::vector<double> other(n_other, 0.0);
        for (int s = 0; s < n_self; ++s)
            for (int o = 0; o < n_other; ++o) other[o] += at(s, o);
        for (int s = 0; s < n_self; ++s)
            for (int o = 0; o < n_other; ++o) at(s, o) = (1.0 - l) * at(s, o) + (s == bias.outcome ? l * other[o] : 0.0);
    } else if (d < 0) {
        // move a fraction -d / m of the outcome's mass to the next outcome
        const double l = -d / m;
        const int next = (bias.outcome + 1) % n_self;
        for (int o = 0; o < n_other; ++o) {
            double moved = l * at(bias.outcome, o);
            at(bias.outcome, o) -= moved;
            at(next, o) += moved;
        }
    }
    for (double& v : blk) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace

ProbabilityTable apply_biases(const ProbabilityTable& p, const std::vector<MarginalBias>& biases) {
    const Scenario& s = p.scenario();
    auto e = p.entries();
    for (const auto& bias : biases) {
        const bool alice = bias.party == Party::Alice;
        if (bias.setting < 0 || bias.setting >= (alice ? s.inputs_a() : s.inputs_b()))
            throw ValidationError("bias setting out of range");
        const int n_other = alice ? s.inputs_b() : s.inputs_a();
        if (bias.other >= n_other) throw ValidationError("bias target setting out of range");
        for (int o = 0; o < n_other; ++o) {
            if (bias.other >= 0 && o != bias.other) continue;
            const int x = alice ? bias.setting : o, y = alice ? o : bias.setting;
            const int na = s.outputs_a(x), nb = s.outputs_b(y);
            const std::size_t off = s.block_offset(x, y);
            std::vector<double> blk(e.begin() + off, e.begin() + off + na * nb);
            bias_block(blk, na, nb, bias);
            std::copy(blk.begin(), blk.end(), e.begin() + off);
        }
    }
    return ProbabilityTable(s, e, 1e-9);
}

CountsTable simulate_counts(const ProbabilityTable& p0, const ShotPlan& plan) {
    plan.validate();
    const ProbabilityTable p = plan.biases.empty() ? p0 : apply_biases(p0, plan.biases);
    const Scenario& s = p.scenario();
    std::vector<std::uint64_t> n(s.full_dimension(), 0);
    const std::size_t pairs = static_cast<std::size_t>(s.inputs_a()) * s.inputs_b();
    parallel_for(
        pairs,
        [&](std::size_t k) {
            const int x = static_cast<int>(k) / s.inputs_b(), y = static_cast<int>(k) % s.inputs_b();
            auto eng = keyed_engine(plan.seed, {static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(y)});
            const std::size_t off = s.block_offset(x, y), m = static_cast<std::size_t>(s.outputs_a(x)) * s.outputs_b(y);
            double rest_p = 0.0;
            for (std::size_t i = 0; i < m; ++i) rest_p += p.entries()[off + i];
            std::uint64_t rest = plan.shots;
            // sequential binomials: n_i ~ Bin(rest, p_i / remaining mass)
            for (std::size_t i = 0; i + 1 < m && rest > 0; ++i) {
                double pi = p.entries()[off + i];
                double q = rest_p > 0 ? std::clamp(pi / rest_p, 0.0, 1.0) : 0.0;
                std::uint64_t c = q >= 1.0 ? rest : std::binomial_distribution<std::uint64_t>(rest, q)(eng);
                n[off + i] = c;
                rest -= c;
                rest_p -= pi;
            }
            n[off + m - 1] += rest;
        },
        plan.threads);
    return CountsTable(s, n);
}

CountsTable simulate_counts(const Realization& r, const ShotPlan& plan) { return simulate_counts(correlation(r), plan); }

}  // namespace bellscope
