#pragma once

#include <cstdint>
#include <vector>

#include "bellscope/quantum.hpp"
#include "bellscope/scenario.hpp"

namespace bellscope {

// Shifts one party's marginal P(outcome | setting) by delta at the given
// setting of the other party (or at all of them when other < 0). The other
// party's marginal is left unchanged.
struct MarginalBias {
    Party party = Party::Alice;
    int setting = 0;
    int outcome = 0;
    int other = -1;
    double delta = 0.0;
};

struct ShotPlan {
    std::uint64_t shots = 10000;  // per setting pair
    std::uint64_t seed = 1;
    std::vector<MarginalBias> biases;
    int threads = 0;

    void validate() const;
};

// Biased table; throws ValidationError if a shift leaves [0, 1].
ProbabilityTable apply_biases(const ProbabilityTable& p, const std::vector<MarginalBias>& biases);

// Multinomial draws per setting pair, keyed by (seed, x, y).
CountsTable simulate_counts(const ProbabilityTable& p, const ShotPlan& plan);
CountsTable simulate_counts(const Realization& r, const ShotPlan& plan);

}  // namespace bellscope
