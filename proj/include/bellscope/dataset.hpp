#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "bellscope/scenario.hpp"

namespace bellscope {

// One row of the facet catalogue for the 3-input 3-output scenario,
// with the reference values reported alongside it.
struct InequalityRecord {
    int index = 0;
    BellFunctional functional;  // CG form, declared local bounds attached
    std::string reducible_scenario;
    bool quantum_min_is_local = false;  // no quantum violation on the min side

    double reported_quantum_max = 0.0;
    double reported_state_visibility_max = 0.0;
    double reported_visibility_max = 0.0;
    std::optional<double> reported_quantum_min;
    std::optional<double> reported_state_visibility_min;
    std::optional<double> reported_visibility_min;
    int reported_d_min = 0;
    std::string notes;
};

const std::vector<InequalityRecord>& table1();
const InequalityRecord& table1_row(int n);

// sum over rows and entries of (row * 131 + entry + 1) * coefficient
std::int64_t table1_checksum();

// (1/9) sum over settings of P((xy + a + b) mod 3 = 0), local bound 2/3
BellFunctional i3plus();

BellFunctional parse_functional(std::istream& in);
std::string serialize_functional(const BellFunctional& f, const std::vector<std::string>& comments = {});

}  // namespace bellscope
