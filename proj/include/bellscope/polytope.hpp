#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "bellscope/scenario.hpp"

namespace bellscope {

enum class Side { Max, Min };

struct DeterministicVertex {
    std::vector<int> out_a;
    std::vector<int> out_b;
};

// Vertex i has mixed-radix digits out_a[0], ..., out_a[n-1], out_b[0], ..., with out_b[last] fastest.
std::vector<DeterministicVertex> enumerate_vertices(const Scenario& s, std::size_t cap = 50'000'000);
DeterministicVertex vertex_at(const Scenario& s, std::size_t index);
std::vector<double> vertex_cg(const Scenario& s, const DeterministicVertex& v);

struct BoundResult {
    double value = 0.0;
    std::vector<std::size_t> saturating;  // vertex indices, ascending
    bool exact = false;                   // computed in integer arithmetic
};

BoundResult local_bound(const BellFunctional& f, Side side);
inline BoundResult local_bound_max(const BellFunctional& f) { return local_bound(f, Side::Max); }
inline BoundResult local_bound_min(const BellFunctional& f) { return local_bound(f, Side::Min); }

// f evaluated on every vertex, in vertex order.
std::vector<double> vertex_values(const BellFunctional& f);

struct FaceAnalysis {
    Side side = Side::Max;
    double bound = 0.0;
    std::vector<std::size_t> saturating;
    int affine_dimension = -1;   // of the face
    int spanned_dimension = 0;   // affinely independent saturating vertices
    bool is_facet = false;
};

FaceAnalysis face_analysis(const BellFunctional& f, Side side);

// If every value is p/q with q <= max_den, returns the least common denominator.
std::optional<std::int64_t> common_denominator(const std::vector<double>& values, std::int64_t max_den = 10000,
                                               std::int64_t max_lcm = 1'000'000'000);
// Best rational approximation with denominator <= max_den.
std::pair<std::int64_t, std::int64_t> rationalize(double v, std::int64_t max_den);

}  // namespace bellscope
