#pragma once

#include <span>
#include <utility>
#include <vector>

#include "haarwalk/measure.hpp"

namespace haarwalk {

/// Absolute tolerance for W1 comparisons on finite groups.
inline constexpr double kW1TolFinite = 1e-10;
/// Absolute tolerance for W1 comparisons on the torus.
inline constexpr double kW1TolTorus = 1e-8;

/// A coupling between two atomic measures: flows indexed by (source atom,
/// target atom), with matching marginals and cost = sum of flow * distance.
struct TransportPlan {
    struct Flow {
        std::size_t source_atom;
        std::size_t target_atom;
        double mass;
    };
    AtomicMeasure source;
    AtomicMeasure target;
    std::vector<Flow> flows;
    double cost = 0.0;

    /// Recompute marginal and cost defects; used by tests and verification.
    double max_marginal_defect() const;
    double cost_defect() const;
};

/// Exact minimum-cost transport between two atomic measures of equal total
/// mass (within 1e-10), solved by the transportation simplex on the complete
/// bipartite atom graph with group-metric costs. Returns the optimal value
/// and one optimal plan (ties between optimal plans are not canonicalized).
std::pair<double, TransportPlan> w1_exact(const AtomicMeasure& mu, const AtomicMeasure& nu);

/// W1 distance from a probability measure on a finite group to the uniform
/// (Haar) measure.
double w1_to_haar(const AtomicMeasure& nu);

/// Certified upper bound for W1 to Haar on the torus: snap atoms to the
/// uniform grid with grid_n points per axis, transport exactly, and pay the
/// snap radius twice. The true distance never exceeds the returned value.
double w1_haar_upper_bound_torus(const AtomicMeasure& nu, int grid_n,
                                 std::size_t atom_cap = kDefaultAtomCap);

/// Worst-case Wasserstein contraction of a window of steps on a finite
/// group: the largest W1 distance between the images of two Dirac starting
/// measures under the window's convolution. By convexity of W1 in each
/// argument this also bounds the images of arbitrary starting measures.
/// An empty window leaves Diracs untouched and returns the group diameter.
double contraction_coefficient(std::span<const AtomicMeasure> window, const GroupDescriptor& g);

}  // namespace haarwalk
