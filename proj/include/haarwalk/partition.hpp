#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "haarwalk/measure.hpp"

namespace haarwalk {

/// One cell of a wide-set partition. Finite groups list members explicitly;
/// the torus uses half-open boxes (which are sup-metric balls). Every cell
/// carries two verified ball certificates:
///   - it is contained in the closed ball of radius eps about outer_center,
///   - it contains the open ball of radius eps/3 about inner_center,
/// and, beyond those, has diameter at most eps, which is what makes the
/// within-cell coupling in the decomposition cost at most eps.
struct PartitionCell {
    std::vector<std::uint64_t> members;  // finite groups: element indices
    std::vector<double> box_lo, box_hi;  // torus: half-open box per axis
    GroupElement outer_center;
    GroupElement inner_center;
    double haar_mass = 0.0;
};

class WideSetPartition {
public:
    /// Partition the group into eps-wide cells. Throws ResolutionError when
    /// no construction passes verification at this resolution.
    static WideSetPartition build(const GroupDescriptor& g, double eps);

    const GroupDescriptor& group() const { return group_; }
    double epsilon() const { return eps_; }
    const std::vector<PartitionCell>& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_.size(); }

    /// Index of the cell containing x.
    std::size_t cell_of(const GroupElement& x) const;

    /// Re-check both ball certificates, the diameter bound, exact coverage,
    /// and that cell masses sum to 1. Throws on any failure.
    void verify() const;

private:
    WideSetPartition(GroupDescriptor g, double eps) : group_(std::move(g)), eps_(eps) {}

    GroupDescriptor group_;
    double eps_;
    std::vector<PartitionCell> cells_;
    std::vector<std::uint32_t> cell_index_;  // finite groups: element -> cell
};

/// Uniform lower bound, over all centers x, of nu(open ball(x, eps/3)).
/// Every eps-wide set contains such a ball, so every eps-wide set carries at
/// least this much nu-mass. Zero is a legal output: it means the walk has
/// not yet spread over the group at this resolution. On the torus the bound
/// is grid-certified and one-sided (never too large).
double wide_set_mass_lower_bound(const AtomicMeasure& nu, double eps);

/// Split nu = nu0 + nu1 along the partition so that nu1(Q_j) = delta *
/// haar(Q_j) for every cell. nu1 has total mass delta and, rescaled to a
/// probability, sits within eps of Haar via the cell-by-cell coupling.
/// Requires delta <= nu(Q_j)/haar(Q_j) for every cell and positive nu-mass
/// in every cell.
std::pair<AtomicMeasure, AtomicMeasure> decompose(const AtomicMeasure& nu,
                                                  const WideSetPartition& partition,
                                                  double delta);

struct ContractionStage {
    std::size_t window_begin = 0;  // schedule indices [begin, end)
    std::size_t window_end = 0;
    double window_delta = 0.0;    // uniform mass bound of this window alone
    double extracted_mass = 0.0;  // delta * (1-delta)^(j-1)
    double residual_mass = 0.0;   // (1-delta)^j
};

/// The constructive convergence certificate: after m*r scheduled steps, any
/// starting measure lands within (diameter + 1) * eps of Haar in W1.
struct ContractionCertificate {
    std::size_t m = 0;         // window length found adaptively
    std::size_t rounds = 0;    // r
    double delta = 0.0;        // uniform wide-set mass bound used throughout
    double epsilon = 0.0;
    double bound = 0.0;        // (diameter + 1) * eps
    double final_w1 = 0.0;     // exact W1 of the full pushforward, <= bound
    std::size_t steps_used = 0;  // m * r
    std::vector<ContractionStage> stages;

    std::string to_string() const;
};

struct CertificateOptions {
    std::size_t window_cap = 512;  // largest m tried in the adaptive search
    std::size_t atom_cap = kDefaultAtomCap;
};

/// Run the constructive proof on a concrete schedule: find a window length m
/// whose composite spreads mass over every eps/3-ball, extract a delta slice
/// of Haar r = ceil(log_{1-delta}(eps)) + 1 times, and verify the resulting
/// bound against the exact pushforward. The schedule must supply m*r steps.
ContractionCertificate contraction_certificate(std::span<const AtomicMeasure> schedule,
                                               const AtomicMeasure& nu, double eps,
                                               const CertificateOptions& opts = {});

}  // namespace haarwalk
