#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "haarwalk/measure.hpp"

namespace haarwalk {

enum class Verdict { aperiodic, not_aperiodic, undecided };
enum class VerdictMethod { exact_finite, rationalized_torus, declared_irrational };

/// A proper closed subgroup (listed for finite groups, described for the
/// torus) together with a coset shift containing the support.
struct CosetWitness {
    std::vector<GroupElement> subgroup;  // finite groups: full member list
    GroupElement coset_shift;
    std::string description;
};

struct AperiodicityVerdict {
    Verdict verdict = Verdict::undecided;
    VerdictMethod method = VerdictMethod::exact_finite;
    std::optional<CosetWitness> witness;
    std::string detail;
};

/// Arithmetic nature of one torus coordinate of one support atom. This is a
/// declaration, never a detection: floating-point values carry no reliable
/// number-theoretic structure, so rationals are given exactly and
/// irrationals are flagged by the caller.
struct CoordinateNumber {
    enum class Kind { Rational, Irrational, Unspecified } kind = Kind::Unspecified;
    std::int64_t num = 0;  // Rational only; reduced mod den into [0, den)
    std::int64_t den = 1;
    double raw = 0.0;  // Irrational / Unspecified payload

    static CoordinateNumber rational(std::int64_t num, std::int64_t den);
    static CoordinateNumber irrational(double value);
    static CoordinateNumber unspecified(double value);
    double value() const;
};

/// One declared torus support atom: its coordinates with arithmetic tags.
using DeclaredPoint = std::vector<CoordinateNumber>;

/// All pairwise differences of support atoms (contains 0, symmetric).
std::vector<GroupElement> difference_set(const AtomicMeasure& mu);

/// Closure of S under addition, on a finite group. For symmetric generating
/// sets containing 0 (difference sets always are) the generated semigroup
/// already is the generated subgroup; on a finite group the addition closure
/// of any set contains inverses as iterated sums, so this returns a
/// subgroup either way.
std::vector<GroupElement> generated_subgroup(const std::vector<GroupElement>& s,
                                             const GroupDescriptor& g);

/// Decide strict aperiodicity of an atomic probability measure.
/// Finite groups: exact. Torus: undecided unless coordinates are declared
/// (see the declared overload); this overload never guesses.
AperiodicityVerdict is_strictly_aperiodic(const AtomicMeasure& mu);

/// Torus variant with declared coordinates. All-rational supports reduce
/// exactly to a finite cyclic product. A factor whose differences contain a
/// (rational, irrational) pair generates a dense subgroup of that circle;
/// on the 1-dimensional torus that settles the question, in higher
/// dimension joint density is not implied and the verdict may be undecided.
AperiodicityVerdict is_strictly_aperiodic_torus(const GroupDescriptor& g,
                                                const std::vector<DeclaredPoint>& support);

/// Is every point of the group within eps of S? Exhaustive on finite
/// groups. On the torus the check runs over a covering grid at resolution
/// eps/4 and is one-sided: true is certified, false may be conservative
/// (and is certified whenever some grid point lies beyond eps of S).
bool is_eps_dense(const std::vector<GroupElement>& s, const GroupDescriptor& g, double eps);

/// Smallest m <= cap such that the support of the m-fold convolution power
/// is eps-dense. Requires strict aperiodicity (the hypothesis of the
/// support-density lemma); computed by sum-set iteration.
std::int64_t minimal_dense_power(const AtomicMeasure& mu, double eps, std::int64_t cap = 10000);

/// Is the support of mu_list[last] * ... * mu_list[0] eps-dense?
bool sequence_support_dense(std::span<const AtomicMeasure> mus, double eps,
                            std::size_t atom_cap = kDefaultAtomCap);

/// Is supp(mu) contained in supp(mu_tilde) thickened by radius eps_tilde?
bool support_inclusion_with_radius(const AtomicMeasure& mu, const AtomicMeasure& mu_tilde,
                                   double eps_tilde);

}  // namespace haarwalk
