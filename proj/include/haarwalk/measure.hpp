#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haarwalk/group.hpp"

namespace haarwalk {

struct Atom {
    GroupElement point;
    double weight = 0.0;
};

/// Default cap on the atom count a convolution may materialize.
inline constexpr std::size_t kDefaultAtomCap = 1'000'000;

/// Tolerance for "weights sum to the stated total mass".
inline constexpr double kMassTol = 1e-12;

/// Two torus atoms closer than this merge into one.
inline constexpr double kTorusMergeTol = 1e-12;

/// A finitely supported nonnegative measure. Atoms are kept sorted with
/// strictly positive weights; sub-probability masses are first class (the
/// zero measure is allowed as the empty atom list). On the torus, atoms
/// within kTorusMergeTol of each other in the group metric are merged, so
/// distinct nearby irrational atoms survive exactly.
class AtomicMeasure {
public:
    static AtomicMeasure dirac(const GroupDescriptor& g, GroupElement at);
    static AtomicMeasure uniform(const GroupDescriptor& g);  // finite groups
    static AtomicMeasure from_atoms(const GroupDescriptor& g, std::vector<Atom> atoms);
    static AtomicMeasure empirical(const GroupDescriptor& g, std::span<const GroupElement> samples);
    static AtomicMeasure zero(const GroupDescriptor& g);

    const GroupDescriptor& group() const { return group_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t atom_count() const { return atoms_.size(); }
    double total_mass() const { return total_mass_; }
    bool is_probability() const;
    bool is_zero() const { return atoms_.empty(); }

    /// Exact on finite groups; bitwise atom identity on the torus.
    bool operator==(const AtomicMeasure& other) const;

    double mass_of(const std::function<bool(const GroupElement&)>& pred) const;
    /// Mass of the closed metric ball of radius r about x.
    double ball_mass(const GroupElement& x, double r) const;
    /// Mass of the open metric ball of radius r about x.
    double open_ball_mass(const GroupElement& x, double r) const;
    double integrate(const std::function<double(const GroupElement&)>& f) const;

    std::string to_string() const;

private:
    friend AtomicMeasure convolve(const AtomicMeasure&, const AtomicMeasure&, std::size_t);
    AtomicMeasure(GroupDescriptor g, std::vector<Atom> atoms, double total);

    GroupDescriptor group_;
    std::vector<Atom> atoms_;
    double total_mass_ = 0.0;
};

/// Distribution of the sum of independent draws. Atom counts above atom_cap
/// are refused before materialization.
AtomicMeasure convolve(const AtomicMeasure& mu, const AtomicMeasure& nu,
                       std::size_t atom_cap = kDefaultAtomCap);

/// n-fold convolution power; n = 0 is the Dirac mass at 0.
AtomicMeasure convolve_power(const AtomicMeasure& mu, std::int64_t n,
                             std::size_t atom_cap = kDefaultAtomCap);

/// Left fold of convolve over a nonempty list.
AtomicMeasure convolve_sequence(std::span<const AtomicMeasure> mus,
                                std::size_t atom_cap = kDefaultAtomCap);

std::vector<GroupElement> support(const AtomicMeasure& nu);

/// Total variation between probability measures, in [0, 1].
double total_variation(const AtomicMeasure& mu, const AtomicMeasure& nu);

/// Pushforward under x -> x + shift.
AtomicMeasure translate(const AtomicMeasure& mu, const GroupElement& shift);

/// Same atoms with weights scaled by c >= 0.
AtomicMeasure scale(const AtomicMeasure& mu, double c);

/// Atomwise sum of two measures over one group.
AtomicMeasure add_measures(const AtomicMeasure& a, const AtomicMeasure& b);

/// A measure usable only through sampling, for torus Monte Carlo runs.
struct SamplerMeasure {
    GroupDescriptor group;
    std::function<GroupElement(RngStream&)> draw;
    /// Empty means full support (e.g. Haar); otherwise every draw lies here.
    std::vector<GroupElement> declared_support;

    static SamplerMeasure haar(const GroupDescriptor& g);
    static SamplerMeasure from_atomic(const AtomicMeasure& mu);
};

/// Draw one point from an atomic probability measure by inverse CDF.
GroupElement sample_atom(const AtomicMeasure& mu, RngStream& rng);

/// A finite family of probability measures over one group. Finite families
/// are weak-* compact, so schedules drawn from one satisfy the compactness
/// hypotheses of the convergence results this library checks.
class MeasureFamily {
public:
    explicit MeasureFamily(std::vector<AtomicMeasure> members);
    const std::vector<AtomicMeasure>& members() const { return members_; }
    const AtomicMeasure& operator[](std::size_t i) const { return members_[i]; }
    std::size_t size() const { return members_.size(); }
    const GroupDescriptor& group() const { return members_.front().group(); }

private:
    std::vector<AtomicMeasure> members_;
};

namespace detail {
/// Error-free-transform accumulator: compensated sums of products, exact to
/// the final rounding for desk-scale inputs.
struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    void add_product(double a, double b);
    double value() const { return sum + comp; }
};
}  // namespace detail

}  // namespace haarwalk
