#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "haarwalk/rng.hpp"

namespace haarwalk {

enum class GroupKind { FiniteAbelian, Torus, DyadicCantor, PAdicInt };

/// A point of a group. Finite variants store canonical digits (residues);
/// the torus stores reals in [0, 1). Exactly one of the two vectors is used.
struct GroupElement {
    std::vector<std::int64_t> digits;
    std::vector<double> reals;

    bool operator==(const GroupElement&) const = default;
    auto operator<=>(const GroupElement&) const = default;
};

/// One of four concrete compact abelian groups, with its shift-invariant
/// metric and Haar structure:
///
///   FiniteAbelian(m_1..m_d)  product of cyclic groups, sup of normalized
///                            cyclic distances min(|i-j|, m-|i-j|)/m
///   Torus(d)                 [0,1)^d mod 1, sup of circle distances
///   DyadicCantor(k)          (Z/2)^k, distance 2^-j at the first (1-based)
///                            differing bit
///   PAdicInt(p, k)           Z/p^k with carry addition, distance p^-j at the
///                            first (1-based) differing base-p digit
///
/// All four metrics are shift invariant; the three finite variants admit
/// exact arithmetic throughout.
class GroupDescriptor {
public:
    static GroupDescriptor finite_abelian(std::vector<std::int64_t> moduli);
    static GroupDescriptor torus(int dimension);
    static GroupDescriptor dyadic_cantor(int depth);
    static GroupDescriptor padic_int(std::int64_t prime, int depth);

    GroupKind kind() const { return kind_; }
    bool is_finite() const { return kind_ != GroupKind::Torus; }
    /// Coordinate count: moduli size, torus dimension, or digit depth.
    int arity() const { return arity_; }
    const std::vector<std::int64_t>& moduli() const { return moduli_; }
    std::int64_t prime() const { return prime_; }

    /// Number of elements (finite variants only; throws on the torus).
    std::uint64_t size() const;

    GroupElement zero() const;
    GroupElement add(const GroupElement& x, const GroupElement& y) const;
    /// In-place x += y; avoids allocation in simulation loops.
    void add_in_place(GroupElement& x, const GroupElement& y) const;
    GroupElement neg(const GroupElement& x) const;
    GroupElement sub(const GroupElement& x, const GroupElement& y) const;

    double metric(const GroupElement& x, const GroupElement& y) const;
    double diameter() const;
    /// Smallest positive distance between two elements (finite variants).
    double min_positive_distance() const;
    /// Haar mass of a closed metric ball of radius r (center-independent).
    double haar_ball_mass(double r) const;

    GroupElement haar_sample(RngStream& rng) const;

    /// Mixed-radix enumeration of finite groups.
    GroupElement element_at(std::uint64_t index) const;
    std::uint64_t index_of(const GroupElement& x) const;

    /// Membership / canonical-form check, used to validate foreign elements.
    bool contains(const GroupElement& x) const;
    void require_element(const GroupElement& x, const char* where) const;

    bool operator==(const GroupDescriptor& other) const = default;
    std::string to_string() const;

    /// Canonical real in [0, 1); maps 1.0-epsilon artifacts of mod onto 0.
    static double wrap_unit(double v);
    /// Circle distance between two canonical reals.
    static double circle_distance(double a, double b);

private:
    GroupDescriptor() = default;

    GroupKind kind_ = GroupKind::FiniteAbelian;
    int arity_ = 0;
    std::vector<std::int64_t> moduli_;  // per-digit bases for finite variants
    std::int64_t prime_ = 0;            // PAdicInt only
};

}  // namespace haarwalk
