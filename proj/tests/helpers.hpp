#pragma once

// Shared test utilities: random instance generators (dyadic weights so
// probability masses sum to exactly 1.0) and independent oracles used to
// freeze expected values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "haarwalk/group.hpp"
#include "haarwalk/measure.hpp"
#include "haarwalk/rng.hpp"

namespace haarwalk::testutil {

/// Random finite group with at most max_size elements; mixes all three
/// finite variants.
inline GroupDescriptor random_finite_group(RngStream& rng, std::uint64_t max_size = 64) {
    switch (rng.uniform_index(4)) {
        case 0: {  // cyclic
            const auto m = 2 + rng.uniform_index(max_size - 1);
            return GroupDescriptor::finite_abelian({static_cast<std::int64_t>(m)});
        }
        case 1: {  // product of small cyclics
            std::vector<std::int64_t> moduli;
            std::uint64_t size = 1;
            do {
                const auto m = 2 + rng.uniform_index(5);
                if (size * m > max_size) break;
                size *= m;
                moduli.push_back(static_cast<std::int64_t>(m));
            } while (rng.uniform_index(3) != 0);
            if (moduli.empty()) moduli.push_back(2);
            return GroupDescriptor::finite_abelian(moduli);
        }
        case 2: {  // dyadic cantor
            int depth = 1;
            while ((1ull << (depth + 1)) <= max_size && rng.uniform_index(2) == 0) ++depth;
            return GroupDescriptor::dyadic_cantor(depth);
        }
        default: {  // p-adic
            const std::int64_t primes[] = {2, 3, 5, 7};
            const auto p = primes[rng.uniform_index(4)];
            int depth = 1;
            std::uint64_t size = static_cast<std::uint64_t>(p);
            while (size * static_cast<std::uint64_t>(p) <= max_size && rng.uniform_index(2) == 0)
                size *= static_cast<std::uint64_t>(p), ++depth;
            return GroupDescriptor::padic_int(p, depth);
        }
    }
}

/// Random probability measure with dyadic weights (numerators over 2^12),
/// so weights sum to exactly 1.0 in double arithmetic.
inline AtomicMeasure random_probability(const GroupDescriptor& g, RngStream& rng,
                                        std::size_t max_atoms = 4,
                                        std::int64_t min_numerator = 1) {
    const std::int64_t denom = 1 << 12;
    const std::size_t limit =
        g.is_finite() ? std::min<std::uint64_t>(max_atoms, g.size()) : max_atoms;
    const std::size_t k = 1 + rng.uniform_index(limit);

    std::vector<GroupElement> points;
    while (points.size() < k) {
        auto p = g.haar_sample(rng);
        if (std::find(points.begin(), points.end(), p) == points.end())
            points.push_back(std::move(p));
    }
    // random composition of denom into k parts, each >= min_numerator
    std::vector<std::int64_t> cut;
    const std::int64_t free_mass = denom - static_cast<std::int64_t>(k) * min_numerator;
    for (std::size_t i = 0; i + 1 < k; ++i)
        cut.push_back(static_cast<std::int64_t>(rng.uniform_index(free_mass + 1)));
    cut.push_back(0);
    cut.push_back(free_mass);
    std::sort(cut.begin(), cut.end());
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < k; ++i) {
        const std::int64_t numerator = min_numerator + (cut[i + 1] - cut[i]);
        atoms.push_back({points[i], static_cast<double>(numerator) / static_cast<double>(denom)});
    }
    return AtomicMeasure::from_atoms(g, std::move(atoms));
}

/// Pairwise sum-set, the oracle for supports of convolutions.
inline std::vector<GroupElement> sumset_oracle(const GroupDescriptor& g,
                                               std::vector<GroupElement> a,
                                               std::vector<GroupElement> b) {
    std::vector<GroupElement> out;
    for (const auto& x : a)
        for (const auto& y : b) out.push_back(g.add(x, y));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Exact W1 on the circle between an atomic probability measure and
/// Lebesgue: with F the cdf from 0 and g(t) = F(t) - t, the distance is
/// min_c int |g - c| dt. Since g has slope -1 between atoms, the integral
/// is a sum of integrals of |y - c| over intervals in y, and the optimal c
/// is the median of their union.
inline double circle_w1_to_lebesgue(const AtomicMeasure& nu) {
    struct Seg {
        double lo, hi;  // y-interval swept by g on one linear piece
    };
    std::vector<std::pair<double, double>> atoms;  // position, weight
    for (const auto& a : nu.atoms()) atoms.push_back({a.point.reals[0], a.weight});
    std::sort(atoms.begin(), atoms.end());

    std::vector<Seg> segs;
    double f = 0.0;   // running F(t)
    double t = 0.0;
    for (const auto& [pos, w] : atoms) {
        if (pos > t) segs.push_back({f - pos, f - t});  // g falls from f-t to f-pos
        f += w;
        t = pos;
    }
    if (t < 1.0) segs.push_back({f - 1.0, f - t});

    // median of the y-value distribution (intervals may overlap and stack);
    // sweep endpoint events until half the total length is covered
    std::vector<std::pair<double, int>> events;
    for (const auto& s : segs) {
        events.push_back({s.lo, +1});
        events.push_back({s.hi, -1});
    }
    std::sort(events.begin(), events.end());
    double c = events.back().first;
    double cum = 0.0, prev = events.front().first;
    int active = 0;
    for (const auto& [y, e] : events) {
        const double add = static_cast<double>(active) * (y - prev);
        if (active > 0 && cum + add >= 0.5) {
            c = prev + (0.5 - cum) / static_cast<double>(active);
            break;
        }
        cum += add;
        prev = y;
        active += e;
    }
    double total = 0.0;
    for (const auto& s : segs) {
        // integral of |y - c| over [lo, hi]
        auto prim = [c](double y) { return 0.5 * (y - c) * std::fabs(y - c); };
        total += std::fabs(prim(s.hi) - prim(s.lo));
    }
    return total;
}

}  // namespace haarwalk::testutil
