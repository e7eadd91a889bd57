#include "haarwalk/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haarwalk/errors.hpp"

namespace haarwalk {

namespace detail {

void CompensatedSum::add_product(double a, double b) {
    const double p = a * b;
    const double err = std::fma(a, b, -p);
    add(p);
    comp += err;
}

}  // namespace detail

namespace {

double checked_total(const std::vector<Atom>& atoms) {
    detail::CompensatedSum s;
    for (const auto& a : atoms) s.add(a.weight);
    return s.value();
}

/// Sort atoms and merge duplicates: exact identity on finite groups, metric
/// proximity (kTorusMergeTol) on the torus. Zero-weight atoms are dropped.
std::vector<Atom> canonicalize(const GroupDescriptor& g, std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
        g.require_element(a.point, "measure atom");
        if (!(a.weight >= 0.0)) throw ConfigError("atom weights must be nonnegative");
    }
    std::erase_if(atoms, [](const Atom& a) { return a.weight == 0.0; });
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.point < b.point; });

    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    if (g.is_finite()) {
        for (auto& a : atoms) {
            if (!merged.empty() && merged.back().point == a.point) {
                detail::CompensatedSum s;
                s.add(merged.back().weight);
                s.add(a.weight);
                merged.back().weight = s.value();
            } else {
                merged.push_back(std::move(a));
            }
        }
        return merged;
    }

    // Torus: cluster while scanning in lexicographic order; the scan window
    // on the first coordinate bounds the sup metric from below, except for
    // the 0/1 seam, which is handled by a final wrap pass.
    for (auto& a : atoms) {
        bool absorbed = false;
        for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
            if (a.point.reals[0] - it->point.reals[0] > kTorusMergeTol) break;
            if (g.metric(a.point, it->point) <= kTorusMergeTol) {
                it->weight += a.weight;
                absorbed = true;
                break;
            }
        }
        if (!absorbed) merged.push_back(std::move(a));
    }
    if (merged.size() >= 2) {
        // wrap seam: atoms near 1 may coincide with atoms near 0
        std::size_t lo = 0;
        while (lo + 1 < merged.size() && merged[lo].point.reals[0] <= kTorusMergeTol) ++lo;
        for (std::size_t hi = merged.size(); hi-- > 0;) {
            if (1.0 - merged[hi].point.reals[0] > kTorusMergeTol) break;
            for (std::size_t i = 0; i < lo && i < hi; ++i) {
                if (merged[i].weight > 0.0 && merged[hi].weight > 0.0 &&
                    g.metric(merged[i].point, merged[hi].point) <= kTorusMergeTol) {
                    merged[i].weight += merged[hi].weight;
                    merged[hi].weight = 0.0;
                    break;
                }
            }
        }
        std::erase_if(merged, [](const Atom& a) { return a.weight == 0.0; });
    }
    return merged;
}

}  // namespace

AtomicMeasure::AtomicMeasure(GroupDescriptor g, std::vector<Atom> atoms, double total)
    : group_(std::move(g)), atoms_(std::move(atoms)), total_mass_(total) {}

AtomicMeasure AtomicMeasure::dirac(const GroupDescriptor& g, GroupElement at) {
    g.require_element(at, "dirac");
    return AtomicMeasure(g, {Atom{std::move(at), 1.0}}, 1.0);
}

AtomicMeasure AtomicMeasure::uniform(const GroupDescriptor& g) {
    if (!g.is_finite()) throw ConfigError("uniform atomic measure needs a finite group");
    const std::uint64_t n = g.size();
    if (n > kDefaultAtomCap) throw ResolutionError("group too large for a uniform atomic measure");
    const double w = 1.0 / static_cast<double>(n);
    std::vector<Atom> atoms;
    atoms.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) atoms.push_back({g.element_at(i), w});
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.point < b.point; });
    return AtomicMeasure(g, std::move(atoms), 1.0);
}

AtomicMeasure AtomicMeasure::from_atoms(const GroupDescriptor& g, std::vector<Atom> atoms) {
    auto canon = canonicalize(g, std::move(atoms));
    const double total = checked_total(canon);
    return AtomicMeasure(g, std::move(canon), total);
}

AtomicMeasure AtomicMeasure::empirical(const GroupDescriptor& g,
                                       std::span<const GroupElement> samples) {
    if (samples.empty()) throw ConfigError("empirical measure needs at least one sample");
    const double w = 1.0 / static_cast<double>(samples.size());
    std::vector<Atom> atoms;
    atoms.reserve(samples.size());
    for (const auto& s : samples) atoms.push_back({s, w});
    auto canon = canonicalize(g, std::move(atoms));
    return AtomicMeasure(g, std::move(canon), 1.0);
}

AtomicMeasure AtomicMeasure::zero(const GroupDescriptor& g) {
    return AtomicMeasure(g, {}, 0.0);
}

bool AtomicMeasure::is_probability() const {
    return std::fabs(total_mass_ - 1.0) <= kMassTol;
}

bool AtomicMeasure::operator==(const AtomicMeasure& other) const {
    if (!(group_ == other.group_) || atoms_.size() != other.atoms_.size()) return false;
    for (std::size_t i = 0; i < atoms_.size(); ++i)
        if (atoms_[i].point != other.atoms_[i].point || atoms_[i].weight != other.atoms_[i].weight)
            return false;
    return true;
}

double AtomicMeasure::mass_of(const std::function<bool(const GroupElement&)>& pred) const {
    detail::CompensatedSum s;
    for (const auto& a : atoms_)
        if (pred(a.point)) s.add(a.weight);
    return s.value();
}

double AtomicMeasure::ball_mass(const GroupElement& x, double r) const {
    detail::CompensatedSum s;
    for (const auto& a : atoms_)
        if (group_.metric(a.point, x) <= r) s.add(a.weight);
    return s.value();
}

double AtomicMeasure::open_ball_mass(const GroupElement& x, double r) const {
    detail::CompensatedSum s;
    for (const auto& a : atoms_)
        if (group_.metric(a.point, x) < r) s.add(a.weight);
    return s.value();
}

double AtomicMeasure::integrate(const std::function<double(const GroupElement&)>& f) const {
    detail::CompensatedSum s;
    for (const auto& a : atoms_) s.add_product(a.weight, f(a.point));
    return s.value();
}

std::string AtomicMeasure::to_string() const {
    std::ostringstream os;
    os << "measure on " << group_.to_string() << " with " << atoms_.size()
       << " atoms, mass " << total_mass_;
    return os.str();
}

AtomicMeasure convolve(const AtomicMeasure& mu, const AtomicMeasure& nu, std::size_t atom_cap) {
    if (!(mu.group() == nu.group())) throw ConfigError("convolve: group mismatch");
    const GroupDescriptor& g = mu.group();

    std::uint64_t dense_size = 0;
    if (g.is_finite()) {
        try {
            dense_size = g.size();
        } catch (const ResolutionError&) {
            dense_size = 0;  // beyond enumeration; use the sparse path
        }
    }
    if (dense_size > 0) {
        const std::uint64_t n = dense_size;
        if (n <= atom_cap) {
            // dense accumulation with compensated per-slot sums
            std::vector<detail::CompensatedSum> slots(n);
            std::vector<bool> hit(n, false);
            for (const auto& a : mu.atoms()) {
                for (const auto& b : nu.atoms()) {
                    const std::uint64_t idx = g.index_of(g.add(a.point, b.point));
                    slots[idx].add_product(a.weight, b.weight);
                    hit[idx] = true;
                }
            }
            std::vector<Atom> atoms;
            for (std::uint64_t i = 0; i < n; ++i)
                if (hit[i]) atoms.push_back({g.element_at(i), slots[i].value()});
            std::sort(atoms.begin(), atoms.end(),
                      [](const Atom& x, const Atom& y) { return x.point < y.point; });
            detail::CompensatedSum total;
            for (const auto& a : atoms) total.add(a.weight);
            return AtomicMeasure(g, std::move(atoms), total.value());
        }
    }

    if (mu.atom_count() != 0 && nu.atom_count() > atom_cap / mu.atom_count())
        throw ResolutionError("convolve: output would exceed the atom cap (" +
                              std::to_string(atom_cap) + "); use Monte Carlo sampling instead");

    std::vector<Atom> pairs;
    pairs.reserve(mu.atom_count() * nu.atom_count());
    for (const auto& a : mu.atoms())
        for (const auto& b : nu.atoms())
            pairs.push_back({g.add(a.point, b.point), a.weight * b.weight});
    return AtomicMeasure::from_atoms(g, std::move(pairs));
}

AtomicMeasure convolve_power(const AtomicMeasure& mu, std::int64_t n, std::size_t atom_cap) {
    if (n < 0) throw ConfigError("convolution power needs n >= 0");
    AtomicMeasure acc = AtomicMeasure::dirac(mu.group(), mu.group().zero());
    for (std::int64_t i = 0; i < n; ++i) acc = convolve(mu, acc, atom_cap);
    return acc;
}

AtomicMeasure convolve_sequence(std::span<const AtomicMeasure> mus, std::size_t atom_cap) {
    if (mus.empty()) throw ConfigError("convolve_sequence needs at least one measure");
    AtomicMeasure acc = mus[0];
    for (std::size_t i = 1; i < mus.size(); ++i) acc = convolve(mus[i], acc, atom_cap);
    return acc;
}

std::vector<GroupElement> support(const AtomicMeasure& nu) {
    std::vector<GroupElement> out;
    out.reserve(nu.atom_count());
    for (const auto& a : nu.atoms()) out.push_back(a.point);
    return out;
}

double total_variation(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    if (!(mu.group() == nu.group())) throw ConfigError("total_variation: group mismatch");
    if (!mu.is_probability() || !nu.is_probability())
        throw ConfigError("total_variation needs probability measures");
    const GroupDescriptor& g = mu.group();
    const auto& a = mu.atoms();
    const auto& b = nu.atoms();
    const bool torus = !g.is_finite();
    auto same = [&](const GroupElement& x, const GroupElement& y) {
        return torus ? g.metric(x, y) <= kTorusMergeTol : x == y;
    };
    detail::CompensatedSum s;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (same(a[i].point, b[j].point)) {
            s.add(std::fabs(a[i].weight - b[j].weight));
            ++i, ++j;
        } else if (a[i].point < b[j].point) {
            s.add(a[i].weight);
            ++i;
        } else {
            s.add(b[j].weight);
            ++j;
        }
    }
    for (; i < a.size(); ++i) s.add(a[i].weight);
    for (; j < b.size(); ++j) s.add(b[j].weight);
    return 0.5 * s.value();
}

AtomicMeasure translate(const AtomicMeasure& mu, const GroupElement& shift) {
    std::vector<Atom> atoms;
    atoms.reserve(mu.atom_count());
    for (const auto& a : mu.atoms()) atoms.push_back({mu.group().add(a.point, shift), a.weight});
    return AtomicMeasure::from_atoms(mu.group(), std::move(atoms));
}

AtomicMeasure scale(const AtomicMeasure& mu, double c) {
    if (!(c >= 0.0)) throw ConfigError("scale factor must be nonnegative");
    std::vector<Atom> atoms;
    atoms.reserve(mu.atom_count());
    for (const auto& a : mu.atoms()) atoms.push_back({a.point, a.weight * c});
    return AtomicMeasure::from_atoms(mu.group(), std::move(atoms));
}

AtomicMeasure add_measures(const AtomicMeasure& a, const AtomicMeasure& b) {
    if (!(a.group() == b.group())) throw ConfigError("add_measures: group mismatch");
    std::vector<Atom> atoms(a.atoms().begin(), a.atoms().end());
    atoms.insert(atoms.end(), b.atoms().begin(), b.atoms().end());
    return AtomicMeasure::from_atoms(a.group(), std::move(atoms));
}

SamplerMeasure SamplerMeasure::haar(const GroupDescriptor& g) {
    return {g, [g](RngStream& rng) { return g.haar_sample(rng); }, {}};
}

SamplerMeasure SamplerMeasure::from_atomic(const AtomicMeasure& mu) {
    AtomicMeasure copy = mu;
    return {mu.group(), [copy](RngStream& rng) { return sample_atom(copy, rng); }, support(mu)};
}

GroupElement sample_atom(const AtomicMeasure& mu, RngStream& rng) {
    if (mu.is_zero()) throw ConfigError("cannot sample the zero measure");
    const double u = rng.uniform_double() * mu.total_mass();
    double cum = 0.0;
    for (const auto& a : mu.atoms()) {
        cum += a.weight;
        if (u < cum) return a.point;
    }
    return mu.atoms().back().point;
}

MeasureFamily::MeasureFamily(std::vector<AtomicMeasure> members) : members_(std::move(members)) {
    if (members_.empty()) throw ConfigError("measure family must be nonempty");
    for (const auto& m : members_) {
        if (!(m.group() == members_.front().group()))
            throw ConfigError("measure family members must share one group");
        if (!m.is_probability())
            throw ConfigError("measure family members must be probability measures");
    }
}

}  // namespace haarwalk
