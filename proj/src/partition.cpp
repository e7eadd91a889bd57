#include "haarwalk/partition.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haarwalk/aperiodicity.hpp"
#include "haarwalk/errors.hpp"
#include "haarwalk/wasserstein.hpp"

namespace haarwalk {

namespace {

/// Split modulus m into contiguous arcs with lengths in [len_min, len_max].
/// Returns arc lengths, or empty if infeasible.
std::vector<std::int64_t> arc_lengths(std::int64_t m, std::int64_t len_min,
                                      std::int64_t len_max) {
    len_max = std::min(len_max, m);
    if (len_min > len_max) return {};
    // prefer the finest feasible split
    const std::int64_t q_hi = m / len_min;
    const std::int64_t q_lo = (m + len_max - 1) / len_max;
    for (std::int64_t q = q_hi; q >= q_lo; --q) {
        std::vector<std::int64_t> lens(static_cast<std::size_t>(q), m / q);
        for (std::int64_t i = 0; i < m % q; ++i) ++lens[static_cast<std::size_t>(i)];
        bool ok = true;
        for (auto l : lens) ok = ok && l >= len_min && l <= len_max;
        if (ok) return lens;
    }
    return {};
}

struct AxisCells {
    // per cell: first residue, length, center residue, inner radius residues
    std::vector<std::int64_t> start, len, center;
};

AxisCells axis_partition(std::int64_t m, double eps) {
    const double a = eps * static_cast<double>(m);
    // open ball of radius eps/3 covers residues j with j/m < eps/3
    std::int64_t r_in = static_cast<std::int64_t>(std::ceil(a / 3.0)) - 1;
    while (static_cast<double>(r_in) / static_cast<double>(m) >= eps / 3.0) --r_in;
    while (static_cast<double>(r_in + 1) / static_cast<double>(m) < eps / 3.0) ++r_in;
    r_in = std::max<std::int64_t>(r_in, 0);
    const std::int64_t len_min = 2 * r_in + 1;
    const auto len_max = static_cast<std::int64_t>(std::floor(a)) + 1;
    auto lens = arc_lengths(m, len_min, len_max);
    if (lens.empty() && r_in == 0) lens.assign(static_cast<std::size_t>(m), 1);
    if (lens.empty())
        throw ResolutionError("no arc partition of Z/" + std::to_string(m) +
                              " exists at resolution eps=" + std::to_string(eps));
    AxisCells cells;
    std::int64_t s = 0;
    for (auto l : lens) {
        cells.start.push_back(s);
        cells.len.push_back(l);
        cells.center.push_back(s + (l - 1) / 2);
        s += l;
    }
    return cells;
}

}  // namespace

WideSetPartition WideSetPartition::build(const GroupDescriptor& g, double eps) {
    if (!(eps > 0.0)) throw ConfigError("partition needs eps > 0");
    if (eps > g.diameter() + 1e-15)
        throw ConfigError("partition needs eps <= group diameter");
    if (g.is_finite() && g.size() > 8192)
        throw ResolutionError("certified partitioning is desk scale; group has " +
                              std::to_string(g.size()) + " elements (cap 8192)");

    WideSetPartition p(g, eps);

    switch (g.kind()) {
        case GroupKind::Torus: {
            const int d = g.arity();
            const auto k = static_cast<std::int64_t>(std::ceil(1.0 / eps));
            double count = 1.0;
            for (int i = 0; i < d; ++i) count *= static_cast<double>(k);
            if (count > 1e6) throw ResolutionError("torus partition would exceed 1e6 cells");
            const auto cells_total = static_cast<std::uint64_t>(count);
            for (std::uint64_t idx = 0; idx < cells_total; ++idx) {
                PartitionCell cell;
                cell.box_lo.resize(d);
                cell.box_hi.resize(d);
                GroupElement center = g.zero();
                std::uint64_t rem = idx;
                double mass = 1.0;
                for (int i = 0; i < d; ++i) {
                    const auto j = static_cast<std::int64_t>(rem % k);
                    rem /= static_cast<std::uint64_t>(k);
                    cell.box_lo[i] = static_cast<double>(j) / static_cast<double>(k);
                    cell.box_hi[i] = static_cast<double>(j + 1) / static_cast<double>(k);
                    center.reals[i] = GroupDescriptor::wrap_unit(
                        (static_cast<double>(j) + 0.5) / static_cast<double>(k));
                    mass *= cell.box_hi[i] - cell.box_lo[i];
                }
                cell.outer_center = center;
                cell.inner_center = std::move(center);
                cell.haar_mass = mass;
                p.cells_.push_back(std::move(cell));
            }
            break;
        }
        case GroupKind::FiniteAbelian: {
            const int d = g.arity();
            std::vector<AxisCells> axes;
            axes.reserve(d);
            for (int i = 0; i < d; ++i) axes.push_back(axis_partition(g.moduli()[i], eps));
            // one cell per combination of axis arcs
            std::vector<std::size_t> pick(d, 0);
            const std::uint64_t n = g.size();
            p.cell_index_.assign(n, 0);
            while (true) {
                PartitionCell cell;
                GroupElement center = g.zero();
                for (int i = 0; i < d; ++i) center.digits[i] = axes[i].center[pick[i]];
                cell.outer_center = center;
                cell.inner_center = center;
                // enumerate members of the box of arcs
                std::vector<std::int64_t> offset(d, 0);
                while (true) {
                    GroupElement e = g.zero();
                    for (int i = 0; i < d; ++i) {
                        e.digits[i] = axes[i].start[pick[i]] + offset[i];
                        if (e.digits[i] >= g.moduli()[i]) e.digits[i] -= g.moduli()[i];
                    }
                    cell.members.push_back(g.index_of(e));
                    int axis = 0;
                    while (axis < d) {
                        if (++offset[axis] < axes[axis].len[pick[axis]]) break;
                        offset[axis] = 0;
                        ++axis;
                    }
                    if (axis == d) break;
                }
                std::sort(cell.members.begin(), cell.members.end());
                cell.haar_mass =
                    static_cast<double>(cell.members.size()) / static_cast<double>(n);
                for (auto idx : cell.members)
                    p.cell_index_[idx] = static_cast<std::uint32_t>(p.cells_.size());
                p.cells_.push_back(std::move(cell));
                int axis = 0;
                while (axis < d) {
                    if (++pick[axis] < axes[axis].start.size()) break;
                    pick[axis] = 0;
                    ++axis;
                }
                if (axis == d) break;
            }
            break;
        }
        case GroupKind::DyadicCantor:
        case GroupKind::PAdicInt: {
            const double base = g.kind() == GroupKind::DyadicCantor
                                    ? 2.0
                                    : static_cast<double>(g.prime());
            const int k = g.arity();
            // finest cylinder level whose cells still contain their open
            // eps/3-balls: fixing t digits keeps every point closer than
            // eps/3, as long as the largest level below eps/3 is at most
            // base^-(t+1); the coarse bound base^-(t+1) <= eps caps the
            // diameter
            int t_min = 0;
            while (t_min < k && std::pow(base, -(t_min + 1)) > eps) ++t_min;
            int s_star = 1;
            while (s_star <= k && std::pow(base, -s_star) >= eps / 3.0) ++s_star;
            int t = std::min(s_star - 1, k);
            t = std::max(t, t_min);
            const std::uint64_t n = g.size();
            std::uint64_t stride = 1;  // number of elements per cylinder
            for (int i = t; i < k; ++i) stride *= static_cast<std::uint64_t>(g.moduli()[i]);
            std::uint64_t prefix_count = n / stride;
            p.cell_index_.assign(n, 0);
            for (std::uint64_t c = 0; c < prefix_count; ++c) {
                PartitionCell cell;
                // members share the first t digits; enumerate the tail
                GroupElement rep = g.zero();
                std::uint64_t rem = c;
                for (int i = 0; i < t; ++i) {
                    rep.digits[i] = static_cast<std::int64_t>(
                        rem % static_cast<std::uint64_t>(g.moduli()[i]));
                    rem /= static_cast<std::uint64_t>(g.moduli()[i]);
                }
                for (std::uint64_t tail = 0; tail < stride; ++tail) {
                    GroupElement e = rep;
                    std::uint64_t trem = tail;
                    for (int i = t; i < k; ++i) {
                        e.digits[i] = static_cast<std::int64_t>(
                            trem % static_cast<std::uint64_t>(g.moduli()[i]));
                        trem /= static_cast<std::uint64_t>(g.moduli()[i]);
                    }
                    cell.members.push_back(g.index_of(e));
                }
                std::sort(cell.members.begin(), cell.members.end());
                cell.outer_center = rep;
                cell.inner_center = rep;
                cell.haar_mass =
                    static_cast<double>(cell.members.size()) / static_cast<double>(n);
                for (auto idx : cell.members)
                    p.cell_index_[idx] = static_cast<std::uint32_t>(p.cells_.size());
                p.cells_.push_back(std::move(cell));
            }
            break;
        }
    }

    p.verify();
    return p;
}

std::size_t WideSetPartition::cell_of(const GroupElement& x) const {
    group_.require_element(x, "cell_of");
    if (group_.is_finite()) return cell_index_[group_.index_of(x)];
    // torus: locate the box per axis; boxes share one axis grid by build
    const int d = group_.arity();
    const auto k = static_cast<std::uint64_t>(std::llround(
        1.0 / (cells_.front().box_hi[0] - cells_.front().box_lo[0])));
    std::uint64_t idx = 0, strideAcc = 1;
    for (int i = 0; i < d; ++i) {
        auto j = static_cast<std::uint64_t>(x.reals[i] * static_cast<double>(k));
        if (j >= k) j = k - 1;
        // half-open boundary correction after floating rounding
        if (x.reals[i] < static_cast<double>(j) / static_cast<double>(k)) --j;
        else if (x.reals[i] >= static_cast<double>(j + 1) / static_cast<double>(k)) ++j;
        idx += j * strideAcc;
        strideAcc *= k;
    }
    return idx;
}

void WideSetPartition::verify() const {
    const double eps = eps_;
    detail::CompensatedSum mass;
    for (const auto& cell : cells_) mass.add(cell.haar_mass);
    if (std::fabs(mass.value() - 1.0) > 1e-12)
        throw ResolutionError("partition masses do not sum to 1");

    if (group_.is_finite()) {
        const std::uint64_t n = group_.size();
        std::vector<char> covered(n, 0);
        for (std::size_t c = 0; c < cells_.size(); ++c) {
            const auto& cell = cells_[c];
            if (cell.members.empty()) throw ResolutionError("empty partition cell");
            for (auto idx : cell.members) {
                if (covered[idx]) throw ResolutionError("partition cells overlap");
                covered[idx] = 1;
                if (cell_index_[idx] != c) throw ResolutionError("cell index map mismatch");
                // outer certificate
                if (group_.metric(group_.element_at(idx), cell.outer_center) > eps)
                    throw ResolutionError("outer ball certificate failed");
            }
            // diameter bound, needed by the decomposition coupling
            const bool ultrametric = group_.kind() == GroupKind::DyadicCantor ||
                                     group_.kind() == GroupKind::PAdicInt;
            if (ultrametric) {
                // d(x,y) <= max(d(x,c), d(c,y)), so the outer check above
                // already bounds the diameter by eps
            } else if (cell.members.size() <= 2048) {
                for (auto ia : cell.members)
                    for (auto ib : cell.members)
                        if (group_.metric(group_.element_at(ia), group_.element_at(ib)) >
                            eps + 1e-15)
                            throw ResolutionError("cell diameter exceeds eps");
            } else {
                // product cells are built from non-wrapping arcs; the axis
                // residue span bounds the sup-metric diameter
                const int d = group_.arity();
                for (int i = 0; i < d; ++i) {
                    std::int64_t lo = group_.moduli()[i], hi = 0;
                    for (auto idx : cell.members) {
                        const auto digit = group_.element_at(idx).digits[i];
                        lo = std::min(lo, digit);
                        hi = std::max(hi, digit);
                    }
                    if (static_cast<double>(hi - lo) /
                            static_cast<double>(group_.moduli()[i]) >
                        eps + 1e-15)
                        throw ResolutionError("cell diameter exceeds eps");
                }
            }
            // inner certificate: the open eps/3-ball lies inside the cell
            for (std::uint64_t idx = 0; idx < n; ++idx)
                if (group_.metric(group_.element_at(idx), cell.inner_center) < eps / 3.0 &&
                    !std::binary_search(cell.members.begin(), cell.members.end(), idx))
                    throw ResolutionError("inner ball certificate failed");
        }
        for (std::uint64_t idx = 0; idx < n; ++idx)
            if (!covered[idx]) throw ResolutionError("partition does not cover the group");
        return;
    }

    // torus boxes: arithmetic certificates
    const int d = group_.arity();
    for (const auto& cell : cells_) {
        for (int i = 0; i < d; ++i) {
            const double half = 0.5 * (cell.box_hi[i] - cell.box_lo[i]);
            if (half > 0.5 * eps + 1e-15) throw ResolutionError("torus cell too wide");
            if (eps / 3.0 > half + 1e-15) throw ResolutionError("torus cell too narrow");
            const double c = cell.inner_center.reals[i];
            if (std::fabs(c - 0.5 * (cell.box_lo[i] + cell.box_hi[i])) > 1e-12)
                throw ResolutionError("torus cell center misplaced");
        }
    }
}

double wide_set_mass_lower_bound(const AtomicMeasure& nu, double eps) {
    if (!nu.is_probability())
        throw ConfigError("wide-set mass bound is defined for probability measures");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    const GroupDescriptor& g = nu.group();
    if (g.is_finite()) {
        const std::uint64_t n = g.size();
        double best = 1.0;
        for (std::uint64_t i = 0; i < n; ++i)
            best = std::min(best, nu.open_ball_mass(g.element_at(i), eps / 3.0));
        return best;
    }
    // torus: sweep a grid of covering radius eps/12 and shrink the ball
    // accordingly; the result never exceeds the true infimum
    const int d = g.arity();
    const auto per_axis = static_cast<std::uint64_t>(std::ceil(6.0 / eps));
    double total = 1.0;
    for (int i = 0; i < d; ++i) total *= static_cast<double>(per_axis);
    if (total > 4e6) throw ResolutionError("mass-bound grid too fine for this dimension");
    const auto cells = static_cast<std::uint64_t>(total);
    double best = 1.0;
    for (std::uint64_t idx = 0; idx < cells; ++idx) {
        GroupElement x = g.zero();
        std::uint64_t rem = idx;
        for (int i = 0; i < d; ++i) {
            x.reals[i] = GroupDescriptor::wrap_unit(
                (static_cast<double>(rem % per_axis) + 0.5) / static_cast<double>(per_axis));
            rem /= per_axis;
        }
        best = std::min(best, nu.open_ball_mass(x, eps / 3.0 - eps / 12.0));
    }
    return best;
}

std::pair<AtomicMeasure, AtomicMeasure> decompose(const AtomicMeasure& nu,
                                                  const WideSetPartition& partition,
                                                  double delta) {
    if (!(nu.group() == partition.group())) throw ConfigError("decompose: group mismatch");
    if (!(delta > 0.0)) throw ConfigError("decompose needs delta > 0");

    const std::size_t cells = partition.cell_count();
    std::vector<detail::CompensatedSum> cell_mass(cells);
    std::vector<std::size_t> atom_cell(nu.atom_count());
    for (std::size_t a = 0; a < nu.atom_count(); ++a) {
        atom_cell[a] = partition.cell_of(nu.atoms()[a].point);
        cell_mass[atom_cell[a]].add(nu.atoms()[a].weight);
    }

    std::vector<double> ratio(cells);
    for (std::size_t c = 0; c < cells; ++c) {
        const double nu_c = cell_mass[c].value();
        const double h_c = partition.cells()[c].haar_mass;
        if (nu_c <= 0.0)
            throw HypothesisError("wide-set mass hypothesis violated: cell " +
                                  std::to_string(c) + " carries no mass");
        double r = delta * h_c / nu_c;
        if (r > 1.0 + 1e-9)
            throw HypothesisError("delta exceeds the admissible bound on cell " +
                                  std::to_string(c));
        ratio[c] = std::min(r, 1.0);
    }

    std::vector<Atom> slice, rest;
    for (std::size_t a = 0; a < nu.atom_count(); ++a) {
        const auto& atom = nu.atoms()[a];
        const double r = ratio[atom_cell[a]];
        const double w1 = atom.weight * r;
        const double w0 = atom.weight * (1.0 - r);
        if (w1 > 0.0) slice.push_back({atom.point, w1});
        if (w0 > 0.0) rest.push_back({atom.point, w0});
    }
    return {AtomicMeasure::from_atoms(nu.group(), std::move(rest)),
            AtomicMeasure::from_atoms(nu.group(), std::move(slice))};
}

std::string ContractionCertificate::to_string() const {
    std::ostringstream os;
    os << "window m=" << m << ", rounds r=" << rounds << ", delta=" << delta
       << ", eps=" << epsilon << ", certified W1 bound=" << bound
       << ", exact final W1=" << final_w1 << ", steps used=" << steps_used;
    return os.str();
}

ContractionCertificate contraction_certificate(std::span<const AtomicMeasure> schedule,
                                               const AtomicMeasure& nu, double eps,
                                               const CertificateOptions& opts) {
    const GroupDescriptor& g = nu.group();
    if (!g.is_finite()) throw ConfigError("contraction certificate needs a finite group");
    if (!nu.is_probability()) throw ConfigError("starting measure must be a probability");
    for (const auto& mu : schedule) {
        if (!(mu.group() == g)) throw ConfigError("schedule group mismatch");
        if (!mu.is_probability()) throw ConfigError("schedule steps must be probabilities");
    }
    if (schedule.empty()) throw ConfigError("empty schedule");

    WideSetPartition partition = WideSetPartition::build(g, eps);

    // Adaptive window search. One window's uniform input bound equals
    // wide_set_mass_lower_bound of its composite: the worst starting measure
    // is a Dirac, and Dirac starts only translate the composite, which
    // sweeps the same set of ball masses.
    std::size_t m = 0;
    double delta1 = 0.0;
    {
        AtomicMeasure composite = AtomicMeasure::dirac(g, g.zero());
        const std::size_t limit = std::min(opts.window_cap, schedule.size());
        for (std::size_t len = 1; len <= limit; ++len) {
            composite = convolve(schedule[len - 1], composite, opts.atom_cap);
            const double d = wide_set_mass_lower_bound(composite, eps);
            if (d > 0.0) {
                m = len;
                delta1 = d;
                break;
            }
        }
        if (m == 0) {
            for (std::size_t i = 0; i < schedule.size(); ++i) {
                const auto verdict = is_strictly_aperiodic(schedule[i]);
                if (verdict.verdict != Verdict::aperiodic)
                    throw HypothesisError(
                        "no window spreads mass over every eps/3-ball: schedule step " +
                        std::to_string(i) + " is not strictly aperiodic (" + verdict.detail +
                        ")");
            }
            throw HypothesisError(
                "no schedule prefix of length <= " +
                std::to_string(std::min(opts.window_cap, schedule.size())) +
                " spreads mass over every eps/3-ball; schedule too short or cap too small");
        }
    }

    auto rounds_for = [eps](double delta) -> std::size_t {
        if (delta >= 1.0) return 1;
        const double raw = std::log(eps) / std::log1p(-delta);
        return static_cast<std::size_t>(std::ceil(raw)) + 1;
    };

    // delta must hold for every window used; grow the window list until the
    // round count stabilizes under the running minimum
    std::vector<AtomicMeasure> window_composites{AtomicMeasure::dirac(g, g.zero())};
    std::vector<double> window_deltas;
    double delta = delta1;
    std::size_t r = rounds_for(delta);
    while (window_deltas.size() < r) {
        const std::size_t j = window_deltas.size();  // window index, 0-based
        if ((j + 1) * m > schedule.size())
            throw HypothesisError("schedule too short: certificate needs " +
                                  std::to_string(r * m) + " steps, have " +
                                  std::to_string(schedule.size()));
        AtomicMeasure composite = AtomicMeasure::dirac(g, g.zero());
        for (std::size_t s = j * m; s < (j + 1) * m; ++s)
            composite = convolve(schedule[s], composite, opts.atom_cap);
        const double dj = wide_set_mass_lower_bound(composite, eps);
        if (dj <= 0.0)
            throw HypothesisError("window " + std::to_string(j + 1) +
                                  " fails the wide-set mass bound; schedule is not "
                                  "uniformly mixing at window length " +
                                  std::to_string(m));
        window_deltas.push_back(dj);
        window_composites.push_back(std::move(composite));
        delta = std::min(delta, dj);
        r = rounds_for(delta);
    }

    ContractionCertificate cert;
    cert.m = m;
    cert.rounds = r;
    cert.delta = delta;
    cert.epsilon = eps;
    cert.bound = (g.diameter() + 1.0) * eps;
    cert.steps_used = m * r;

    // stage loop on the normalized unprocessed measure
    AtomicMeasure unprocessed = nu;
    for (std::size_t j = 1; j <= r; ++j) {
        const AtomicMeasure pushed =
            convolve(window_composites[j], unprocessed, opts.atom_cap);
        auto [rest, slice] = decompose(pushed, partition, delta);
        (void)slice;  // mass delta, within eps of Haar by the cell coupling
        ContractionStage stage;
        stage.window_begin = (j - 1) * m;
        stage.window_end = j * m;
        stage.window_delta = window_deltas[j - 1];
        stage.residual_mass = std::pow(1.0 - delta, static_cast<double>(j));
        stage.extracted_mass = delta * std::pow(1.0 - delta, static_cast<double>(j - 1));
        cert.stages.push_back(stage);
        if (rest.is_zero()) break;  // delta == 1: everything extracted
        unprocessed = scale(rest, 1.0 / rest.total_mass());
    }

    // independent post-check on the exact pushforward of nu
    AtomicMeasure final_dist = nu;
    for (std::size_t s = 0; s < m * r; ++s)
        final_dist = convolve(schedule[s], final_dist, opts.atom_cap);
    cert.final_w1 = w1_to_haar(final_dist);
    if (cert.final_w1 > cert.bound + kW1TolFinite)
        throw std::logic_error("certificate post-check failed: exact W1 " +
                               std::to_string(cert.final_w1) + " exceeds bound " +
                               std::to_string(cert.bound));
    return cert;
}

}  // namespace haarwalk
