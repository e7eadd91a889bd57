#include "haarwalk/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "haarwalk/errors.hpp"

namespace haarwalk {

namespace {

constexpr double kReducedCostTol = 1e-13;

/// Transportation simplex over a dense cost matrix. Maintains the basis as a
/// spanning tree of the bipartite graph (sources 0..m-1, sinks m..m+n-1).
/// Entering variable by most negative reduced cost, switching to Bland's
/// smallest-index rule after a burn-in to guarantee termination under
/// degeneracy.
class TransportSimplex {
public:
    TransportSimplex(std::vector<double> supply, std::vector<double> demand,
                     std::vector<double> cost)
        : m_(supply.size()),
          n_(demand.size()),
          supply_(std::move(supply)),
          demand_(std::move(demand)),
          cost_(std::move(cost)),
          flow_(m_ * n_, 0.0),
          basic_(m_ * n_, false) {}

    void solve() {
        northwest_corner();
        const std::size_t nodes = m_ + n_;
        const std::size_t bland_after = 40 * nodes * nodes + 400;
        const std::size_t hard_cap = 4000 * nodes * nodes + 40000;
        std::vector<double> u(m_), v(n_);
        for (std::size_t iter = 0; iter < hard_cap; ++iter) {
            compute_potentials(u, v);
            const bool bland = iter >= bland_after;
            std::size_t enter = m_ * n_;
            double best = -kReducedCostTol;
            for (std::size_t i = 0; i < m_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    const std::size_t a = i * n_ + j;
                    if (basic_[a]) continue;
                    const double r = cost_[a] - u[i] - v[j];
                    if (r < best) {
                        best = r;
                        enter = a;
                        if (bland) break;  // first improving arc by index
                    }
                }
                if (bland && enter != m_ * n_) break;
            }
            if (enter == m_ * n_) return;  // optimal
            pivot(enter);
        }
        throw std::runtime_error("transport solver failed to converge");
    }

    const std::vector<double>& flow() const { return flow_; }

private:
    void northwest_corner() {
        std::vector<double> a = supply_, b = demand_;
        std::size_t i = 0, j = 0;
        while (true) {
            const std::size_t arc = i * n_ + j;
            const double t = std::min(a[i], b[j]);
            flow_[arc] = t;
            basic_[arc] = true;
            if (i == m_ - 1 && j == n_ - 1) break;
            a[i] -= t;
            b[j] -= t;
            // advance the exhausted side; on ties prefer the column so the
            // degenerate zero cell keeps the basis a spanning tree
            if (i == m_ - 1) {
                b[j] = 0.0;
                ++j;
            } else if (j == n_ - 1) {
                a[i] = 0.0;
                ++i;
            } else if (a[i] <= b[j]) {
                a[i] = 0.0;
                ++i;
            } else {
                b[j] = 0.0;
                ++j;
            }
        }
    }

    void compute_potentials(std::vector<double>& u, std::vector<double>& v) const {
        const std::size_t nodes = m_ + n_;
        std::vector<std::vector<std::size_t>> adj(nodes);
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (basic_[i * n_ + j]) {
                    adj[i].push_back(m_ + j);
                    adj[m_ + j].push_back(i);
                }
        std::vector<char> seen(nodes, 0);
        std::vector<std::size_t> stack = {0};
        u[0] = 0.0;
        seen[0] = 1;
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            for (std::size_t y : adj[x]) {
                if (seen[y]) continue;
                seen[y] = 1;
                if (x < m_)
                    v[y - m_] = cost_[x * n_ + (y - m_)] - u[x];
                else
                    u[y] = cost_[y * n_ + (x - m_)] - v[x - m_];
                stack.push_back(y);
            }
        }
    }

    /// Add the entering arc, push flow around the unique tree cycle, drop
    /// the first blocking arc.
    void pivot(std::size_t enter) {
        const std::size_t ei = enter / n_;
        const std::size_t ej = enter % n_;
        // path from source ei to sink ej through the basis tree
        const std::size_t nodes = m_ + n_;
        std::vector<std::vector<std::size_t>> adj(nodes);
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (basic_[i * n_ + j]) {
                    adj[i].push_back(m_ + j);
                    adj[m_ + j].push_back(i);
                }
        std::vector<std::size_t> parent(nodes, nodes);
        std::vector<char> seen(nodes, 0);
        std::vector<std::size_t> queue = {ei};
        seen[ei] = 1;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::size_t x = queue[q];
            if (x == m_ + ej) break;
            for (std::size_t y : adj[x])
                if (!seen[y]) {
                    seen[y] = 1;
                    parent[y] = x;
                    queue.push_back(y);
                }
        }
        std::vector<std::size_t> path;  // node sequence sink..source
        for (std::size_t x = m_ + ej; x != nodes; x = parent[x]) {
            path.push_back(x);
            if (x == ei) break;
        }
        std::reverse(path.begin(), path.end());  // source ei .. sink ej

        // cycle arcs alternate +,-,+,... starting with the entering arc;
        // the path's first arc (ei -> next) is a minus arc
        std::vector<std::size_t> minus_arcs, plus_arcs;
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const std::size_t x = path[k], y = path[k + 1];
            const std::size_t arc = x < m_ ? x * n_ + (y - m_) : y * n_ + (x - m_);
            if (k % 2 == 0)
                minus_arcs.push_back(arc);
            else
                plus_arcs.push_back(arc);
        }
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leave = minus_arcs.front();
        for (std::size_t arc : minus_arcs)
            if (flow_[arc] < theta || (flow_[arc] == theta && arc < leave)) {
                theta = flow_[arc];
                leave = arc;
            }
        for (std::size_t arc : plus_arcs) flow_[arc] += theta;
        for (std::size_t arc : minus_arcs) flow_[arc] -= theta;
        flow_[leave] = 0.0;
        basic_[leave] = false;
        basic_[enter] = true;
        flow_[enter] = theta;
    }

    std::size_t m_, n_;
    std::vector<double> supply_, demand_, cost_;
    std::vector<double> flow_;
    std::vector<char> basic_;
};

}  // namespace

double TransportPlan::max_marginal_defect() const {
    std::vector<double> row(source.atom_count(), 0.0), col(target.atom_count(), 0.0);
    for (const auto& f : flows) {
        row[f.source_atom] += f.mass;
        col[f.target_atom] += f.mass;
    }
    double defect = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i)
        defect = std::max(defect, std::fabs(row[i] - source.atoms()[i].weight));
    for (std::size_t j = 0; j < col.size(); ++j)
        defect = std::max(defect, std::fabs(col[j] - target.atoms()[j].weight));
    return defect;
}

double TransportPlan::cost_defect() const {
    detail::CompensatedSum s;
    for (const auto& f : flows)
        s.add_product(f.mass, source.group().metric(source.atoms()[f.source_atom].point,
                                                    target.atoms()[f.target_atom].point));
    return std::fabs(s.value() - cost);
}

std::pair<double, TransportPlan> w1_exact(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    if (!(mu.group() == nu.group())) throw ConfigError("w1_exact: group mismatch");
    if (std::fabs(mu.total_mass() - nu.total_mass()) > 1e-10)
        throw ConfigError("w1_exact: total masses differ beyond 1e-10");
    if (mu.is_zero() || nu.is_zero())
        throw ConfigError("w1_exact: measures must carry positive mass");

    const GroupDescriptor& g = mu.group();
    const std::size_t m = mu.atom_count(), n = nu.atom_count();

    std::vector<double> supply(m), demand(n), cost(m * n);
    for (std::size_t i = 0; i < m; ++i) supply[i] = mu.atoms()[i].weight;
    // rescale so both sides balance exactly in the solver
    const double ratio = mu.total_mass() / nu.total_mass();
    for (std::size_t j = 0; j < n; ++j) demand[j] = nu.atoms()[j].weight * ratio;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = g.metric(mu.atoms()[i].point, nu.atoms()[j].point);

    TransportSimplex simplex(std::move(supply), std::move(demand), cost);
    simplex.solve();

    TransportPlan plan{mu, nu, {}, 0.0};
    detail::CompensatedSum total;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double f = simplex.flow()[i * n + j];
            if (f > 0.0) {
                plan.flows.push_back({i, j, f});
                total.add_product(f, cost[i * n + j]);
            }
        }
    plan.cost = total.value();
    return {plan.cost, std::move(plan)};
}

double w1_to_haar(const AtomicMeasure& nu) {
    if (!nu.group().is_finite())
        throw ConfigError("w1_to_haar needs a finite group; use the torus upper bound instead");
    if (!nu.is_probability()) throw ConfigError("w1_to_haar needs a probability measure");
    return w1_exact(nu, AtomicMeasure::uniform(nu.group())).first;
}

double w1_haar_upper_bound_torus(const AtomicMeasure& nu, int grid_n, std::size_t atom_cap) {
    if (nu.group().is_finite()) throw ConfigError("torus bound called on a finite group");
    if (grid_n < 2) throw ConfigError("grid_n must be >= 2");
    if (!nu.is_probability()) throw ConfigError("torus Haar bound needs a probability measure");
    const GroupDescriptor& g = nu.group();
    const int d = g.arity();

    double cells = 1.0;
    for (int i = 0; i < d; ++i) cells *= static_cast<double>(grid_n);
    if (cells > static_cast<double>(atom_cap))
        throw ResolutionError("torus grid exceeds the atom cap");
    const auto total_cells = static_cast<std::uint64_t>(cells);

    // snap each atom to the nearest grid point
    std::vector<Atom> snapped;
    snapped.reserve(nu.atom_count());
    for (const auto& a : nu.atoms()) {
        GroupElement e = g.zero();
        for (int i = 0; i < d; ++i) {
            double k = std::nearbyint(a.point.reals[i] * grid_n);
            if (k >= grid_n) k = 0.0;
            e.reals[i] = k / grid_n;
        }
        snapped.push_back({std::move(e), a.weight});
    }
    AtomicMeasure snapped_measure = AtomicMeasure::from_atoms(g, std::move(snapped));

    std::vector<Atom> grid;
    grid.reserve(total_cells);
    const double w = 1.0 / cells;
    for (std::uint64_t idx = 0; idx < total_cells; ++idx) {
        GroupElement e = g.zero();
        std::uint64_t rem = idx;
        for (int i = 0; i < d; ++i) {
            e.reals[i] = static_cast<double>(rem % grid_n) / grid_n;
            rem /= grid_n;
        }
        grid.push_back({std::move(e), w});
    }
    AtomicMeasure grid_measure = AtomicMeasure::from_atoms(g, std::move(grid));

    const double snap_radius = 0.5 / static_cast<double>(grid_n);
    return w1_exact(snapped_measure, grid_measure).first + 2.0 * snap_radius;
}

double contraction_coefficient(std::span<const AtomicMeasure> window, const GroupDescriptor& g) {
    if (!g.is_finite()) throw ConfigError("contraction coefficient needs a finite group");
    for (const auto& mu : window) {
        if (!(mu.group() == g)) throw ConfigError("contraction window: group mismatch");
        if (!mu.is_probability()) throw ConfigError("contraction window needs probability measures");
    }
    AtomicMeasure composite = window.empty()
                                  ? AtomicMeasure::dirac(g, g.zero())
                                  : convolve_sequence(window);
    // max over pairs of Dirac starts; by shift invariance only the difference
    // matters, so sweep the image of 0 against the image of every z
    const std::uint64_t n = g.size();
    double worst = 0.0;
    for (std::uint64_t z = 1; z < n; ++z) {
        const AtomicMeasure shifted = translate(composite, g.element_at(z));
        worst = std::max(worst, w1_exact(composite, shifted).first);
    }
    return worst;
}

}  // namespace haarwalk
