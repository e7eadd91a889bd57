#include "haarwalk/walk.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>
#include <tuple>

#include "haarwalk/errors.hpp"

namespace haarwalk {

WalkSchedule WalkSchedule::explicit_list(MeasureFamily family, std::vector<std::size_t> indices) {
    if (indices.empty()) throw ConfigError("explicit schedule needs indices");
    for (auto i : indices)
        if (i >= family.size()) throw ConfigError("schedule index out of family range");
    return {std::move(family), Rule::Explicit, std::move(indices), 0};
}

WalkSchedule WalkSchedule::cyclic(MeasureFamily family, std::vector<std::size_t> pattern) {
    if (pattern.empty()) throw ConfigError("cyclic schedule needs a pattern");
    for (auto i : pattern)
        if (i >= family.size()) throw ConfigError("schedule index out of family range");
    return {std::move(family), Rule::Cyclic, std::move(pattern), 0};
}

WalkSchedule WalkSchedule::seeded(MeasureFamily family, std::uint64_t seed) {
    return {std::move(family), Rule::SeededChoice, {}, seed};
}

std::size_t WalkSchedule::index_at(std::int64_t n) const {
    if (n < 1) throw ConfigError("schedule times start at n = 1");
    switch (rule) {
        case Rule::Explicit: {
            const auto k = static_cast<std::size_t>(n - 1);
            if (k >= indices.size()) throw ConfigError("explicit schedule exhausted");
            return indices[k];
        }
        case Rule::Cyclic:
            return indices[static_cast<std::size_t>((n - 1) % static_cast<std::int64_t>(indices.size()))];
        case Rule::SeededChoice: {
            const std::uint64_t word = RngStream::mix(choice_seed, static_cast<std::uint64_t>(n));
            return static_cast<std::size_t>(
                (static_cast<__uint128_t>(word) * static_cast<__uint128_t>(family.size())) >> 64);
        }
    }
    return 0;
}

std::vector<AtomicMeasure> WalkSchedule::materialize(std::int64_t n) const {
    std::vector<AtomicMeasure> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 1; k <= n; ++k) out.push_back(step(k));
    return out;
}

Observable Observable::character(std::vector<std::int64_t> frequencies) {
    Observable o;
    o.kind = Kind::Character;
    o.frequencies = std::move(frequencies);
    return o;
}

Observable Observable::custom_table(std::vector<double> values) {
    Observable o;
    o.kind = Kind::Table;
    o.table = std::move(values);
    return o;
}

Observable Observable::lipschitz(std::function<double(const GroupElement&)> fn, double constant) {
    if (!(constant >= 0.0)) throw ConfigError("lipschitz constant must be nonnegative");
    Observable o;
    o.kind = Kind::Lipschitz;
    o.fn = std::move(fn);
    o.lipschitz_constant = constant;
    return o;
}

double Observable::eval(const GroupDescriptor& g, const GroupElement& x) const {
    switch (kind) {
        case Kind::Character: {
            if (frequencies.size() != static_cast<std::size_t>(g.arity()))
                throw ConfigError("character frequency vector does not match the group");
            double phase = 0.0;
            if (g.is_finite()) {
                for (int i = 0; i < g.arity(); ++i)
                    phase += static_cast<double>(frequencies[i]) *
                             static_cast<double>(x.digits[i]) /
                             static_cast<double>(g.moduli()[i]);
            } else {
                for (int i = 0; i < g.arity(); ++i)
                    phase += static_cast<double>(frequencies[i]) * x.reals[i];
            }
            return std::cos(2.0 * std::numbers::pi * phase);
        }
        case Kind::Table: {
            if (!g.is_finite()) throw ConfigError("table observables need a finite group");
            if (table.size() != g.size())
                throw ConfigError("table size does not match the group order");
            return table[g.index_of(x)];
        }
        case Kind::Lipschitz:
            if (g.is_finite()) throw ConfigError("lipschitz observables target the torus");
            return fn(x);
    }
    return 0.0;
}

bool Observable::is_trivial_character(const GroupDescriptor& g) const {
    if (kind != Kind::Character) throw ConfigError("not a character observable");
    if (g.is_finite()) {
        for (int i = 0; i < g.arity(); ++i)
            if (frequencies[i] % g.moduli()[i] != 0) return false;
        return true;
    }
    for (auto k : frequencies)
        if (k != 0) return false;
    return true;
}

TrialReport simulate_birkhoff(const GroupElement& x0, const WalkSchedule& sched,
                              const Observable& phi, std::int64_t n, std::uint64_t root_seed,
                              std::uint64_t trial_index) {
    if (n < 1) throw ConfigError("simulate_birkhoff needs n >= 1");
    const GroupDescriptor& g = sched.family.group();
    g.require_element(x0, "simulate_birkhoff");

    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(root_seed, trial_index);
    GroupElement x = x0;
    detail::CompensatedSum acc;
    acc.add(phi.eval(g, x));  // k = 0 term
    for (std::int64_t k = 1; k < n; ++k) {
        const GroupElement step = sample_atom(sched.step(k), rng);
        g.add_in_place(x, step);
        acc.add(phi.eval(g, x));
    }
    const auto [haar, haar_err] = haar_integral(phi, g);
    (void)haar_err;

    TrialReport report;
    report.root_seed = root_seed;
    report.trial_index = trial_index;
    report.n = n;
    report.birkhoff = acc.value() / static_cast<double>(n);
    report.haar = haar;
    report.deviation = std::fabs(report.birkhoff - report.haar);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::pair<double, double> haar_integral(const Observable& phi, const GroupDescriptor& g) {
    switch (phi.kind) {
        case Observable::Kind::Character:
            // characters are orthogonal to Haar measure unless trivial
            return {phi.is_trivial_character(g) ? 1.0 : 0.0, 0.0};
        case Observable::Kind::Table: {
            if (!g.is_finite()) throw ConfigError("table observables need a finite group");
            detail::CompensatedSum s;
            for (double v : phi.table) s.add(v);
            return {s.value() / static_cast<double>(g.size()), 0.0};
        }
        case Observable::Kind::Lipschitz: {
            if (g.is_finite()) throw ConfigError("lipschitz observables target the torus");
            const int d = g.arity();
            // midpoint rule; per-cell error <= L * cell radius
            std::int64_t per_axis = 4096;
            double cells = 1.0;
            for (int i = 0; i < d; ++i) cells *= static_cast<double>(per_axis);
            while (cells > 1e7) {
                per_axis /= 2;
                cells = 1.0;
                for (int i = 0; i < d; ++i) cells *= static_cast<double>(per_axis);
            }
            const auto total = static_cast<std::uint64_t>(cells);
            detail::CompensatedSum s;
            for (std::uint64_t idx = 0; idx < total; ++idx) {
                GroupElement x = g.zero();
                std::uint64_t rem = idx;
                for (int i = 0; i < d; ++i) {
                    x.reals[i] = GroupDescriptor::wrap_unit(
                        (static_cast<double>(rem % static_cast<std::uint64_t>(per_axis)) + 0.5) /
                        static_cast<double>(per_axis));
                    rem /= static_cast<std::uint64_t>(per_axis);
                }
                s.add(phi.fn(x));
            }
            const double value = s.value() / cells;
            const double err =
                phi.lipschitz_constant * 0.5 / static_cast<double>(per_axis);
            return {value, err};
        }
    }
    return {0.0, 0.0};
}

std::vector<AtomicMeasure> distribution_pushforward(const WalkSchedule& sched,
                                                    const AtomicMeasure& nu0, std::int64_t n,
                                                    std::size_t atom_cap) {
    if (n < 0) throw ConfigError("pushforward length must be >= 0");
    std::vector<AtomicMeasure> out;
    out.reserve(static_cast<std::size_t>(n));
    AtomicMeasure current = nu0;
    for (std::int64_t k = 1; k <= n; ++k) {
        current = convolve(sched.step(k), current, atom_cap);
        out.push_back(current);
    }
    return out;
}

double birkhoff_mean_of_integrals(const WalkSchedule& sched, const AtomicMeasure& nu0,
                                  const Observable& phi, std::int64_t n, std::size_t atom_cap) {
    if (n < 1) throw ConfigError("birkhoff mean needs n >= 1");
    const GroupDescriptor& g = nu0.group();
    auto eval = [&](const GroupElement& x) { return phi.eval(g, x); };
    detail::CompensatedSum s;
    s.add(nu0.integrate(eval));
    AtomicMeasure current = nu0;
    for (std::int64_t k = 1; k < n; ++k) {
        current = convolve(sched.step(k), current, atom_cap);
        s.add(current.integrate(eval));
    }
    return s.value() / static_cast<double>(n);
}

std::pair<double, double> wilson_interval(std::int64_t hits, std::int64_t trials) {
    const double z = 1.959963984540054;  // 97.5% normal quantile
    const double nd = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / nd;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nd;
    const double center = (p + z2 / (2.0 * nd)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<double> run_trials(std::int64_t trials, int threads,
                               const std::function<double(std::int64_t)>& fn) {
    if (trials < 0) throw ConfigError("trial count must be >= 0");
    std::vector<double> results(static_cast<std::size_t>(trials));
    const int workers = std::max(1, threads);
    if (workers == 1) {
        for (std::int64_t t = 0; t < trials; ++t) results[static_cast<std::size_t>(t)] = fn(t);
        return results;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::int64_t t = next.fetch_add(1);
                if (t >= trials) return;
                results[static_cast<std::size_t>(t)] = fn(t);
            }
        });
    for (auto& th : pool) th.join();
    return results;
}

LdTailResult ld_tail_estimate(const WalkSchedule& sched, const Observable& phi,
                              const GroupElement& x0, double eps,
                              const std::vector<std::int64_t>& n_grid, std::int64_t trials,
                              std::uint64_t root_seed, int threads) {
    if (trials < 100) throw ConfigError("tail estimation needs at least 100 trials");
    if (n_grid.empty()) throw ConfigError("tail estimation needs a grid of n values");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n grid must be increasing");

    LdTailResult result;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        const std::int64_t n = n_grid[gi];
        // derive trial streams from (root_seed, grid-offset + trial) so grid
        // points see independent trials
        const std::uint64_t grid_salt = RngStream::mix(root_seed, 0xA11D0000ULL + gi);
        auto deviations = run_trials(trials, threads, [&](std::int64_t t) {
            return simulate_birkhoff(x0, sched, phi, n, grid_salt,
                                     static_cast<std::uint64_t>(t))
                .deviation;
        });
        LdPoint point;
        point.n = n;
        point.trials = trials;
        for (double d : deviations)
            if (d > eps) ++point.hits;
        point.p_hat = static_cast<double>(point.hits) / static_cast<double>(trials);
        std::tie(point.ci_lo, point.ci_hi) = wilson_interval(point.hits, trials);
        result.points.push_back(point);
    }

    // weighted least squares of log p_hat on n; weights are inverse
    // variances of log p_hat, i.e. N p / (1 - p)
    std::vector<double> xs, ys, ws;
    for (const auto& pt : result.points) {
        if (pt.hits == 0) continue;
        xs.push_back(static_cast<double>(pt.n));
        ys.push_back(std::log(pt.p_hat));
        const double q = std::max(1.0 - pt.p_hat, 1e-12);
        ws.push_back(static_cast<double>(pt.trials) * pt.p_hat / q);
    }
    LdFit& fit = result.fit;
    fit.points_used = static_cast<int>(xs.size());
    if (xs.size() < 3) {
        fit.ok = false;
        fit.note = xs.empty()
                       ? "tail below resolution; increase trials or lower eps"
                       : "fewer than 3 grid points with nonzero tail; fit not attempted";
        return result;
    }
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swy += ws[i] * ys[i];
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
        sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.slope_stderr = std::sqrt(1.0 / sxx);
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.intercept + fit.slope * xs[i];
        ss_res += ws[i] * (ys[i] - pred) * (ys[i] - pred);
        ss_tot += ws[i] * (ys[i] - ybar) * (ys[i] - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.ok = true;
    return result;
}

}  // namespace haarwalk
