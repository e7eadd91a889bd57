#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "haarwalk/errors.hpp"
#include "haarwalk/wasserstein.hpp"
#include "helpers.hpp"

using namespace haarwalk;
using namespace haarwalk::testutil;

namespace {

GroupElement fin1(std::int64_t d) {
    GroupElement e;
    e.digits = {d};
    return e;
}

GroupElement tor1(double v) {
    GroupElement e;
    e.reals = {v};
    return e;
}

/// Brute-force transport oracle: every vertex of the transportation polytope
/// is the unique flow solution on some spanning tree of the complete
/// bipartite graph, so enumerate all edge subsets of size m+n-1, keep the
/// spanning trees with nonnegative flows, and take the cheapest.
double transport_vertex_oracle(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    const std::size_t m = mu.atom_count(), n = nu.atom_count();
    const std::size_t edges = m * n, want = m + n - 1;
    REQUIRE(edges <= 16);

    std::vector<double> cost(edges);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = mu.group().metric(mu.atoms()[i].point, nu.atoms()[j].point);

    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << edges); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != want) continue;
        // solve flows by leaf stripping; infeasible or cyclic subsets die
        std::vector<double> need(m + n);
        for (std::size_t i = 0; i < m; ++i) need[i] = mu.atoms()[i].weight;
        for (std::size_t j = 0; j < n; ++j) need[m + j] = nu.atoms()[j].weight;
        std::vector<int> degree(m + n, 0);
        std::vector<char> alive(edges, 0);
        for (std::size_t e = 0; e < edges; ++e)
            if (mask & (1u << e)) {
                alive[e] = 1;
                ++degree[e / n];
                ++degree[m + e % n];
            }
        double total = 0.0;
        bool ok = true;
        for (std::size_t round = 0; round < want; ++round) {
            std::size_t leaf_edge = edges;
            for (std::size_t e = 0; e < edges && leaf_edge == edges; ++e)
                if (alive[e] && (degree[e / n] == 1 || degree[m + e % n] == 1)) leaf_edge = e;
            if (leaf_edge == edges) {
                ok = false;  // a cycle remains: not a tree
                break;
            }
            const std::size_t i = leaf_edge / n, j = leaf_edge % n;
            const bool row_leaf = degree[i] == 1;
            const double flow = row_leaf ? need[i] : need[m + j];
            if (flow < -1e-12) {
                ok = false;
                break;
            }
            total += flow * cost[leaf_edge];
            need[i] -= flow;
            need[m + j] -= flow;
            alive[leaf_edge] = 0;
            --degree[i];
            --degree[m + j];
        }
        if (!ok) continue;
        for (double r : need)
            if (std::fabs(r) > 1e-9) ok = false;
        if (ok) best = std::min(best, total);
    }
    return best;
}

}  // namespace

TEST_CASE("w1 basics") {
    const auto t = GroupDescriptor::torus(1);
    const auto nu = AtomicMeasure::from_atoms(t, {{tor1(0.2), 0.5}, {tor1(0.7), 0.5}});
    CHECK(w1_exact(nu, nu).first == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(w1_exact(AtomicMeasure::dirac(t, tor1(0.0)), AtomicMeasure::dirac(t, tor1(0.5))).first ==
          doctest::Approx(0.5).epsilon(1e-12));
    // two atoms to one: enumerate the couplings of a 2x1 system by hand;
    // the only coupling moves the half at 1/2 to 0, costing 1/4
    const auto half = AtomicMeasure::from_atoms(t, {{tor1(0.0), 0.5}, {tor1(0.5), 0.5}});
    CHECK(w1_exact(half, AtomicMeasure::dirac(t, tor1(0.0))).first ==
          doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("plan marginals and cost are consistent") {
    RngStream rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const auto g = random_finite_group(rng, 32);
        const auto a = random_probability(g, rng, 6);
        const auto b = random_probability(g, rng, 6);
        const auto [value, plan] = w1_exact(a, b);
        CHECK(plan.max_marginal_defect() <= 1e-10);
        CHECK(plan.cost_defect() <= 1e-10);
        CHECK(value >= -1e-15);
        CHECK(value <= g.diameter() + 1e-12);
        for (const auto& f : plan.flows) CHECK(f.mass > 0.0);
    }
}

TEST_CASE("w1 matches the coupling-polytope vertex oracle") {
    RngStream rng(14);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = random_finite_group(rng, 32);
        const auto a = random_probability(g, rng, 4);
        const auto b = random_probability(g, rng, 4);
        const auto [value, plan] = w1_exact(a, b);
        (void)plan;
        CHECK(value == doctest::Approx(transport_vertex_oracle(a, b)).epsilon(1e-10));
    }
    // torus instances too
    const auto t = GroupDescriptor::torus(1);
    for (int rep = 0; rep < 30; ++rep) {
        const auto a = random_probability(t, rng, 4);
        const auto b = random_probability(t, rng, 4);
        CHECK(w1_exact(a, b).first ==
              doctest::Approx(transport_vertex_oracle(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("w1 is a metric on atomic measures of a finite group") {
    RngStream rng(15);
    for (int rep = 0; rep < 40; ++rep) {
        const auto g = random_finite_group(rng, 24);
        const auto a = random_probability(g, rng, 4);
        const auto b = random_probability(g, rng, 4);
        const auto c = random_probability(g, rng, 4);
        const double ab = w1_exact(a, b).first;
        const double ba = w1_exact(b, a).first;
        CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
        CHECK(w1_exact(a, a).first <= 1e-12);
        CHECK(w1_exact(a, c).first <= ab + w1_exact(b, c).first + 1e-10);
        if (!(a == b)) CHECK(ab > 0.0);
        // translation invariance
        const auto shift = g.haar_sample(rng);
        CHECK(w1_exact(translate(a, shift), translate(b, shift)).first ==
              doctest::Approx(ab).epsilon(1e-12));
    }
}

TEST_CASE("w1 to Haar") {
    const auto g2 = GroupDescriptor::finite_abelian({2});
    CHECK(w1_to_haar(AtomicMeasure::uniform(g2)) == doctest::Approx(0.0).epsilon(1e-15));
    // half the mass moves distance 1/2
    CHECK(w1_to_haar(AtomicMeasure::dirac(g2, g2.zero())) ==
          doctest::Approx(0.25).epsilon(1e-12));
    RngStream rng(16);
    for (int rep = 0; rep < 20; ++rep) {
        const auto g = random_finite_group(rng, 32);
        const auto nu = random_probability(g, rng, 4);
        CHECK(w1_to_haar(nu) <= g.diameter() + 1e-12);
    }
    CHECK_THROWS_AS(
        w1_to_haar(AtomicMeasure::dirac(GroupDescriptor::torus(1), tor1(0.0))), ConfigError);
}

TEST_CASE("convolution never increases distance to Haar") {
    RngStream rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const auto g = random_finite_group(rng, 24);
        const auto mu = random_probability(g, rng, 4);
        const auto nu = random_probability(g, rng, 4);
        CHECK(w1_to_haar(convolve(mu, nu)) <= w1_to_haar(nu) + 1e-10);
    }
}

TEST_CASE("w1 is convex in its first argument") {
    RngStream rng(18);
    for (int rep = 0; rep < 200; ++rep) {
        const auto g = random_finite_group(rng, 24);
        const auto n1 = random_probability(g, rng, 4);
        const auto n2 = random_probability(g, rng, 4);
        const auto n3 = random_probability(g, rng, 4);
        const double tpar =
            static_cast<double>(1 + rng.uniform_index(15)) / 16.0;  // in (0,1)
        const auto mix = add_measures(scale(n1, tpar), scale(n2, 1.0 - tpar));
        CHECK(w1_exact(mix, n3).first <=
              tpar * w1_exact(n1, n3).first + (1.0 - tpar) * w1_exact(n2, n3).first + 1e-10);
    }
}

TEST_CASE("torus upper bound really bounds the circle distance") {
    const auto t = GroupDescriptor::torus(1);
    // the grid measure itself only pays the snap radius
    const int k = 8;
    std::vector<Atom> grid_atoms;
    for (int i = 0; i < k; ++i) grid_atoms.push_back({tor1(i / static_cast<double>(k)), 1.0 / k});
    const auto grid_measure = AtomicMeasure::from_atoms(t, std::move(grid_atoms));
    CHECK(w1_haar_upper_bound_torus(grid_measure, k) <= 2.0 * (0.5 / k) + 1e-12);

    // dirac at 0 with grid 2: transport 1/4 plus twice the snap radius 1/4
    const auto d0 = AtomicMeasure::dirac(t, tor1(0.0));
    const double u2 = w1_haar_upper_bound_torus(d0, 2);
    CHECK(u2 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(u2 >= 0.25);  // true distance, from the cdf oracle below

    // upper bound dominates the exact circle distance on random measures
    RngStream rng(19);
    for (int rep = 0; rep < 25; ++rep) {
        const auto nu = random_probability(t, rng, 5);
        const double exact = circle_w1_to_lebesgue(nu);
        for (int grid : {4, 16, 64})
            CHECK(w1_haar_upper_bound_torus(nu, grid) + 1e-12 >= exact);
    }

    // nonincreasing in the grid on a fixed measure
    const auto nu = AtomicMeasure::from_atoms(
        t, {{tor1(0.1), 0.25}, {tor1(0.55), 0.5}, {tor1(0.8), 0.25}});
    const double u4 = w1_haar_upper_bound_torus(nu, 4);
    const double u16 = w1_haar_upper_bound_torus(nu, 16);
    const double u64 = w1_haar_upper_bound_torus(nu, 64);
    CHECK(u4 >= u16);
    CHECK(u16 >= u64);
}

TEST_CASE("circle cdf oracle sanity") {
    const auto t = GroupDescriptor::torus(1);
    // single Dirac sits at distance 1/4 from Lebesgue wherever it is
    for (double x : {0.0, 0.1, 0.25, 0.5, 0.9})
        CHECK(circle_w1_to_lebesgue(AtomicMeasure::dirac(t, tor1(x))) ==
              doctest::Approx(0.25).epsilon(1e-12));
    // symmetric pair at distance 1/2: each half covers its own semicircle
    const auto half = AtomicMeasure::from_atoms(t, {{tor1(0.0), 0.5}, {tor1(0.5), 0.5}});
    CHECK(circle_w1_to_lebesgue(half) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("contraction coefficient over Dirac starts") {
    const auto g2 = GroupDescriptor::finite_abelian({2});
    // window producing uniform: both Dirac images coincide
    std::vector<AtomicMeasure> to_uniform{AtomicMeasure::uniform(g2)};
    CHECK(contraction_coefficient(to_uniform, g2) == doctest::Approx(0.0).epsilon(1e-12));
    // empty window: Diracs stay Diracs, the coefficient is the diameter
    CHECK(contraction_coefficient({}, g2) == doctest::Approx(0.5).epsilon(1e-15));
    // a pure shift keeps Diracs apart
    std::vector<AtomicMeasure> shift{AtomicMeasure::dirac(g2, fin1(1))};
    CHECK(contraction_coefficient(shift, g2) == doctest::Approx(0.5).epsilon(1e-15));

    // dominates W1 between images of arbitrary starting measures
    RngStream rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = random_finite_group(rng, 16);
        std::vector<AtomicMeasure> window{random_probability(g, rng, 3),
                                          random_probability(g, rng, 3)};
        const double coeff = contraction_coefficient(window, g);
        const auto composite = convolve_sequence(window);
        const auto nu1 = random_probability(g, rng, 4);
        const auto nu2 = random_probability(g, rng, 4);
        const double dist = w1_exact(convolve(composite, nu1), convolve(composite, nu2)).first;
        CHECK(dist <= coeff + 1e-10);
    }
}

TEST_CASE("mismatched masses are rejected") {
    const auto g = GroupDescriptor::finite_abelian({3});
    const auto u = AtomicMeasure::uniform(g);
    CHECK_THROWS_AS(w1_exact(u, scale(u, 0.7)), ConfigError);
    CHECK_THROWS_AS(
        w1_exact(u, AtomicMeasure::uniform(GroupDescriptor::finite_abelian({4}))), ConfigError);
}
