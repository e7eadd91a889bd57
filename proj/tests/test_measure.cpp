#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "haarwalk/errors.hpp"
#include "haarwalk/measure.hpp"
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

double weight_at(const AtomicMeasure& mu, const GroupElement& p) {
    for (const auto& a : mu.atoms())
        if (a.point == p) return a.weight;
    return 0.0;
}

}  // namespace

TEST_CASE("uniform convolved with uniform stays uniform on Z/2") {
    const auto g = GroupDescriptor::finite_abelian({2});
    const auto u = AtomicMeasure::uniform(g);
    // oracle: the four pairwise sums, each with weight 1/4, land half on 0
    // and half on 1
    const auto c = convolve(u, u);
    REQUIRE(c.atom_count() == 2);
    CHECK(c.atoms()[0].weight == 0.5);
    CHECK(c.atoms()[1].weight == 0.5);
    CHECK(c == u);
}

TEST_CASE("dirac convolution adds the points") {
    const auto g = GroupDescriptor::finite_abelian({5});
    const auto c = convolve(AtomicMeasure::dirac(g, fin1(2)), AtomicMeasure::dirac(g, fin1(4)));
    CHECK(c == AtomicMeasure::dirac(g, fin1(1)));
}

TEST_CASE("Haar is a fixed point of convolution, bit-exactly") {
    RngStream rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        const auto g = random_finite_group(rng, 64);
        const auto mu = random_probability(g, rng, 4);
        const auto u = AtomicMeasure::uniform(g);
        CHECK(convolve(mu, u) == u);
        CHECK(convolve(u, mu) == u);
    }
}

TEST_CASE("convolution powers") {
    const auto g = GroupDescriptor::finite_abelian({4});
    const auto mu = AtomicMeasure::from_atoms(g, {{fin1(0), 0.5}, {fin1(1), 0.5}});
    CHECK(convolve_power(mu, 0) == AtomicMeasure::dirac(g, g.zero()));
    CHECK(convolve_power(mu, 1) == mu);
    const auto nu2 = convolve_power(mu, 2);
    CHECK(weight_at(nu2, fin1(0)) == 0.25);
    CHECK(weight_at(nu2, fin1(1)) == 0.5);
    CHECK(weight_at(nu2, fin1(2)) == 0.25);
    CHECK(weight_at(nu2, fin1(3)) == 0.0);
    CHECK_THROWS_AS(convolve_power(mu, -1), ConfigError);
}

TEST_CASE("convolve_sequence folds and is order-independent") {
    RngStream rng(5);
    const auto g = GroupDescriptor::finite_abelian({6});
    const auto a = AtomicMeasure::dirac(g, fin1(2));
    const auto b = AtomicMeasure::dirac(g, fin1(5));
    std::vector<AtomicMeasure> single{a};
    CHECK(convolve_sequence(single) == a);
    std::vector<AtomicMeasure> pair{a, b};
    CHECK(convolve_sequence(pair) == AtomicMeasure::dirac(g, fin1(1)));

    for (int rep = 0; rep < 30; ++rep) {
        const auto gg = random_finite_group(rng, 32);
        std::vector<AtomicMeasure> seq{random_probability(gg, rng), random_probability(gg, rng),
                                       random_probability(gg, rng)};
        std::vector<AtomicMeasure> perm{seq[2], seq[0], seq[1]};
        const auto lhs = convolve_sequence(seq);
        const auto rhs = convolve_sequence(perm);
        REQUIRE(lhs.atom_count() == rhs.atom_count());
        for (std::size_t i = 0; i < lhs.atom_count(); ++i) {
            CHECK(lhs.atoms()[i].point == rhs.atoms()[i].point);
            CHECK(lhs.atoms()[i].weight ==
                  doctest::Approx(rhs.atoms()[i].weight).epsilon(1e-12));
        }
    }
}

TEST_CASE("convolution is commutative and associative on random triples") {
    RngStream rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        const auto g = random_finite_group(rng, 32);
        const auto a = random_probability(g, rng);
        const auto b = random_probability(g, rng);
        const auto c = random_probability(g, rng);
        const auto ab = convolve(a, b);
        const auto ba = convolve(b, a);
        REQUIRE(ab.atom_count() == ba.atom_count());
        for (std::size_t i = 0; i < ab.atom_count(); ++i)
            CHECK(ab.atoms()[i].weight == doctest::Approx(ba.atoms()[i].weight).epsilon(1e-12));
        const auto lhs = convolve(convolve(a, b), c);
        const auto rhs = convolve(a, convolve(b, c));
        REQUIRE(lhs.atom_count() == rhs.atom_count());
        for (std::size_t i = 0; i < lhs.atom_count(); ++i)
            CHECK(lhs.atoms()[i].weight == doctest::Approx(rhs.atoms()[i].weight).epsilon(1e-12));
        // mass conservation
        CHECK(convolve(a, b).total_mass() ==
              doctest::Approx(a.total_mass() * b.total_mass()).epsilon(1e-12));
    }
    // torus triples at 1e-10 after atom alignment
    const auto t = GroupDescriptor::torus(1);
    for (int rep = 0; rep < 20; ++rep) {
        const auto a = random_probability(t, rng, 3);
        const auto b = random_probability(t, rng, 3);
        const auto c = random_probability(t, rng, 3);
        const auto lhs = convolve(convolve(a, b), c);
        const auto rhs = convolve(a, convolve(b, c));
        REQUIRE(lhs.atom_count() == rhs.atom_count());
        for (std::size_t i = 0; i < lhs.atom_count(); ++i) {
            CHECK(t.metric(lhs.atoms()[i].point, rhs.atoms()[i].point) <= 1e-10);
            CHECK(lhs.atoms()[i].weight == doctest::Approx(rhs.atoms()[i].weight).epsilon(1e-10));
        }
    }
}

TEST_CASE("support of a convolution is the sum-set of supports") {
    RngStream rng(8);
    const auto g = GroupDescriptor::finite_abelian({7});
    const auto d = AtomicMeasure::dirac(g, fin1(3));
    CHECK(support(d) == std::vector<GroupElement>{fin1(3)});
    for (int rep = 0; rep < 50; ++rep) {
        const auto gg = random_finite_group(rng, 48);
        const auto a = random_probability(gg, rng);
        const auto b = random_probability(gg, rng);
        CHECK(support(convolve(a, b)) == sumset_oracle(gg, support(a), support(b)));
    }
}

TEST_CASE("total variation") {
    const auto g = GroupDescriptor::finite_abelian({2});
    const auto u = AtomicMeasure::uniform(g);
    const auto d0 = AtomicMeasure::dirac(g, g.zero());
    const auto d1 = AtomicMeasure::dirac(g, fin1(1));
    CHECK(total_variation(u, u) == 0.0);
    CHECK(total_variation(d0, d1) == 1.0);
    CHECK(total_variation(u, d0) == 0.5);
    CHECK_THROWS_AS(total_variation(u, scale(u, 0.5)), ConfigError);
}

TEST_CASE("empirical measures merge repeats and have unit mass") {
    const auto g = GroupDescriptor::finite_abelian({3});
    const std::vector<GroupElement> one{fin1(2)};
    CHECK(AtomicMeasure::empirical(g, one) == AtomicMeasure::dirac(g, fin1(2)));
    const std::vector<GroupElement> three{fin1(0), fin1(0), fin1(1)};
    const auto e = AtomicMeasure::empirical(g, three);
    CHECK(e.total_mass() == 1.0);
    CHECK(weight_at(e, fin1(0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(weight_at(e, fin1(1)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const std::vector<GroupElement> none{};
    CHECK_THROWS_AS(AtomicMeasure::empirical(g, none), ConfigError);
}

TEST_CASE("torus atoms merge only within the metric threshold") {
    const auto t = GroupDescriptor::torus(1);
    const double base = 0.3;
    const auto merged = AtomicMeasure::from_atoms(
        t, {{tor1(base), 0.5}, {tor1(base + 5e-13), 0.5}});
    CHECK(merged.atom_count() == 1);
    CHECK(merged.total_mass() == 1.0);

    const auto kept = AtomicMeasure::from_atoms(
        t, {{tor1(base), 0.5}, {tor1(base + 1e-10), 0.5}});
    CHECK(kept.atom_count() == 2);

    // seam: 1-eps and 0 are the same circle point up to the threshold
    const auto seam = AtomicMeasure::from_atoms(
        t, {{tor1(0.0), 0.5}, {tor1(1.0 - 1e-13), 0.5}});
    CHECK(seam.atom_count() == 1);
}

TEST_CASE("convolution refuses to blow past the atom cap") {
    const auto t = GroupDescriptor::torus(1);
    RngStream rng(9);
    std::vector<Atom> atoms;
    for (int i = 0; i < 64; ++i) atoms.push_back({t.haar_sample(rng), 1.0 / 64});
    const auto mu = AtomicMeasure::from_atoms(t, std::move(atoms));
    CHECK_THROWS_AS(convolve(mu, mu, 1000), ResolutionError);
    CHECK_NOTHROW(convolve(mu, mu, 5000));
}

TEST_CASE("sampling an atomic measure follows the weights") {
    const auto g = GroupDescriptor::finite_abelian({4});
    const auto mu = AtomicMeasure::from_atoms(g, {{fin1(1), 0.75}, {fin1(3), 0.25}});
    RngStream rng(77);
    int ones = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i)
        if (sample_atom(mu, rng) == fin1(1)) ++ones;
    CHECK(std::fabs(ones / static_cast<double>(draws) - 0.75) < 0.01);
}

TEST_CASE("measure family validation") {
    const auto g = GroupDescriptor::finite_abelian({2});
    const auto h = GroupDescriptor::finite_abelian({3});
    CHECK_THROWS_AS(MeasureFamily({}), ConfigError);
    CHECK_THROWS_AS(MeasureFamily({AtomicMeasure::uniform(g), AtomicMeasure::uniform(h)}),
                    ConfigError);
    CHECK_THROWS_AS(MeasureFamily({scale(AtomicMeasure::uniform(g), 0.5)}), ConfigError);
    CHECK_NOTHROW(MeasureFamily({AtomicMeasure::uniform(g)}));
}

TEST_CASE("group mismatch is rejected") {
    const auto g = GroupDescriptor::finite_abelian({2});
    const auto h = GroupDescriptor::finite_abelian({3});
    CHECK_THROWS_AS(convolve(AtomicMeasure::uniform(g), AtomicMeasure::uniform(h)), ConfigError);
}
