#include "haarwalk/group.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "haarwalk/errors.hpp"

namespace haarwalk {

namespace {

bool is_prime(std::int64_t p) {
    if (p < 2) return false;
    for (std::int64_t d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

}  // namespace

GroupDescriptor GroupDescriptor::finite_abelian(std::vector<std::int64_t> moduli) {
    if (moduli.empty()) throw ConfigError("finite group needs at least one modulus");
    for (auto m : moduli)
        if (m < 2) throw ConfigError("finite group moduli must be >= 2");
    GroupDescriptor g;
    g.kind_ = GroupKind::FiniteAbelian;
    g.arity_ = static_cast<int>(moduli.size());
    g.moduli_ = std::move(moduli);
    return g;
}

GroupDescriptor GroupDescriptor::torus(int dimension) {
    if (dimension < 1) throw ConfigError("torus dimension must be >= 1");
    GroupDescriptor g;
    g.kind_ = GroupKind::Torus;
    g.arity_ = dimension;
    return g;
}

GroupDescriptor GroupDescriptor::dyadic_cantor(int depth) {
    if (depth < 1) throw ConfigError("cantor depth must be >= 1");
    GroupDescriptor g;
    g.kind_ = GroupKind::DyadicCantor;
    g.arity_ = depth;
    g.moduli_.assign(static_cast<std::size_t>(depth), 2);
    return g;
}

GroupDescriptor GroupDescriptor::padic_int(std::int64_t prime, int depth) {
    if (!is_prime(prime)) throw ConfigError("p-adic base must be prime");
    if (depth < 1) throw ConfigError("p-adic depth must be >= 1");
    GroupDescriptor g;
    g.kind_ = GroupKind::PAdicInt;
    g.arity_ = depth;
    g.prime_ = prime;
    g.moduli_.assign(static_cast<std::size_t>(depth), prime);
    return g;
}

std::uint64_t GroupDescriptor::size() const {
    if (!is_finite()) throw ConfigError("torus has no element count");
    std::uint64_t n = 1;
    for (auto m : moduli_) {
        const auto um = static_cast<std::uint64_t>(m);
        if (n > std::numeric_limits<std::uint64_t>::max() / um)
            throw ResolutionError("finite group too large to enumerate");
        n *= um;
    }
    return n;
}

GroupElement GroupDescriptor::zero() const {
    GroupElement e;
    if (is_finite())
        e.digits.assign(static_cast<std::size_t>(arity_), 0);
    else
        e.reals.assign(static_cast<std::size_t>(arity_), 0.0);
    return e;
}

double GroupDescriptor::wrap_unit(double v) {
    double r = v - std::floor(v);
    if (r >= 1.0) r -= 1.0;  // floor artifacts for v just below an integer
    if (r < 0.0) r += 1.0;
    return r == 0.0 ? 0.0 : r;  // normalize -0.0
}

double GroupDescriptor::circle_distance(double a, double b) {
    double delta = std::fabs(a - b);
    return std::min(delta, 1.0 - delta);
}

GroupElement GroupDescriptor::add(const GroupElement& x, const GroupElement& y) const {
    GroupElement out = x;
    add_in_place(out, y);
    return out;
}

void GroupDescriptor::add_in_place(GroupElement& x, const GroupElement& y) const {
    require_element(x, "add");
    require_element(y, "add");
    switch (kind_) {
        case GroupKind::Torus:
            for (int i = 0; i < arity_; ++i) x.reals[i] = wrap_unit(x.reals[i] + y.reals[i]);
            return;
        case GroupKind::FiniteAbelian:
        case GroupKind::DyadicCantor:
            for (int i = 0; i < arity_; ++i) {
                x.digits[i] += y.digits[i];
                if (x.digits[i] >= moduli_[i]) x.digits[i] -= moduli_[i];
            }
            return;
        case GroupKind::PAdicInt: {
            std::int64_t carry = 0;
            for (int i = 0; i < arity_; ++i) {
                std::int64_t s = x.digits[i] + y.digits[i] + carry;
                carry = s >= prime_ ? 1 : 0;
                x.digits[i] = s - (carry ? prime_ : 0);
            }
            return;
        }
    }
}

GroupElement GroupDescriptor::neg(const GroupElement& x) const {
    require_element(x, "neg");
    GroupElement out = zero();
    switch (kind_) {
        case GroupKind::Torus:
            for (int i = 0; i < arity_; ++i)
                out.reals[i] = x.reals[i] == 0.0 ? 0.0 : wrap_unit(1.0 - x.reals[i]);
            return out;
        case GroupKind::FiniteAbelian:
        case GroupKind::DyadicCantor:
            for (int i = 0; i < arity_; ++i)
                out.digits[i] = x.digits[i] == 0 ? 0 : moduli_[i] - x.digits[i];
            return out;
        case GroupKind::PAdicInt: {
            // negation of the base-p integer mod p^k
            bool all_zero = true;
            for (int i = 0; i < arity_; ++i) all_zero = all_zero && x.digits[i] == 0;
            if (all_zero) return out;
            int i = 0;
            while (x.digits[i] == 0) out.digits[i++] = 0;
            out.digits[i] = prime_ - x.digits[i];
            for (++i; i < arity_; ++i) out.digits[i] = prime_ - 1 - x.digits[i];
            return out;
        }
    }
    return out;
}

GroupElement GroupDescriptor::sub(const GroupElement& x, const GroupElement& y) const {
    return add(x, neg(y));
}

double GroupDescriptor::metric(const GroupElement& x, const GroupElement& y) const {
    require_element(x, "metric");
    require_element(y, "metric");
    switch (kind_) {
        case GroupKind::Torus: {
            double d = 0.0;
            for (int i = 0; i < arity_; ++i)
                d = std::max(d, circle_distance(x.reals[i], y.reals[i]));
            return d;
        }
        case GroupKind::FiniteAbelian: {
            double d = 0.0;
            for (int i = 0; i < arity_; ++i) {
                std::int64_t delta = std::llabs(x.digits[i] - y.digits[i]);
                delta = std::min(delta, moduli_[i] - delta);
                d = std::max(d, static_cast<double>(delta) / static_cast<double>(moduli_[i]));
            }
            return d;
        }
        case GroupKind::DyadicCantor: {
            for (int i = 0; i < arity_; ++i)
                if (x.digits[i] != y.digits[i]) return std::ldexp(1.0, -(i + 1));
            return 0.0;
        }
        case GroupKind::PAdicInt: {
            // distance p^-j where j is the lowest differing digit position of
            // x - y, i.e. the first position where x and y themselves differ
            for (int i = 0; i < arity_; ++i)
                if (x.digits[i] != y.digits[i])
                    return std::pow(static_cast<double>(prime_), -(i + 1));
            return 0.0;
        }
    }
    return 0.0;
}

double GroupDescriptor::diameter() const {
    switch (kind_) {
        case GroupKind::Torus:
            return 0.5;
        case GroupKind::FiniteAbelian: {
            double d = 0.0;
            for (auto m : moduli_)
                d = std::max(d, static_cast<double>(m / 2) / static_cast<double>(m));
            return d;
        }
        case GroupKind::DyadicCantor:
            return 0.5;
        case GroupKind::PAdicInt:
            return 1.0 / static_cast<double>(prime_);
    }
    return 0.0;
}

double GroupDescriptor::min_positive_distance() const {
    switch (kind_) {
        case GroupKind::Torus:
            throw ConfigError("torus has no minimum positive distance");
        case GroupKind::FiniteAbelian: {
            double d = 1.0;
            for (auto m : moduli_) d = std::min(d, 1.0 / static_cast<double>(m));
            return d;
        }
        case GroupKind::DyadicCantor:
            return std::ldexp(1.0, -arity_);
        case GroupKind::PAdicInt:
            return std::pow(static_cast<double>(prime_), -arity_);
    }
    return 0.0;
}

double GroupDescriptor::haar_ball_mass(double r) const {
    if (r < 0.0) throw ConfigError("ball radius must be nonnegative");
    switch (kind_) {
        case GroupKind::Torus: {
            double mass = 1.0;
            for (int i = 0; i < arity_; ++i) mass *= std::min(2.0 * r, 1.0);
            return mass;
        }
        case GroupKind::FiniteAbelian: {
            // closed ball under the sup metric factors over coordinates
            double mass = 1.0;
            for (auto m : moduli_) {
                const double md = static_cast<double>(m);
                const double jd = std::floor(r * md);
                std::int64_t jmax =
                    jd >= static_cast<double>(m / 2) ? m / 2 : static_cast<std::int64_t>(jd);
                // exact boundary: include j iff j/m <= r
                while (jmax + 1 <= m / 2 && static_cast<double>(jmax + 1) / md <= r) ++jmax;
                while (jmax > 0 && static_cast<double>(jmax) / md > r) --jmax;
                std::int64_t count = 1 + 2 * jmax;
                if (2 * jmax == m) count -= 1;  // antipode counted once
                count = std::min(count, m);
                mass *= static_cast<double>(count) / md;
            }
            return mass;
        }
        case GroupKind::DyadicCantor:
        case GroupKind::PAdicInt: {
            const double base =
                kind_ == GroupKind::DyadicCantor ? 2.0 : static_cast<double>(prime_);
            int forced = 0;  // leading digits forced equal by d <= r
            for (int j = 1; j <= arity_; ++j)
                if (std::pow(base, -j) > r) ++forced;
            return std::pow(base, -forced);
        }
    }
    return 0.0;
}

GroupElement GroupDescriptor::haar_sample(RngStream& rng) const {
    GroupElement e = zero();
    if (kind_ == GroupKind::Torus) {
        for (int i = 0; i < arity_; ++i) e.reals[i] = rng.uniform_double();
    } else {
        for (int i = 0; i < arity_; ++i)
            e.digits[i] = static_cast<std::int64_t>(
                rng.uniform_index(static_cast<std::uint64_t>(moduli_[i])));
    }
    return e;
}

GroupElement GroupDescriptor::element_at(std::uint64_t index) const {
    if (!is_finite()) throw ConfigError("torus elements cannot be enumerated");
    GroupElement e = zero();
    for (int i = 0; i < arity_; ++i) {
        const auto m = static_cast<std::uint64_t>(moduli_[i]);
        e.digits[i] = static_cast<std::int64_t>(index % m);
        index /= m;
    }
    if (index != 0) throw ConfigError("element index out of range");
    return e;
}

std::uint64_t GroupDescriptor::index_of(const GroupElement& x) const {
    require_element(x, "index_of");
    if (!is_finite()) throw ConfigError("torus elements have no index");
    std::uint64_t index = 0;
    for (int i = arity_ - 1; i >= 0; --i)
        index = index * static_cast<std::uint64_t>(moduli_[i]) +
                static_cast<std::uint64_t>(x.digits[i]);
    return index;
}

bool GroupDescriptor::contains(const GroupElement& x) const {
    if (is_finite()) {
        if (!x.reals.empty() || x.digits.size() != static_cast<std::size_t>(arity_))
            return false;
        for (int i = 0; i < arity_; ++i)
            if (x.digits[i] < 0 || x.digits[i] >= moduli_[i]) return false;
        return true;
    }
    if (!x.digits.empty() || x.reals.size() != static_cast<std::size_t>(arity_)) return false;
    for (double v : x.reals)
        if (!(v >= 0.0 && v < 1.0)) return false;
    return true;
}

void GroupDescriptor::require_element(const GroupElement& x, const char* where) const {
    if (!contains(x)) throw ConfigError(std::string(where) + ": element does not belong to " + to_string());
}

std::string GroupDescriptor::to_string() const {
    std::ostringstream os;
    switch (kind_) {
        case GroupKind::FiniteAbelian: {
            os << "Z/" << moduli_[0];
            for (std::size_t i = 1; i < moduli_.size(); ++i) os << " x Z/" << moduli_[i];
            break;
        }
        case GroupKind::Torus:
            os << "T^" << arity_;
            break;
        case GroupKind::DyadicCantor:
            os << "Cantor2^" << arity_;
            break;
        case GroupKind::PAdicInt:
            os << "Z" << prime_ << "adic^" << arity_;
            break;
    }
    return os.str();
}

}  // namespace haarwalk
