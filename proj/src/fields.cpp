#include "magloop/fields.hpp"

#include "magloop/errors.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <map>
#include <sstream>

namespace magloop {

SphericalField::SphericalField(std::vector<HarmonicTerm> terms) {
    std::map<std::pair<int, int>, double> merged;
    for (const auto& t : terms) {
        if (t.degree < 0 || std::abs(t.order) > t.degree) {
            std::ostringstream msg;
            msg << "invalid harmonic index (l=" << t.degree << ", m=" << t.order << ")";
            throw DomainError(msg.str());
        }
        if (!std::isfinite(t.coeff)) throw DomainError("non-finite harmonic coefficient");
        merged[{t.degree, t.order}] += t.coeff;
    }
    for (const auto& [key, c] : merged) {
        if (c == 0.0) continue;
        terms_.push_back({key.first, key.second, c});
        max_degree_ = std::max(max_degree_, key.first);
    }
}

SphericalField SphericalField::constant(double c) { return SphericalField({{0, 0, c}}); }

double SphericalField::coefficient(int degree, int order) const {
    for (const auto& t : terms_)
        if (t.degree == degree && t.order == order) return t.coeff;
    return 0.0;
}

namespace {

std::vector<double> degree_norms(const std::vector<HarmonicTerm>& terms, int L) {
    std::vector<double> sq(std::max(L + 1, 0), 0.0);
    for (const auto& t : terms) sq[t.degree] += t.coeff * t.coeff;
    for (auto& s : sq) s = std::sqrt(s);
    return sq;
}

}  // namespace

double SphericalField::lipschitz_bound() const {
    const auto norms = degree_norms(terms_, max_degree_);
    double b = 0.0;
    for (std::size_t l = 0; l < norms.size(); ++l) b += double(l) * norms[l];
    return b;
}

double SphericalField::second_derivative_bound() const {
    const auto norms = degree_norms(terms_, max_degree_);
    double b = 0.0;
    for (std::size_t l = 0; l < norms.size(); ++l) b += double(l * l) * norms[l];
    return b;
}

SphericalField SphericalField::operator*(double s) const {
    auto terms = terms_;
    for (auto& t : terms) t.coeff *= s;
    return SphericalField(std::move(terms));
}

SphericalField SphericalField::operator+(const SphericalField& other) const {
    auto terms = terms_;
    terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
    return SphericalField(std::move(terms));
}

SphericalField SphericalField::operator+(double c) const { return *this + constant(c); }

std::uint64_t SphericalField::checksum() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& t : terms_) {
        const std::int32_t l = t.degree, m = t.order;
        mix(&l, sizeof l);
        mix(&m, sizeof m);
        mix(&t.coeff, sizeof t.coeff);
    }
    return h;
}

bool operator==(const SphericalField& a, const SphericalField& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
        const auto& x = a.terms_[i];
        const auto& y = b.terms_[i];
        if (x.degree != y.degree || x.order != y.order || x.coeff != y.coeff) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// infimum certification

namespace {

struct Triangle {
    Vec3d a, b, c;
};

std::vector<Triangle> icosahedron() {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::array<Vec3d, 12> v = {Vec3d(-1, p, 0),  Vec3d(1, p, 0),   Vec3d(-1, -p, 0), Vec3d(1, -p, 0),
                               Vec3d(0, -1, p),  Vec3d(0, 1, p),   Vec3d(0, -1, -p), Vec3d(0, 1, -p),
                               Vec3d(p, 0, -1),  Vec3d(p, 0, 1),   Vec3d(-p, 0, -1), Vec3d(-p, 0, 1)};
    for (auto& x : v) x.normalize();
    static constexpr int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    std::vector<Triangle> out;
    for (const auto& f : faces) out.push_back({v[f[0]], v[f[1]], v[f[2]]});
    return out;
}

std::array<Triangle, 4> subdivide(const Triangle& t) {
    const Vec3d ab = (t.a + t.b).normalized();
    const Vec3d bc = (t.b + t.c).normalized();
    const Vec3d ca = (t.c + t.a).normalized();
    return {Triangle{t.a, ab, ca}, Triangle{ab, t.b, bc}, Triangle{ca, bc, t.c}, Triangle{ab, bc, ca}};
}

double angle(const Vec3d& u, const Vec3d& v) { return std::atan2(u.cross(v).norm(), u.dot(v)); }

// Riemannian gradient descent with Armijo backtracking along great circles.
Vec3d descend(const SphericalField& f, Vec3d x) {
    double fx = f.value(x);
    double step = 1.0;
    for (int it = 0; it < 500; ++it) {
        const Vec3d g = f.jet(x).grad;
        const double gn = g.norm();
        if (gn < 1e-14) break;
        const Vec3d dir = -g / gn;
        bool moved = false;
        while (step > 1e-16) {
            const Vec3d y = (std::cos(step) * x + std::sin(step) * dir).normalized();
            const double fy = f.value(y);
            if (fy <= fx - 1e-4 * step * gn) {
                x = y;
                fx = fy;
                moved = true;
                step = std::min(1.0, step * 2.0);
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return x;
}

}  // namespace

InfimumBound field_infimum(const SphericalField& f, double tol) {
    InfimumBound out;
    if (f.is_constant()) {
        out.lower = f.value(Vec3d(Vec3d::UnitZ()));
        out.gap = 0.0;
        return out;
    }
    const double m2 = f.second_derivative_bound();

    // initial level-3 refinement, best centers as descent starts
    std::vector<Triangle> work = icosahedron();
    for (int level = 0; level < 3; ++level) {
        std::vector<Triangle> next;
        next.reserve(work.size() * 4);
        for (const auto& t : work)
            for (const auto& s : subdivide(t)) next.push_back(s);
        work.swap(next);
    }
    std::vector<std::pair<double, Vec3d>> centers;
    centers.reserve(work.size());
    for (const auto& t : work) {
        const Vec3d c = (t.a + t.b + t.c).normalized();
        centers.emplace_back(f.value(c), c);
    }
    std::partial_sort(centers.begin(), centers.begin() + 8, centers.end(),
                      [](const auto& p, const auto& q) { return p.first < q.first; });
    double best = centers.front().first;
    Vec3d best_x = centers.front().second;
    for (int i = 0; i < 8; ++i) {
        const Vec3d x = descend(f, centers[i].second);
        const double fx = f.value(x);
        if (fx < best) {
            best = fx;
            best_x = x;
        }
    }

    double lower = best;
    std::size_t budget = 4'000'000;
    while (!work.empty()) {
        Triangle t = work.back();
        work.pop_back();
        const Vec3d c = (t.a + t.b + t.c).normalized();
        const double r = std::max({angle(c, t.a), angle(c, t.b), angle(c, t.c)});
        const auto j = f.jet(c);
        if (j.value < best) {
            best = j.value;
            best_x = c;
        }
        const double lb = j.value - j.grad.norm() * r - 0.5 * m2 * r * r;
        if (lb >= best - tol || r < 1e-7 || budget == 0) {
            lower = std::min(lower, lb);
            continue;
        }
        --budget;
        for (const auto& s : subdivide(t)) work.push_back(s);
    }
    out.lower = std::min(lower, best);
    out.gap = best - out.lower;
    out.argmin = best_x;
    return out;
}

FieldPair FieldPair::certified(SphericalField phi, SphericalField k) {
    const auto inf = field_infimum(k);
    if (!(inf.lower > 0.0)) {
        std::ostringstream msg;
        msg << "curvature prescription k must be positive on S^2 (certified lower bound " << inf.lower
            << ")";
        throw DomainError(msg.str());
    }
    return FieldPair{std::move(phi), std::move(k), inf.lower};
}

FieldPair homotopy_fields(const FieldPair& pair, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("homotopy parameter outside [0, 1]");
    if (!(pair.k_inf > 0.0)) throw DomainError("homotopy requires k_inf > 0");
    if (t == 1.0) return pair;
    return FieldPair{pair.phi * t, pair.k * t + (1.0 - t) * pair.k_inf, pair.k_inf};
}

}  // namespace magloop
