#include "flowscribe/terms/objective.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowscribe/terms/assign.hpp"
#include "flowscribe/terms/curves.hpp"
#include "flowscribe/terms/region.hpp"
#include "flowscribe/terms/shapes.hpp"
#include "flowscribe/terms/spatial.hpp"

namespace flowscribe::terms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Splits a value among particles in proportion to their gradient norms.
void gradient_share(const Term& t, const std::vector<Vec2>& x, std::vector<double>& out, double scale) {
    std::vector<Vec2> g(x.size());
    const double v = t.eval(x, &g, 1.0);
    double total = 0.0;
    for (const auto& gi : g) total += gi.norm();
    if (!(total > 0)) {
        for (auto& o : out) o += scale * v / static_cast<double>(x.size());
        return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += scale * v * g[i].norm() / total;
}

}  // namespace

void Term::contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const {
    gradient_share(*this, x, out, scale);
}

double Term::smooth_margin(const std::vector<Vec2>&) const { return kInf; }

namespace {

/// Mean squared distance of the subset to its nearest target (nearest-sample curve cost and nearest assignment).
class NearestTargetTerm : public Term {
public:
    NearestTargetTerm(std::string kind, std::vector<Vec2> targets, std::vector<std::size_t> idx, double L)
        : kind_(std::move(kind)), grid_(targets), idx_(std::move(idx)), inv_l2_(1.0 / (L * L)) {}

    std::string kind() const override { return kind_; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const double k = static_cast<double>(idx_.size());
        double sum = 0.0;
        for (std::size_t i : idx_) {
            const auto hit = grid_.nearest(x[i]);
            sum += hit.d2;
            if (grad) (*grad)[i] += (x[i] - grid_.points()[hit.index]) * (2.0 * scale * inv_l2_ / k);
        }
        return sum * inv_l2_ / k;
    }

    void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const override {
        const double k = static_cast<double>(idx_.size());
        for (std::size_t i : idx_) out[i] += scale * grid_.nearest(x[i]).d2 * inv_l2_ / k;
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        double m = kInf;
        for (std::size_t i : idx_) {
            // distance to the bisector between the two closest targets
            const auto hit = grid_.nearest(x[i], PointGrid::npos, true);
            if (hit.second == PointGrid::npos) continue;
            const double sep = distance(grid_.points()[hit.index], grid_.points()[hit.second]);
            m = std::min(m, sep > 0 ? (hit.second_d2 - hit.d2) / (2 * sep) : 0.0);
        }
        return m;
    }

private:
    std::string kind_;
    PointGrid grid_;
    std::vector<std::size_t> idx_;
    double inv_l2_;
};

class BalancedPointsTerm : public Term {
public:
    BalancedPointsTerm(std::vector<Vec2> targets, std::vector<std::size_t> idx, double L)
        : targets_(std::move(targets)), idx_(std::move(idx)), inv_l2_(1.0 / (L * L)) {}

    std::string kind() const override { return "shape.points"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const auto sub = gather(x);
        const auto a = assign(sub, targets_, AssignMode::balanced);
        const double k = static_cast<double>(idx_.size());
        if (grad)
            for (std::size_t s = 0; s < idx_.size(); ++s)
                (*grad)[idx_[s]] += (sub[s] - targets_[a.target[s]]) * (2.0 * scale * inv_l2_ / k);
        return a.cost * inv_l2_ / k;
    }

    void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const override {
        const auto sub = gather(x);
        const auto a = assign(sub, targets_, AssignMode::balanced);
        const double k = static_cast<double>(idx_.size());
        for (std::size_t s = 0; s < idx_.size(); ++s)
            out[idx_[s]] += scale * (sub[s] - targets_[a.target[s]]).norm2() * inv_l2_ / k;
    }

    // Smallest improvement of a pairwise swap or a move to a free target, as a length.
    double smooth_margin(const std::vector<Vec2>& x) const override {
        const auto sub = gather(x);
        const auto a = assign(sub, targets_, AssignMode::balanced);
        std::vector<char> used(targets_.size(), 0);
        for (auto j : a.target) used[j] = 1;
        double gap = kInf;
        for (std::size_t i = 0; i < sub.size(); ++i) {
            const double ci = (sub[i] - targets_[a.target[i]]).norm2();
            for (std::size_t k = i + 1; k < sub.size(); ++k) {
                const double before = ci + (sub[k] - targets_[a.target[k]]).norm2();
                const double after = (sub[i] - targets_[a.target[k]]).norm2() + (sub[k] - targets_[a.target[i]]).norm2();
                gap = std::min(gap, after - before);
            }
            for (std::size_t j = 0; j < targets_.size(); ++j)
                if (!used[j]) gap = std::min(gap, (sub[i] - targets_[j]).norm2() - ci);
        }
        double reach = 0.0;
        for (std::size_t i = 0; i < sub.size(); ++i)
            for (const auto& t : targets_) reach = std::max(reach, distance(sub[i], t));
        // a move of length delta changes any pair cost by at most 2 * reach * delta
        return std::max(gap, 0.0) / (4.0 * reach + 1e-300);
    }

private:
    std::vector<Vec2> gather(const std::vector<Vec2>& x) const {
        std::vector<Vec2> s;
        s.reserve(idx_.size());
        for (auto i : idx_) s.push_back(x[i]);
        return s;
    }

    std::vector<Vec2> targets_;
    std::vector<std::size_t> idx_;
    double inv_l2_;
};

/// Angle-ordered quadrilateral: side-length dispersion, squared corner cosines, diagonal mismatch.
class SquareTerm : public Term {
public:
    explicit SquareTerm(std::array<std::size_t, 4> idx) : idx_(idx) {}

    std::string kind() const override { return "shape.square"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const auto ord = order(x);
        Vec2 q[4];
        for (int k = 0; k < 4; ++k) q[k] = x[ord[k]];
        Vec2 g[4];
        const double v = value(q, grad ? g : nullptr);
        if (grad)
            for (int k = 0; k < 4; ++k) (*grad)[ord[k]] += g[k] * scale;
        return v;
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        Vec2 c;
        for (auto i : idx_) c += x[i] * 0.25;
        std::array<double, 4> ang;
        double rad = 0.0;
        for (int k = 0; k < 4; ++k) {
            const Vec2 d = x[idx_[k]] - c;
            ang[k] = std::atan2(d.y, d.x);
            rad += 0.25 * d.norm();
        }
        std::sort(ang.begin(), ang.end());
        double gap = ang[0] + 2 * kPi - ang[3];
        for (int k = 0; k < 3; ++k) gap = std::min(gap, ang[k + 1] - ang[k]);
        return gap * rad;
    }

    /// Value for four points already in cyclic order; optional gradient w.r.t. each.
    static double value(const Vec2 q[4], Vec2* g) {
        if (g)
            for (int k = 0; k < 4; ++k) g[k] = {};
        // side lengths
        Vec2 e[4];
        double s[4], mu = 0.0, sq = 0.0;
        for (int k = 0; k < 4; ++k) {
            e[k] = q[(k + 1) % 4] - q[k];
            s[k] = e[k].norm();
            mu += 0.25 * s[k];
            sq += 0.25 * s[k] * s[k];
        }
        if (!(mu > 0)) return 1.0;
        const double sides = sq / (mu * mu) - 1.0;
        if (g) {
            for (int k = 0; k < 4; ++k) {
                if (s[k] == 0) continue;
                const double dA = s[k] / (2 * mu * mu) - sq / (2 * mu * mu * mu);
                const Vec2 u = e[k] / s[k];
                g[(k + 1) % 4] += u * dA;
                g[k] -= u * dA;
            }
        }
        // corner cosines
        double corners = 0.0;
        for (int k = 0; k < 4; ++k) {
            const Vec2 a = q[(k + 3) % 4] - q[k];
            const Vec2 b = q[(k + 1) % 4] - q[k];
            const double na = a.norm(), nb = b.norm();
            if (na == 0 || nb == 0) continue;
            const double c = dot(a, b) / (na * nb);
            corners += c * c;
            if (g) {
                const Vec2 dca = b / (na * nb) - a * (c / (na * na));
                const Vec2 dcb = a / (na * nb) - b * (c / (nb * nb));
                g[(k + 3) % 4] += dca * (2 * c);
                g[(k + 1) % 4] += dcb * (2 * c);
                g[k] -= (dca + dcb) * (2 * c);
            }
        }
        // diagonals
        const Vec2 f1 = q[2] - q[0], f2 = q[3] - q[1];
        const double d1 = f1.norm(), d2 = f2.norm();
        double diag = 0.0;
        if (d1 + d2 > 0) {
            const double r = (d1 - d2) / (d1 + d2);
            diag = r * r;
            if (g) {
                const double den = (d1 + d2) * (d1 + d2);
                const double dd1 = 2 * r * 2 * d2 / den;
                const double dd2 = -2 * r * 2 * d1 / den;
                if (d1 > 0) {
                    g[2] += f1 / d1 * dd1;
                    g[0] -= f1 / d1 * dd1;
                }
                if (d2 > 0) {
                    g[3] += f2 / d2 * dd2;
                    g[1] -= f2 / d2 * dd2;
                }
            }
        }
        return sides + corners + diag;
    }

private:
    std::array<std::size_t, 4> order(const std::vector<Vec2>& x) const {
        Vec2 c;
        for (auto i : idx_) c += x[i] * 0.25;
        std::array<std::size_t, 4> o = idx_;
        std::sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) {
            const Vec2 da = x[a] - c, db = x[b] - c;
            const double ta = std::atan2(da.y, da.x), tb = std::atan2(db.y, db.x);
            if (ta != tb) return ta < tb;
            if (x[a].x != x[b].x) return x[a].x < x[b].x;
            return x[a].y < x[b].y;
        });
        return o;
    }

    std::array<std::size_t, 4> idx_;
};

class RepelTerm : public Term {
public:
    explicit RepelTerm(double d0) : d0_(d0) {}

    std::string kind() const override { return "spacing.repel"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        if (x.size() < 2) return 0.0;
        const PointGrid grid(x);
        const double n = static_cast<double>(x.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto hit = grid.nearest(x[i], i);
            const double d = std::sqrt(hit.d2);
            if (d >= d0_) continue;
            const double u = 1.0 - d / d0_;
            sum += u * u;
            if (grad && d > 0) {
                const Vec2 dir = (x[i] - x[hit.index]) / d;
                const Vec2 gi = dir * (-2.0 * u / d0_ * scale / n);
                (*grad)[i] += gi;
                (*grad)[hit.index] -= gi;
            }
        }
        return sum / n;
    }

    void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const override {
        if (x.size() < 2) return;
        const PointGrid grid(x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = std::sqrt(grid.nearest(x[i], i).d2);
            if (d < d0_) out[i] += scale * (1 - d / d0_) * (1 - d / d0_) / static_cast<double>(x.size());
        }
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        if (x.size() < 2) return kInf;
        const PointGrid grid(x);
        double m = kInf;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto hit = grid.nearest(x[i], i, true);
            const double d = std::sqrt(hit.d2);
            m = std::min({m, d, std::sqrt(hit.second_d2) - d, std::abs(d - d0_)});
        }
        return m;
    }

private:
    double d0_;
};

class DensityTerm : public Term {
public:
    explicit DensityTerm(Region r) : region_(std::move(r)) {}

    std::string kind() const override { return "region.density"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const double n = static_cast<double>(x.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            Vec2 g;
            sum += region_.membership(x[i], grad ? &g : nullptr);
            if (grad) (*grad)[i] -= g * (scale / n);
        }
        return 1.0 - sum / n;
    }

    void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const override {
        for (std::size_t i = 0; i < x.size(); ++i)
            out[i] += scale * (1.0 - region_.membership(x[i])) / static_cast<double>(x.size());
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        double m = kInf;
        for (const auto& p : x) m = std::min(m, region_.smooth_margin(p));
        return m;
    }

private:
    Region region_;
};

class PeripheryTerm : public Term {
public:
    PeripheryTerm(Region r, std::vector<std::size_t> subset, double ring, double L, std::size_t n)
        : region_(std::move(r)), inside_(n, 0), ring_(ring), inv_l2_(1.0 / (L * L)) {
        for (auto i : subset) inside_[i] = 1;
    }

    std::string kind() const override { return "region.periphery"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const double n = static_cast<double>(x.size());
        const Vec2 c = region_.anchor();
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (inside_[i]) {
                Vec2 g;
                sum += 1.0 - region_.membership(x[i], grad ? &g : nullptr);
                if (grad) (*grad)[i] -= g * (scale / n);
            } else {
                const Vec2 d = x[i] - c;
                const double rho = d.norm();
                sum += (rho - ring_) * (rho - ring_) * inv_l2_;
                if (grad && rho > 0) (*grad)[i] += d * (2.0 * (rho - ring_) * inv_l2_ / rho * scale / n);
            }
        }
        return sum / n;
    }

    void contributions(const std::vector<Vec2>& x, std::vector<double>& out, double scale) const override {
        const double n = static_cast<double>(x.size());
        const Vec2 c = region_.anchor();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double rho = distance(x[i], c);
            out[i] += scale / n * (inside_[i] ? 1.0 - region_.membership(x[i]) : (rho - ring_) * (rho - ring_) * inv_l2_);
        }
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        double m = kInf;
        for (std::size_t i = 0; i < x.size(); ++i)
            m = std::min(m, inside_[i] ? region_.smooth_margin(x[i]) : distance(x[i], region_.anchor()));
        return m;
    }

private:
    Region region_;
    std::vector<char> inside_;
    double ring_;
    double inv_l2_;
};

class AnchorCenterTerm : public Term {
public:
    AnchorCenterTerm(Vec2 p, double L) : p_(p), inv_l2_(1.0 / (L * L)) {}
    std::string kind() const override { return "anchor.center"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const Vec2 d = centroid(x) - p_;
        if (grad) {
            const Vec2 g = d * (2.0 * inv_l2_ * scale / static_cast<double>(x.size()));
            for (auto& gi : *grad) gi += g;
        }
        return d.norm2() * inv_l2_;
    }

private:
    Vec2 p_;
    double inv_l2_;
};

class AnchorScaleTerm : public Term {
public:
    AnchorScaleTerm(double r, double L) : r_(r), inv_l2_(1.0 / (L * L)) {}
    std::string kind() const override { return "anchor.scale"; }

    double eval(const std::vector<Vec2>& x, std::vector<Vec2>* grad, double scale) const override {
        const Vec2 c = centroid(x);
        const double n = static_cast<double>(x.size());
        double ms = 0.0;
        for (const auto& p : x) ms += (p - c).norm2() / n;
        const double rms = std::sqrt(ms);
        if (grad && rms > 0)
            for (std::size_t i = 0; i < x.size(); ++i)
                (*grad)[i] += (x[i] - c) * (2.0 * (rms - r_) * inv_l2_ / (n * rms) * scale);
        return (rms - r_) * (rms - r_) * inv_l2_;
    }

    double smooth_margin(const std::vector<Vec2>& x) const override {
        const Vec2 c = centroid(x);
        double ms = 0.0;
        for (const auto& p : x) ms += (p - c).norm2() / static_cast<double>(x.size());
        return std::sqrt(ms);
    }

private:
    double r_;
    double inv_l2_;
};

// ---- compilation ----

std::vector<std::size_t> subset_of(const dsl::TermNode& t, std::size_t n) {
    std::vector<std::size_t> idx;
    if (const dsl::Value* s = t.param("subset")) {
        for (const auto& item : s->list().items) {
            const double v = item.number();
            if (v < 0 || v >= static_cast<double>(n))
                throw CompileError(t.kind + ": subset index " + std::to_string(static_cast<long>(v)) +
                                   " out of range for n = " + std::to_string(n));
            idx.push_back(static_cast<std::size_t>(v));
        }
    } else {
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    return idx;
}

std::size_t count_param(const dsl::TermNode& t, std::string_view key, std::size_t fallback) {
    const dsl::Value* v = t.param(key);
    return v && v->is_number() ? static_cast<std::size_t>(v->number()) : fallback;
}

std::shared_ptr<const Term> build(const dsl::TermNode& t, std::size_t n, double L) {
    const std::string& k = t.kind;
    if (k == "shape.curve") {
        auto idx = subset_of(t, n);
        const std::size_t m = count_param(t, "samples", 16 * idx.size());
        if (m < 2) throw CompileError("shape.curve: sampling count must be at least 2");
        auto targets = sample_curve(curve_from_value(*t.param("curve")), m);
        return std::make_shared<NearestTargetTerm>(k, std::move(targets.points), std::move(idx), L);
    }
    if (k == "shape.points") {
        auto idx = subset_of(t, n);
        auto targets = resolve_targets(*t.param("targets"), count_param(t, "count", idx.size()));
        const dsl::Value* mode = t.param("assign");
        if (mode && mode->symbol() == "nearest")
            return std::make_shared<NearestTargetTerm>(k, std::move(targets.points), std::move(idx), L);
        if (targets.size() < idx.size())
            throw CompileError("shape.points: balanced assignment needs at least as many targets (" +
                               std::to_string(targets.size()) + ") as particles (" + std::to_string(idx.size()) + ")");
        return std::make_shared<BalancedPointsTerm>(std::move(targets.points), std::move(idx), L);
    }
    if (k == "shape.square") {
        auto idx = subset_of(t, n);
        if (idx.size() != 4) throw CompileError("shape.square needs exactly 4 particles");
        return std::make_shared<SquareTerm>(std::array<std::size_t, 4>{idx[0], idx[1], idx[2], idx[3]});
    }
    if (k == "spacing.repel") return std::make_shared<RepelTerm>(t.param("d0")->number());
    if (k == "region.density") return std::make_shared<DensityTerm>(region_from_value(*t.param("region")));
    if (k == "region.periphery")
        return std::make_shared<PeripheryTerm>(region_from_value(*t.param("region")), subset_of(t, n),
                                               t.param("ring-radius")->number(), L, n);
    if (k == "anchor.center") {
        const auto& items = t.param("point")->list().items;
        return std::make_shared<AnchorCenterTerm>(Vec2{items[0].number(), items[1].number()}, L);
    }
    if (k == "anchor.scale") return std::make_shared<AnchorScaleTerm>(t.param("radius")->number(), L);
    throw CompileError("unknown term kind " + k);
}

}  // namespace

CompiledObjective::CompiledObjective(std::size_t n, double norm_length, double tolerance, std::string name,
                                     std::vector<WeightedTerm> terms)
    : n_(n), norm_length_(norm_length), tolerance_(tolerance), name_(std::move(name)), terms_(std::move(terms)) {}

void CompiledObjective::check(const std::vector<Vec2>& x) const {
    if (x.size() != n_)
        throw std::invalid_argument("configuration has " + std::to_string(x.size()) + " particles, objective expects " +
                                    std::to_string(n_));
}

double CompiledObjective::evaluate(const std::vector<Vec2>& x) const {
    check(x);
    double f = 0.0;
    for (const auto& t : terms_)
        if (t.weight != 0) f += t.weight * t.term->eval(x, nullptr, 0.0);
    return f;
}

double CompiledObjective::value_and_gradient(const std::vector<Vec2>& x, std::vector<Vec2>& grad) const {
    check(x);
    grad.assign(n_, Vec2{});
    double f = 0.0;
    for (const auto& t : terms_)
        if (t.weight != 0) f += t.weight * t.term->eval(x, &grad, t.weight);
    return f;
}

std::vector<Vec2> CompiledObjective::gradient(const std::vector<Vec2>& x) const {
    std::vector<Vec2> g;
    value_and_gradient(x, g);
    return g;
}

std::vector<double> CompiledObjective::term_values(const std::vector<Vec2>& x) const {
    check(x);
    std::vector<double> v;
    for (const auto& t : terms_) v.push_back(t.term->eval(x, nullptr, 0.0));
    return v;
}

std::vector<double> CompiledObjective::contributions(const std::vector<Vec2>& x) const {
    check(x);
    std::vector<double> out(n_, 0.0);
    for (const auto& t : terms_)
        if (t.weight != 0) t.term->contributions(x, out, t.weight);
    return out;
}

double CompiledObjective::smooth_margin(const std::vector<Vec2>& x) const {
    check(x);
    double m = kInf;
    for (const auto& t : terms_) m = std::min(m, t.term->smooth_margin(x));
    return m;
}

CompiledObjective CompiledObjective::scaled(double s) const {
    auto terms = terms_;
    for (auto& t : terms) t.weight *= s;
    CompiledObjective out(n_, norm_length_, tolerance_, name_, std::move(terms));
    out.uses_labels_ = uses_labels_;
    return out;
}

CompiledObjective compile(const dsl::ObjectiveSpec& spec, std::optional<std::size_t> n) {
    if (spec.terms.empty()) throw CompileError("objective has no terms");
    if (n && spec.n_expected && static_cast<std::size_t>(*spec.n_expected) != *n)
        throw CompileError("objective declares n = " + std::to_string(*spec.n_expected) + " but " + std::to_string(*n) +
                           " particles were requested");
    if (!n && !spec.n_expected) throw CompileError("particle count unknown: declare :n or pass n");
    const std::size_t count = n ? *n : static_cast<std::size_t>(*spec.n_expected);
    if (count == 0) throw CompileError("particle count must be at least 1");
    std::vector<WeightedTerm> terms;
    bool labelled = false;
    for (const auto& t : spec.terms) {
        labelled = labelled || t.param("subset") != nullptr;
        try {
            terms.push_back({t.weight, build(t, count, spec.norm_length)});
        } catch (const std::invalid_argument& e) {
            throw CompileError(t.kind + ": " + e.what());
        }
    }
    CompiledObjective obj(count, spec.norm_length, spec.tolerance, spec.name, std::move(terms));
    obj.set_uses_labels(labelled);
    return obj;
}

}  // namespace flowscribe::terms
