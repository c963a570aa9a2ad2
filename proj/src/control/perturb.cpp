#include "flowscribe/control/perturb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace flowscribe::control {

std::string to_string(PerturbKind k) {
    switch (k) {
        case PerturbKind::displacements: return "displacements";
        case PerturbKind::scatter: return "scatter";
        case PerturbKind::triangle: return "triangle";
    }
    return "unknown";
}

PerturbKind parse_perturb_kind(const std::string& s) {
    if (s == "scatter") return PerturbKind::scatter;
    if (s == "triangle" || s == "collapse-to-triangle") return PerturbKind::triangle;
    if (s == "displacements") return PerturbKind::displacements;
    throw std::invalid_argument("unknown perturbation '" + s + "' (expected scatter or triangle)");
}

void Perturbation::validate(std::size_t n) const {
    if (indices) {
        for (auto i : *indices)
            if (i >= n) throw std::invalid_argument("perturbation index " + std::to_string(i) + " out of range");
        auto sorted = *indices;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("duplicate perturbation index");
    }
    const std::size_t affected = indices ? indices->size() : n;
    if (kind == PerturbKind::displacements) {
        if (displacements.size() != affected)
            throw std::invalid_argument("need one displacement per affected particle");
        if (!all_finite(displacements)) throw std::invalid_argument("non-finite displacement");
    }
    if (!std::isfinite(magnitude)) throw std::invalid_argument("non-finite perturbation magnitude");
}

nlohmann::json to_json(const Perturbation& p) {
    nlohmann::json j = {{"kind", to_string(p.kind)}, {"magnitude", p.magnitude}, {"seed", p.seed}};
    if (p.indices) j["indices"] = *p.indices;
    if (!p.displacements.empty()) {
        auto d = nlohmann::json::array();
        for (const auto& v : p.displacements) d.push_back({v.x, v.y});
        j["displacements"] = d;
    }
    return j;
}

Perturbation perturbation_from_json(const nlohmann::json& j) {
    Perturbation p;
    if (j.contains("displacements") && !j.contains("kind")) p.kind = PerturbKind::displacements;
    if (j.contains("kind")) p.kind = parse_perturb_kind(j.at("kind").get<std::string>());
    if (j.contains("indices")) p.indices = j.at("indices").get<std::vector<std::size_t>>();
    for (const auto& d : j.value("displacements", nlohmann::json::array()))
        p.displacements.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
    p.magnitude = j.value("magnitude", 0.0);
    p.seed = j.value("seed", std::uint64_t{0});
    return p;
}

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double L2 = ab.norm2();
    if (L2 == 0) return a;
    return a + ab * std::clamp(dot(p - a, ab) / L2, 0.0, 1.0);
}

ParticleConfig perturb(const ParticleConfig& a, const Perturbation& p) {
    p.validate(a.size());
    std::vector<std::size_t> who;
    if (p.indices) {
        who = *p.indices;
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) who.push_back(i);
    }
    ParticleConfig out = a;
    if (who.empty()) return out;

    switch (p.kind) {
        case PerturbKind::displacements:
            for (std::size_t k = 0; k < who.size(); ++k) out.positions[who[k]] += p.displacements[k];
            break;
        case PerturbKind::scatter: {
            const double mag = p.magnitude > 0 ? p.magnitude : 0.3 * a.fov.diagonal();
            std::mt19937_64 rng(p.seed);
            std::uniform_real_distribution<double> ang(-kPi, kPi), rad(0.0, mag);
            for (auto i : who) {
                const double t = ang(rng), r = rad(rng);
                out.positions[i] += Vec2{std::cos(t), std::sin(t)} * r;
            }
            break;
        }
        case PerturbKind::triangle: {
            std::vector<Vec2> pts;
            for (auto i : who) pts.push_back(a.positions[i]);
            const Vec2 c = centroid(pts);
            double R = 0.0;
            for (const auto& q : pts) R = std::max(R, distance(q, c));
            std::array<Vec2, 3> v;
            for (int k = 0; k < 3; ++k) {
                const double t = kPi / 2 + 2 * kPi * k / 3;
                v[k] = c + Vec2{std::cos(t), std::sin(t)} * R;
            }
            for (auto i : who) {
                const Vec2 q = a.positions[i];
                Vec2 best = closest_on_segment(q, v[0], v[1]);
                for (int k = 1; k < 3; ++k) {
                    const Vec2 cand = closest_on_segment(q, v[k], v[(k + 1) % 3]);
                    if (distance(q, cand) < distance(q, best)) best = cand;
                }
                out.positions[i] = best;
            }
            break;
        }
    }
    for (auto i : who) out.positions[i] = a.fov.clamp(out.positions[i]);
    return out;
}

}  // namespace flowscribe::control
