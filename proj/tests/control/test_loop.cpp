#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "flowscribe/control/metrics.hpp"
#include "flowscribe/control/run.hpp"
#include "flowscribe/potential/solver.hpp"
#include "support/fixtures.hpp"

using namespace flowscribe;
using namespace flowscribe::control;
namespace fs = std::filesystem;

namespace {

ParticleConfig start4(std::uint64_t seed) {
    auto a = potential::random_config(4, Rect::centered(8, 8), seed);
    a.fov = Rect::centered(50, 50);
    return a;
}

LoopConfig square_loop(int cycles) {
    LoopConfig c;
    c.cycles = cycles;
    c.planner.kind = flow::PrimitiveKind::circular;
    c.planner.n_paths = 4;
    c.planner.sqp.max_iters = 20;
    c.constraints.a_max = 3;
    c.seed = 4;
    return c;
}

RunConfig square_run(int cycles) {
    RunConfig r;
    r.spec_text = fixtures::read_spec("square_descriptive.dsl");
    r.initial = start4(2);
    r.loop = square_loop(cycles);
    return r;
}

bool has_event(const Frame& f, const std::string& kind) {
    for (const auto& e : f.events)
        if (e.kind == kind) return true;
    return false;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("flowscribe-test-" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("closed loop traces are non-increasing between perturbations") {
    const flow::FlowModel model;
    const auto obj = fixtures::objective("square_descriptive.dsl");
    auto cfg = square_loop(12);
    Perturbation kick;
    kick.magnitude = 2.0;
    kick.seed = 1;
    cfg.perturbations.push_back({5, kick});
    const auto rec = run_closed_loop(model, start4(2), obj, cfg);

    REQUIRE(rec.frames.size() == 13);
    CHECK(rec.stop_reason == "cycles");
    long adv = 0;
    for (std::size_t k = 0; k < rec.frames.size(); ++k) {
        const auto& f = rec.frames[k];
        CAPTURE(k);
        CHECK(f.cycle == static_cast<int>(k));
        CHECK(f.objective == doctest::Approx(obj.evaluate({f.positions, rec.fov})).epsilon(1e-14));
        CHECK(std::isfinite(f.squareness));
        CHECK(std::isnan(f.density_ratio));
        adv += f.advections;
        if (k == 0) continue;
        if (f.accepted) {
            CHECK(f.plan.primitives.size() == 4);
            CHECK(f.objective == doctest::Approx(f.predicted).epsilon(1e-12));
        } else {
            CHECK(f.plan.primitives.empty());
            CHECK(has_event(f, "stall"));
        }
        if (!has_event(f, "perturbation")) CHECK(f.objective <= rec.frames[k - 1].objective);
    }
    CHECK(adv == rec.total_advections);
    CHECK(has_event(rec.frames[5], "perturbation"));
    CHECK(rec.frames[5].events.front().detail.at("source") == "schedule");
    CHECK(rec.frames.back().objective < 0.5 * rec.frames.front().objective);
}

TEST_CASE("closed loop stops at the target and is deterministic") {
    const flow::FlowModel model;
    const auto obj = fixtures::objective("square_descriptive.dsl");
    auto cfg = square_loop(30);
    cfg.target = obj.tolerance();
    const auto a = run_closed_loop(model, start4(3), obj, cfg);
    const auto b = run_closed_loop(model, start4(3), obj, cfg);
    CHECK(a.stop_reason == "target");
    CHECK(a.frames.back().objective <= obj.tolerance());
    for (std::size_t k = 0; k + 1 < a.frames.size(); ++k) CHECK(a.frames[k].objective > obj.tolerance());
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(to_json(a.frames[k]) == to_json(b.frames[k]));
}

TEST_CASE("at target the loop holds until the last scheduled perturbation") {
    const flow::FlowModel model;
    const auto obj = fixtures::objective("square_descriptive.dsl");
    auto cfg = square_loop(60);
    cfg.target = obj.tolerance();
    Perturbation tri;
    tri.kind = PerturbKind::triangle;
    cfg.perturbations.push_back({25, tri});
    const auto rec = run_closed_loop(model, start4(3), obj, cfg);
    REQUIRE(rec.frames.size() > 26);
    CHECK(rec.stop_reason == "target");
    CHECK(rec.frames.back().objective <= obj.tolerance());
    const Frame& hit = rec.frames[25];
    CHECK(has_event(hit, "perturbation"));
    CHECK(hit.accepted);
    bool held = false;
    for (std::size_t k = 1; k < 25; ++k) {
        if (!has_event(rec.frames[k], "hold")) continue;
        held = true;
        CHECK(rec.frames[k].advections == 0);
        CHECK(rec.frames[k].plan.primitives.empty());
        CHECK(rec.frames[k].positions == rec.frames[k - 1].positions);
    }
    CHECK(held);
}

TEST_CASE("an optimal configuration stalls without moving") {
    const flow::FlowModel model;
    const auto obj = fixtures::objective("square_descriptive.dsl");
    ParticleConfig sq{{{0, 0}, {5, 0}, {5, 5}, {0, 5}}, Rect::centered(50, 50)};
    REQUIRE(obj.evaluate(sq) < 1e-20);
    const auto rec = run_closed_loop(model, sq, obj, square_loop(3));
    for (std::size_t k = 1; k < rec.frames.size(); ++k) {
        CHECK_FALSE(rec.frames[k].accepted);
        CHECK(has_event(rec.frames[k], "reseed"));
        CHECK(has_event(rec.frames[k], "stall"));
        CHECK(rec.frames[k].positions == sq.positions);
    }
}

TEST_CASE("hooks: frames, live perturbations and cancellation") {
    const flow::FlowModel model;
    const auto obj = fixtures::objective("square_descriptive.dsl");
    int seen = 0;
    LoopHooks hooks;
    hooks.on_frame = [&](const Frame& f) { CHECK(f.cycle == seen++); };
    hooks.pending = [&]() {
        std::vector<Perturbation> out;
        if (seen == 2) {
            Perturbation p;
            p.kind = PerturbKind::triangle;
            out.push_back(p);
        }
        return out;
    };
    hooks.cancelled = [&]() { return seen >= 4; };
    const auto rec = run_closed_loop(model, start4(5), obj, square_loop(20), hooks);
    CHECK(rec.stop_reason == "cancelled");
    CHECK(rec.frames.size() == 4);
    CHECK(seen == 4);
    REQUIRE(has_event(rec.frames[2], "perturbation"));
    const auto& e = rec.frames[2].events.front();
    CHECK(e.detail.at("source") == "live");
    CHECK(e.detail.at("perturbation").at("kind") == "triangle");
}

TEST_CASE("metrics in frames") {
    const flow::FlowModel model;
    auto r = terms::compile(*dsl::parse("(objective :n 3 (term region.density :region (disk :center [0 0] :r 5)))").spec);
    ParticleConfig a{{{10, 0}, {0, 12}, {-9, -9}}, Rect::centered(50, 50)};
    auto cfg = square_loop(2);
    cfg.planner.n_paths = 2;
    cfg.density_region = terms::Region::disk({0, 0}, 5);
    const auto rec = run_closed_loop(model, a, r, cfg);
    for (const auto& f : rec.frames) {
        CHECK(std::isnan(f.squareness));
        CHECK(f.density_ratio == doctest::Approx(density_ratio({f.positions, rec.fov}, *cfg.density_region)));
        const auto back = frame_from_json(to_json(f));
        CHECK(std::isnan(back.squareness));
        CHECK(to_json(back) == to_json(f));
    }
    CHECK_THROWS_AS(run_closed_loop(model, start4(1), r, cfg), std::invalid_argument);
    cfg.cycles = 0;
    CHECK_THROWS_AS(run_closed_loop(model, a, r, cfg), std::invalid_argument);
}

TEST_CASE("density region comes from the spec") {
    const auto reg = density_region_of(fixtures::spec("concentrate.dsl"));
    REQUIRE(reg);
    CHECK(reg->kind == terms::RegionKind::disk);
    CHECK(reg->r == doctest::Approx(5.6419));
    CHECK_FALSE(density_region_of(fixtures::spec("square_descriptive.dsl")));
}

TEST_CASE("config JSON round trips") {
    auto run = square_run(7);
    Perturbation p;
    p.kind = PerturbKind::displacements;
    p.indices = std::vector<std::size_t>{1};
    p.displacements = {{0.5, 0.25}};
    run.loop.perturbations.push_back({3, p});
    run.loop.density_region = terms::Region::polygon({{0, 0}, {4, 0}, {0, 3}}, 0.5);
    run.loop.planner.gradient = inverse::GradientMode::finite_difference;
    run.loop.planner.amplitude = inverse::AmplitudeMode::free;
    run.loop.target = 0.02;
    run.flow.locality_radius = 4;
    run.flow.lut.spacing = 0.5;
    const auto j = to_json(run);
    const auto back = run_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.initial == run.initial);
    CHECK(back.loop.planner.sqp.max_iters == 20);

    CHECK_THROWS(loop_config_from_json({{"cycles", 0}}));
    CHECK_THROWS(loop_config_from_json({{"planner", {{"kind", "vortex"}}}}));
    CHECK_THROWS(loop_config_from_json({{"planner", {{"gradient", "magic"}}}}));
    const auto defaults = loop_config_from_json(nlohmann::json::object());
    CHECK(defaults.planner.sqp.max_iters == LoopConfig::default_planner().sqp.max_iters);
    CHECK(defaults.accept_threshold == 1e-3);
}

TEST_CASE("compile_spec reports the first diagnostic") {
    CHECK_THROWS_WITH_AS(compile_spec("(objective :n 4 (term shape.squar))", 4), doctest::Contains("spec error"),
                         std::invalid_argument);
    CHECK(compile_spec(fixtures::read_spec("square_descriptive.dsl"), 4).n() == 4);
}

TEST_CASE("streamed archive reads back and replays identically") {
    TempDir tmp;
    const auto path = tmp.path / "run.ndjson.gz";
    auto cfg = square_run(8);
    Perturbation kick;
    kick.seed = 8;
    kick.magnitude = 1.5;
    cfg.loop.perturbations.push_back({2, kick});

    RunRecord rec;
    {
        ArchiveWriter w(path, cfg);
        int live_at = 4;
        LoopHooks hooks;
        hooks.on_frame = [&](const Frame& f) { w.write(f); };
        hooks.pending = [&]() {
            std::vector<Perturbation> out;
            if (live_at-- == 0) {
                Perturbation p;
                p.kind = PerturbKind::triangle;
                out.push_back(p);
            }
            return out;
        };
        rec = execute(cfg, hooks);
        w.finish(rec.stop_reason);
        CHECK_THROWS_AS(w.write(rec.frames.back()), std::logic_error);
    }
    const auto arch = read_archive(path);
    CHECK_FALSE(arch.truncated);
    CHECK(arch.stop_reason == rec.stop_reason);
    CHECK(arch.manifest.at("seed") == cfg.loop.seed);
    REQUIRE(arch.frames.size() == rec.frames.size());
    for (std::size_t k = 0; k < rec.frames.size(); ++k) CHECK(to_json(arch.frames[k]) == to_json(rec.frames[k]));
    int live = 0;
    for (const auto& e : rec.events())
        if (e.kind == "perturbation" && e.detail.at("source") == "live") ++live;
    CHECK(live == 1);

    const auto report = replay(arch);
    CHECK(report.identical);
    CHECK(report.frames_compared == rec.frames.size());
    CHECK(report.first_mismatch == -1);

    auto tampered = arch;
    auto j = nlohmann::json::parse(tampered.lines[3]);
    j["positions"][0][0] = j["positions"][0][0].get<double>() + 1e-9;
    tampered.lines[3] = j.dump();
    const auto bad = replay(tampered);
    CHECK_FALSE(bad.identical);
    CHECK(bad.first_mismatch == 3);
}

TEST_CASE("archives survive an interrupted writer") {
    TempDir tmp;
    const auto cfg = square_run(5);
    const auto rec = execute(cfg);
    const auto path = tmp.path / "cut.ndjson.gz";
    {
        ArchiveWriter w(path, cfg);
        for (const auto& f : rec.frames) w.write(f);
    }  // no end record
    auto a = read_archive(path);
    CHECK(a.truncated);
    CHECK(a.frames.size() == rec.frames.size());
    CHECK(replay(a).identical);

    // chop bytes off the compressed stream: every fully flushed record before the cut stays readable
    const auto size = fs::file_size(path);
    std::size_t last = a.frames.size();
    for (std::uintmax_t cut : {size - 3, size * 2 / 3, size / 2}) {
        const auto p2 = tmp.path / ("cut" + std::to_string(cut) + ".gz");
        fs::copy_file(path, p2);
        fs::resize_file(p2, cut);
        const auto b = read_archive(p2);
        CHECK(b.truncated);
        CHECK(b.frames.size() <= last);
        last = b.frames.size();
        for (std::size_t k = 0; k < b.frames.size(); ++k) CHECK(b.lines[k] == a.lines[k]);
    }

    const auto junk = tmp.path / "junk.gz";
    std::ofstream(junk) << "{\"type\":\"frame\"}\n";
    CHECK_THROWS_AS(read_archive(junk), std::runtime_error);
    CHECK_THROWS_AS(read_archive(tmp.path / "missing.gz"), std::runtime_error);
}

TEST_CASE("potential mode descends per cycle and marks the converged frame") {
    RunConfig r;
    r.spec_text = fixtures::read_spec("circle.dsl");
    r.initial = potential::random_config(20, Rect::centered(50, 50), 7);
    r.loop.mode = RunMode::potential;
    r.loop.cycles = 40;
    r.loop.seed = 7;
    const RunRecord rec = execute(r);
    REQUIRE(rec.frames.size() >= 2);
    CHECK(rec.stop_reason == "converged");
    CHECK(rec.frames.back().converged);
    CHECK(rec.total_advections == 0);
    for (std::size_t i = 0; i + 1 < rec.frames.size(); ++i) {
        CHECK_FALSE(rec.frames[i].converged);
        CHECK(rec.frames[i + 1].objective <= rec.frames[i].objective);
        CHECK(rec.frames[i + 1].plan.size() == 0);
    }
}

TEST_CASE("potential mode keeps going until scheduled perturbations have happened") {
    RunConfig r;
    r.spec_text = fixtures::read_spec("square_descriptive.dsl");
    r.initial = start4(3);
    r.loop.mode = RunMode::potential;
    r.loop.cycles = 30;
    Perturbation tri;
    tri.kind = PerturbKind::triangle;
    r.loop.perturbations.push_back({8, tri});
    const RunRecord rec = execute(r);
    REQUIRE(rec.frames.size() > 8);
    CHECK(has_event(rec.frames[8], "perturbation"));
    CHECK(rec.frames.back().converged);
    CHECK(rec.frames.back().objective <= r.loop.target + 1e-3);

    TempDir tmp;
    const auto path = tmp.path / "potential.run";
    save_archive(path, r, rec);
    const Archive a = read_archive(path);
    CHECK(config_of(a).loop.mode == RunMode::potential);
    const auto rep = replay(a);
    CHECK(rep.identical);
    CHECK(rep.frames_compared == rec.frames.size());
}

TEST_CASE("run mode names") {
    CHECK(parse_run_mode("potential") == RunMode::potential);
    CHECK(to_string(parse_run_mode("inverse")) == "inverse");
    CHECK_THROWS_AS(parse_run_mode("direct"), std::invalid_argument);
    LoopConfig c;
    c.descent_iters = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
