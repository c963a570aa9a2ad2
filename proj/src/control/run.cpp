#include "flowscribe/control/run.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>

#include <zlib.h>

#include "flowscribe/dsl/parser.hpp"

namespace flowscribe::control {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "flowscribe-run";
constexpr int kVersion = 1;

json lut_params_json(const flow::LutParams& p) {
    return {{"scan_length", p.scan_length}, {"epsilon", p.epsilon},   {"half_extent", p.half_extent},
            {"spacing", p.spacing},         {"generator", p.generator}, {"sign", p.sign}};
}

flow::LutParams lut_params_from(const json& j) {
    flow::LutParams p;
    p.scan_length = j.value("scan_length", p.scan_length);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.half_extent = j.value("half_extent", p.half_extent);
    p.spacing = j.value("spacing", p.spacing);
    p.generator = j.value("generator", p.generator);
    p.sign = j.value("sign", p.sign);
    return p;
}

gzFile as_gz(void* p) { return static_cast<gzFile>(p); }

}  // namespace

json to_json(const FlowSetup& f) {
    json j = {{"lut", lut_params_json(f.lut)}, {"locality_radius", f.locality_radius}};
    j["lut_path"] = f.lut_path ? json(*f.lut_path) : json(nullptr);
    return j;
}

FlowSetup flow_setup_from_json(const json& j) {
    FlowSetup f;
    if (j.contains("lut")) f.lut = lut_params_from(j.at("lut"));
    f.locality_radius = j.value("locality_radius", f.locality_radius);
    if (j.contains("lut_path") && !j.at("lut_path").is_null()) f.lut_path = j.at("lut_path").get<std::string>();
    return f;
}

json to_json(const RunConfig& c) {
    json pos = json::array();
    for (const auto& p : c.initial.positions) pos.push_back({p.x, p.y});
    const Rect& v = c.initial.fov;
    return {{"spec_text", c.spec_text},
            {"initial", {{"positions", pos}, {"fov", {v.x0, v.y0, v.x1, v.y1}}}},
            {"loop", to_json(c.loop)},
            {"flow", to_json(c.flow)}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.spec_text = j.at("spec_text").get<std::string>();
    const auto& init = j.at("initial");
    for (const auto& p : init.at("positions")) c.initial.positions.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (init.contains("fov")) {
        const auto& v = init.at("fov");
        c.initial.fov = {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>(), v.at(3).get<double>()};
    }
    if (j.contains("loop")) c.loop = loop_config_from_json(j.at("loop"));
    if (j.contains("flow")) c.flow = flow_setup_from_json(j.at("flow"));
    return c;
}

std::shared_ptr<const flow::FlowModel> build_model(const FlowSetup& f) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const flow::FlowLUT>> cache;
    const std::string key = f.lut_path ? "file:" + *f.lut_path : lut_params_json(f.lut).dump();
    std::shared_ptr<const flow::FlowLUT> lut;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) lut = it->second;
    }
    if (!lut) {
        auto fresh = std::make_shared<const flow::FlowLUT>(f.lut_path ? flow::load_lut(*f.lut_path)
                                                                       : flow::generate_synthetic_lut(f.lut));
        std::lock_guard<std::mutex> lock(mu);
        lut = cache.emplace(key, std::move(fresh)).first->second;
    }
    return std::make_shared<const flow::FlowModel>(lut, f.locality_radius);
}

terms::CompiledObjective compile_spec(const std::string& spec_text, std::size_t n) {
    auto r = dsl::parse(spec_text);
    if (!r.ok()) {
        const auto& d = r.diagnostics.front();
        throw std::invalid_argument("spec error at " + std::to_string(d.span.begin) + ": " + d.message);
    }
    return terms::compile(*r.spec, n);
}

RunRecord execute(const RunConfig& cfg, const LoopHooks& hooks) {
    const auto obj = compile_spec(cfg.spec_text, cfg.initial.size());
    LoopConfig loop = cfg.loop;
    if (!loop.density_region) loop.density_region = density_region_of(*dsl::parse(cfg.spec_text).spec);
    if (loop.mode == RunMode::potential) return run_descent_loop(cfg.initial, obj, loop, hooks);
    const auto model = build_model(cfg.flow);
    return run_closed_loop(*model, cfg.initial, obj, loop, hooks);
}

ArchiveWriter::ArchiveWriter(const std::filesystem::path& path, const RunConfig& cfg) {
    gz_ = gzopen(path.string().c_str(), "wb");
    if (!gz_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    put({{"type", "manifest"},
         {"format", kFormat},
         {"version", kVersion},
         {"seed", cfg.loop.seed},
         {"config", to_json(cfg)}});
}

ArchiveWriter::~ArchiveWriter() {
    if (gz_) gzclose(as_gz(gz_));
}

void ArchiveWriter::put(const json& j) {
    const std::string line = j.dump() + "\n";
    if (gzwrite(as_gz(gz_), line.data(), static_cast<unsigned>(line.size())) != static_cast<int>(line.size()))
        throw std::runtime_error("archive write failed");
    gzflush(as_gz(gz_), Z_SYNC_FLUSH);
}

void ArchiveWriter::write(const Frame& f) {
    if (finished_) throw std::logic_error("archive already finished");
    json j = to_json(f);
    j["type"] = "frame";
    put(j);
    ++frames_;
}

void ArchiveWriter::finish(const std::string& stop_reason) {
    if (finished_) return;
    put({{"type", "end"}, {"truncated", false}, {"frames", frames_}, {"stop_reason", stop_reason}});
    gzclose(as_gz(gz_));
    gz_ = nullptr;
    finished_ = true;
}

Archive read_archive(const std::filesystem::path& path) {
    gzFile gz = gzopen(path.string().c_str(), "rb");
    if (!gz) throw std::runtime_error("cannot open " + path.string());
    std::string data;
    char buf[1 << 15];
    for (;;) {
        const int got = gzread(gz, buf, sizeof buf);
        if (got <= 0) break;  // end of stream, or a cut-off tail after the last flushed record
        data.append(buf, static_cast<std::size_t>(got));
    }
    gzclose(gz);

    Archive a;
    std::size_t pos = 0;
    bool first = true;
    while (pos < data.size()) {
        const std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) break;  // incomplete last record
        const std::string line = data.substr(pos, eol - pos);
        pos = eol + 1;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) break;
        const std::string type = j.value("type", "");
        if (first) {
            if (type != "manifest" || j.value("format", "") != kFormat)
                throw std::runtime_error(path.string() + " is not a run archive");
            if (j.value("version", 0) != kVersion) throw std::runtime_error("unsupported run archive version");
            a.manifest = std::move(j);
            first = false;
        } else if (type == "frame") {
            j.erase("type");
            a.lines.push_back(j.dump());
            a.frames.push_back(frame_from_json(j));
        } else if (type == "end") {
            a.truncated = j.value("truncated", true);
            a.stop_reason = j.value("stop_reason", "");
            break;
        }
    }
    if (first) throw std::runtime_error(path.string() + " is not a run archive");
    return a;
}

RunConfig config_of(const Archive& a) { return run_config_from_json(a.manifest.at("config")); }

void save_archive(const std::filesystem::path& path, const RunConfig& cfg, const RunRecord& rec) {
    ArchiveWriter w(path, cfg);
    for (const auto& f : rec.frames) w.write(f);
    w.finish(rec.stop_reason);
}

ReplayReport replay(const Archive& a) {
    RunConfig cfg = config_of(a);
    for (const auto& f : a.frames)
        for (const auto& e : f.events)
            if (e.kind == "perturbation" && e.detail.value("source", "") == "live")
                cfg.loop.perturbations.push_back({e.cycle, perturbation_from_json(e.detail.at("perturbation"))});
    // keep scheduled perturbations ahead of live ones within a cycle, as the loop applies them
    std::stable_sort(cfg.loop.perturbations.begin(), cfg.loop.perturbations.end(),
                     [](const ScheduledPerturbation& x, const ScheduledPerturbation& y) { return x.cycle < y.cycle; });
    if (!a.frames.empty()) cfg.loop.cycles = std::min(cfg.loop.cycles, std::max(1, a.frames.back().cycle));

    const RunRecord rec = execute(cfg);
    ReplayReport r;
    r.frames_compared = std::min(rec.frames.size(), a.lines.size());
    for (std::size_t i = 0; i < r.frames_compared; ++i) {
        json j = to_json(rec.frames[i]);
        // live perturbations came back as scheduled ones; compare them under their original source
        for (std::size_t k = 0; k < rec.frames[i].events.size() && k < a.frames[i].events.size(); ++k)
            if (a.frames[i].events[k].kind == "perturbation")
                j["events"][k]["detail"]["source"] = a.frames[i].events[k].detail.value("source", "");
        if (j.dump() != a.lines[i]) {
            r.first_mismatch = static_cast<long>(i);
            return r;
        }
    }
    r.identical = rec.frames.size() >= a.lines.size() && !a.lines.empty();
    if (!r.identical && r.first_mismatch < 0) r.first_mismatch = static_cast<long>(r.frames_compared);
    return r;
}

}  // namespace flowscribe::control
