#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowscribe/control/loop.hpp"
#include "flowscribe/flow/lut.hpp"

namespace flowscribe::control {

struct FlowSetup {
    /// Load the LUT from this file instead of generating it.
    std::optional<std::string> lut_path;
    flow::LutParams lut;
    double locality_radius = 5.0;
};

/// Everything needed to reproduce a run.
struct RunConfig {
    std::string spec_text;
    ParticleConfig initial;
    LoopConfig loop;
    FlowSetup flow;
};

nlohmann::json to_json(const FlowSetup& f);
FlowSetup flow_setup_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Flow model for the setup; generated tables are cached per parameter set for the process lifetime.
std::shared_ptr<const flow::FlowModel> build_model(const FlowSetup& f);

/// Parses and compiles the spec for the initial particle count. Throws std::invalid_argument with the
/// first diagnostic on failure.
terms::CompiledObjective compile_spec(const std::string& spec_text, std::size_t n);

/// Runs the closed loop; fills the density region from the spec when the config has none.
RunRecord execute(const RunConfig& cfg, const LoopHooks& hooks = {});

/// Gzip-compressed newline-delimited run archive: a manifest line, one line per frame, and an end line
/// written on orderly shutdown. Every record is flushed so a crash loses at most the cycle in progress.
class ArchiveWriter {
public:
    ArchiveWriter(const std::filesystem::path& path, const RunConfig& cfg);
    ~ArchiveWriter();
    ArchiveWriter(const ArchiveWriter&) = delete;
    ArchiveWriter& operator=(const ArchiveWriter&) = delete;

    void write(const Frame& f);
    void finish(const std::string& stop_reason);

private:
    void put(const nlohmann::json& j);
    void* gz_ = nullptr;
    long frames_ = 0;
    bool finished_ = false;
};

struct Archive {
    nlohmann::json manifest;
    std::vector<std::string> lines;  // frame records exactly as stored
    std::vector<Frame> frames;
    bool truncated = true;           // no end record
    std::string stop_reason;
};

Archive read_archive(const std::filesystem::path& path);
RunConfig config_of(const Archive& a);

/// Writes a finished record in one go.
void save_archive(const std::filesystem::path& path, const RunConfig& cfg, const RunRecord& rec);

struct ReplayReport {
    bool identical = false;
    std::size_t frames_compared = 0;
    long first_mismatch = -1;  // frame index
};

/// Re-executes the archived configuration (including live perturbations recorded as events) and
/// compares every frame record byte for byte.
ReplayReport replay(const Archive& a);

}  // namespace flowscribe::control
