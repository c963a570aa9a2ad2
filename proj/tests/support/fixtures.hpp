#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "flowscribe/dsl/parser.hpp"
#include "flowscribe/terms/objective.hpp"

namespace fixtures {

inline std::string read_spec(const std::string& name) {
    std::ifstream in(std::string(FLOWSCRIBE_SPECS_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing spec " + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline flowscribe::dsl::ObjectiveSpec spec(const std::string& name) {
    auto r = flowscribe::dsl::parse(read_spec(name));
    if (!r.ok()) throw std::runtime_error(name + ": " + r.diagnostics.at(0).message);
    return *r.spec;
}

inline flowscribe::terms::CompiledObjective objective(const std::string& name) {
    return flowscribe::terms::compile(spec(name));
}

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("flowscribe-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

inline std::size_t count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += line.empty() ? 0 : 1;
    return n;
}

}  // namespace fixtures
