#pragma once
// Shared fixtures for the unit tests.
#include <filesystem>
#include <string>

#include "nsl/config.hpp"

namespace fixture {

// V = p, Theta = 0
inline const char* sys_id2 = R"J({"n": 2, "kind": "explicit", "V": ["p1", "p2"], "Theta": ["0", "0"]})J";
inline const char* sys_id3 = R"J({"n": 3, "kind": "explicit", "V": ["p1", "p2", "p3"], "Theta": ["0", "0", "0"]})J";
// H = |p|^2 / 2 through the modified-Hamiltonian builder
inline const char* sys_geo2 = R"J({"n": 2, "kind": "modified_hamiltonian", "H": "(p1^2 + p2^2)/2"})J";
inline const char* sys_geo3 = R"J({"n": 3, "kind": "modified_hamiltonian", "H": "(p1^2 + p2^2 + p3^2)/2"})J";
// V = p, Theta = (p2^2, 0[, 0])
inline const char* sys_bad2 = R"J({"n": 2, "kind": "explicit", "V": ["p1", "p2"], "Theta": ["p2^2", "0"]})J";
inline const char* sys_bad3 =
    R"J({"n": 3, "kind": "explicit", "V": ["p1", "p2", "p3"], "Theta": ["p2^2", "0", "0"]})J";
// compliant but with x dependence and a nontrivial nu
inline const char* sys_aniso3 =
    R"J({"n": 3, "kind": "modified_hamiltonian", "H": "(p1^2 + 2*p2^2 + p3^2)/2 + x1"})J";

inline const char* surf_circle = R"J({"params": 1, "embedding": ["cos(y1)", "sin(y1)"], "domain": [[0, 6]], "grid": [7]})J";
inline const char* surf_line = R"J({"params": 1, "embedding": ["y1", "0"], "domain": [[-1, 1]], "grid": [5]})J";
inline const char* surf_sphere =
    R"J({"params": 2, "embedding": ["sin(y1)*cos(y2)", "sin(y1)*sin(y2)", "cos(y1)"], "domain": [[0.1, 1.4], [0, 1.5]], "grid": [3, 3]})J";

inline nsl::LoadedSystem load(const char* json) { return nsl::load_system_json(json); }
inline nsl::Hypersurface surface(const char* json, int n) { return nsl::load_surface_json(json, n); }

inline nsl::PhasePoint point(std::vector<double> x, std::vector<double> p) { return {std::move(x), std::move(p)}; }

// fresh scratch directory under the system temp dir
inline std::filesystem::path scratch(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("nsl_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace fixture
