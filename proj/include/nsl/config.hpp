#pragma once
// JSON configs for systems and surfaces.
#include <optional>
#include <string>

#include "nsl/hypersurface.hpp"

namespace nsl {

struct LoadedSystem {
    SystemDefinition sys;
    ConnectionField conn;  // explicit Gamma block if given, else canonical
    std::optional<Expression> W, h;  // riemannian_euclidean only
};

LoadedSystem load_system_json(const std::string& text);
LoadedSystem load_system_file(const std::string& path);
Hypersurface load_surface_json(const std::string& text, int n);
Hypersurface load_surface_file(const std::string& path, int n);

}  // namespace nsl
