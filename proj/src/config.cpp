#include "nsl/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nsl/error.hpp"

namespace nsl {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("invalid JSON: ") + e.what());
    }
}

Expression field_expr(const json& j, const std::string& field, const Scope& scope) {
    if (!j.is_string()) bad("'" + field + "' must be an expression string");
    try {
        return parse_expression(j.get<std::string>(), scope);
    } catch (const ParseError& e) {
        throw Error(ErrorKind::Parse, "in '" + field + "': " + e.what());
    }
}

std::vector<Expression> expr_list(const json& j, const std::string& field, int n, const Scope& scope) {
    if (!j.contains(field)) bad("missing '" + field + "'");
    const json& a = j[field];
    if (!a.is_array() || static_cast<int>(a.size()) != n)
        bad("'" + field + "' must be an array of " + std::to_string(n) + " expressions");
    std::vector<Expression> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(field_expr(a[i], field + "[" + std::to_string(i + 1) + "]", scope));
    return out;
}

}  // namespace

LoadedSystem load_system_json(const std::string& text) {
    json j = parse_json(text);
    if (!j.is_object()) bad("system config must be a JSON object");
    if (!j.contains("n") || !j["n"].is_number_integer()) bad("missing integer 'n'");
    int n = j["n"].get<int>();
    if (n < 2 || n > 6) bad("'n' must be between 2 and 6");
    std::string kind = j.value("kind", "explicit");
    Scope phase = Scope::phase(n);
    std::optional<SystemDefinition> sys;
    std::optional<Expression> W, h;
    if (kind == "explicit") {
        sys = make_explicit(n, expr_list(j, "V", n, phase), expr_list(j, "Theta", n, phase));
    } else if (kind == "modified_hamiltonian") {
        if (!j.contains("H")) bad("missing 'H'");
        sys = build_modified_hamiltonian(field_expr(j["H"], "H", phase), n);
    } else if (kind == "riemannian_euclidean") {
        if (!j.contains("W")) bad("missing 'W'");
        W = field_expr(j["W"], "W", riemannian_w_scope(n));
        h = field_expr(j.contains("h") ? j["h"] : json("0"), "h", riemannian_h_scope());
        sys = build_riemannian_euclidean(*W, *h, n);
    } else {
        bad("unknown kind '" + kind + "'");
    }
    std::optional<ConnectionField> conn;
    if (j.contains("Gamma")) {
        const json& g = j["Gamma"];
        if (!g.is_object()) bad("'Gamma' must be an object of \"k,i,j\": expr");
        std::map<std::array<int, 3>, Expression> entries;
        for (auto it = g.begin(); it != g.end(); ++it) {
            int k = 0, a = 0, b = 0;
            char c1 = 0, c2 = 0;
            std::istringstream ks(it.key());
            if (!(ks >> k >> c1 >> a >> c2 >> b) || c1 != ',' || c2 != ',' || !ks.eof())
                bad("Gamma key '" + it.key() + "' is not of the form k,i,j");
            entries[{k - 1, a - 1, b - 1}] = field_expr(it.value(), "Gamma[" + it.key() + "]", phase);
        }
        conn = ConnectionField::from_expressions(n, entries);
    } else {
        conn = ConnectionField::canonical(*sys);
    }
    return LoadedSystem{*sys, *conn, W, h};
}

LoadedSystem load_system_file(const std::string& path) { return load_system_json(slurp(path)); }

Hypersurface load_surface_json(const std::string& text, int n) {
    json j = parse_json(text);
    if (!j.is_object()) bad("surface config must be a JSON object");
    int m = j.value("params", n - 1);
    if (m != n - 1) bad("surface needs n-1 = " + std::to_string(n - 1) + " parameters");
    if (!j.contains("embedding") || !j["embedding"].is_array()) bad("missing 'embedding'");
    std::vector<std::string> emb;
    for (const auto& e : j["embedding"]) {
        if (!e.is_string()) bad("embedding entries must be strings");
        emb.push_back(e.get<std::string>());
    }
    std::vector<std::pair<double, double>> dom;
    if (!j.contains("domain") || !j["domain"].is_array()) bad("missing 'domain'");
    for (const auto& d : j["domain"]) {
        if (!d.is_array() || d.size() != 2 || !d[0].is_number() || !d[1].is_number())
            bad("domain entries must be [lo, hi]");
        dom.push_back({d[0].get<double>(), d[1].get<double>()});
    }
    std::vector<int> grid;
    if (j.contains("grid")) {
        for (const auto& g : j["grid"]) {
            if (!g.is_number_integer()) bad("grid entries must be integers");
            grid.push_back(g.get<int>());
        }
    } else {
        grid.assign(m, 5);
    }
    try {
        return make_surface(n, emb, dom, grid);
    } catch (const ParseError& e) {
        throw Error(ErrorKind::Parse, std::string("in 'embedding': ") + e.what());
    }
}

Hypersurface load_surface_file(const std::string& path, int n) { return load_surface_json(slurp(path), n); }

}  // namespace nsl
