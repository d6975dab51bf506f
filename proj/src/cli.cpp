#include "nsl/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "nsl/config.hpp"
#include "nsl/error.hpp"
#include "nsl/oracles.hpp"
#include "nsl/util.hpp"

namespace nsl {

namespace {

struct Options {
    std::string system, surface, out_dir = ".", run_csv, nu_source = "constant", grid;
    std::optional<int> points;
    std::uint64_t seed = 42;
    std::optional<double> tol;
    double step = 1e-3, t_end = 1.0, nu0 = 1.0;
    double p_min = 0.1, p_max = 10.0, x_box = 1.0;
    double alpha_tol = 1e-8;
    int gauges = 50;
    bool trajectories = false;
};

struct Outcome {
    bool pass = false;
    double max_residual = 0.0;
    int exit = 1;
};

Outcome verdict(bool pass, double r) { return {pass, r, pass ? 0 : 1}; }

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

void write_file(const Options& o, const std::string& name, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    auto path = std::filesystem::path(o.out_dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) bad("cannot write '" + path.string() + "'");
    f << text;
}

SamplerSpec sampler(const Options& o, int fallback) {
    SamplerSpec s;
    s.count = o.points.value_or(fallback);
    if (s.count < 1) bad("--points must be positive");
    s.seed = o.seed;
    s.p_min = o.p_min;
    s.p_max = o.p_max;
    s.x_box = o.x_box;
    if (!(s.p_min > 0 && s.p_max >= s.p_min)) bad("need 0 < --p-min <= --p-max");
    return s;
}

double tolerance(const Options& o, double fallback) {
    double t = o.tol.value_or(fallback);
    if (!(t > 0)) bad("--tol must be positive");
    return t;
}

Hypersurface surface_for(const Options& o, int n) {
    if (o.surface.empty()) bad("--surface is required");
    auto s = load_surface_file(o.surface, n);
    if (!o.grid.empty()) {
        std::vector<int> g;
        std::stringstream ss(o.grid);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                int v = std::stoi(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
                g.push_back(v);
            } catch (const std::exception&) {
                bad("--grid expects comma-separated integers, got '" + o.grid + "'");
            }
        }
        if (static_cast<int>(g.size()) != s.params())
            bad("--grid needs " + std::to_string(s.params()) + " counts");
        s.grid = g;
    }
    for (int c : s.grid)
        if (c < 2) bad("grid counts must be at least 2");
    return s;
}

void print_system(std::ostream& out, const LoadedSystem& L) {
    out << "system " << L.sys.label() << " n=" << L.sys.n() << " connection=" << L.conn.source() << '\n';
}

Outcome check_normality(const Options& o, std::ostream& out) {
    auto L = load_system_file(o.system);
    int n = L.sys.n();
    double tol = tolerance(o, 1e-8);
    auto pts = sample_points(n, sampler(o, 100));
    auto rep = normality_report(L.sys, L.conn, pts, Tolerances{tol, tol}, worker_count());
    write_file(o, "residuals.csv", residual_csv(rep, n));
    print_system(out, L);
    out << "points " << pts.size() << " seed " << o.seed << " tol " << fmt17(tol) << '\n';
    if (n < 3) out << "additional equations not applicable for n = 2\n";
    out << "max_residual " << fmt17(rep.max_residual) << " median " << fmt17(rep.median_residual)
        << " max_normalized " << fmt17(rep.max_normalized) << '\n';
    out << "violations " << rep.violations << " errors " << rep.errors << '\n';
    int listed = 0;
    for (std::size_t i = 0; i < rep.rows.size() && listed < 10; ++i) {
        const auto& r = rep.rows[i];
        if (r.pass) continue;
        ++listed;
        if (!r.error.empty())
            out << "  row " << i << " ERROR " << r.error << '\n';
        else
            out << "  row " << i << " max_abs " << fmt17(r.max_abs()) << '\n';
    }
    Outcome res = verdict(rep.pass, rep.max_residual);
    if (rep.errors > 0) res.exit = 3;
    return res;
}

Outcome solve_nu_cmd(const Options& o, std::ostream& out) {
    auto L = load_system_file(o.system);
    auto surf = surface_for(o, L.sys.n());
    double tol = tolerance(o, 1e-8);
    auto g = solve_nu(L.sys, L.conn, surf, o.nu0);
    int m = surf.params();
    std::vector<double> compat(g.nodes.size(), 0.0);
    parallel_for(static_cast<int>(g.nodes.size()), worker_count(), [&](int k) {
        compat[k] = max_abs(compatibility_residual(L.sys, L.conn, surf, g.nodes[k], g.nu[k]));
    });
    std::ostringstream csv;
    for (int i = 1; i <= m; ++i) csv << 'y' << i << ',';
    csv << "nu,compat_max\n";
    double cmax = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
        for (int i = 0; i < m; ++i) csv << fmt17(g.nodes[k][i]) << ',';
        csv << fmt17(g.nu[k]) << ',' << fmt17(compat[k]) << '\n';
        cmax = std::max(cmax, compat[k]);
    }
    write_file(o, "nu_grid.csv", csv.str());
    print_system(out, L);
    out << "grid";
    for (int c : g.counts) out << ' ' << c;
    out << " nu0 " << fmt17(o.nu0) << '\n';
    out << "path_residual " << fmt17(g.path_residual) << " compat_max " << fmt17(cmax) << '\n';
    return verdict(g.path_residual <= tol, g.path_residual);
}

std::string orthogonality_csv(const std::vector<double>& t, const std::vector<double>& phi) {
    std::ostringstream os;
    os << "t,max_phi\n";
    for (std::size_t k = 0; k < t.size(); ++k) os << fmt17(t[k]) << ',' << fmt17(phi[k]) << '\n';
    return os.str();
}

void print_orthogonality(std::ostream& out, double max_phi, bool normal, double first, double tol) {
    out << "max_phi " << fmt17(max_phi) << " tol " << fmt17(tol) << '\n';
    if (normal)
        out << "verdict NORMAL\n";
    else
        out << "verdict NOT_NORMAL first_violation t=" << fmt17(first) << '\n';
}

Outcome simulate_shift_cmd(const Options& o, std::ostream& out) {
    auto L = load_system_file(o.system);
    auto surf = surface_for(o, L.sys.n());
    double tol = tolerance(o, 1e-6);
    if (!(o.step > 0 && o.t_end > 0)) bad("--step and --t-end must be positive");
    NuSource src = NuSource::fixed(o.nu0);
    if (o.nu_source == "solved")
        src = NuSource::solved(solve_nu(L.sys, L.conn, surf, o.nu0));
    else if (o.nu_source != "constant")
        bad("--nu-source must be constant or solved");
    auto run = simulate_shift(L.sys, L.conn, surf, src, IntegratorConfig{o.step, o.t_end}, worker_count());
    auto rep = verify_orthogonality(run, tol);
    write_file(o, "shift.csv", shift_csv(run));
    write_file(o, "orthogonality.csv", orthogonality_csv(rep.times, rep.max_phi));
    if (o.trajectories)
        for (std::size_t k = 0; k < run.trajectories.size(); ++k)
            write_file(o, "trajectory_" + std::to_string(k) + ".csv", trajectory_csv(run.trajectories[k]));
    print_system(out, L);
    out << "trajectories " << run.trajectories.size() << " step " << fmt17(o.step) << " t_end " << fmt17(o.t_end)
        << " nu " << o.nu_source << '\n';
    print_orthogonality(out, rep.max_phi_overall, rep.normal, rep.first_violation, tol);
    return verdict(rep.normal, rep.max_phi_overall);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    return f;
}

Outcome verify_orthogonality_cmd(const Options& o, std::ostream& out) {
    if (o.run_csv.empty()) bad("--run is required");
    double tol = tolerance(o, 1e-6);
    std::ifstream in(o.run_csv);
    if (!in) bad("cannot open '" + o.run_csv + "'");
    std::string line;
    if (!std::getline(in, line)) bad("'" + o.run_csv + "' is empty");
    auto head = split_csv(line);
    int tcol = -1;
    std::vector<int> phis;
    for (std::size_t i = 0; i < head.size(); ++i) {
        if (head[i] == "t") tcol = static_cast<int>(i);
        if (head[i].rfind("phi_", 0) == 0) phis.push_back(static_cast<int>(i));
    }
    if (tcol < 0 || phis.empty()) bad("run CSV needs a t column and phi_ columns");
    std::map<double, double> per_t;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split_csv(line);
        if (f.size() != head.size()) bad("row " + std::to_string(lineno) + " has the wrong number of fields");
        auto num = [&](int c) {
            char* end = nullptr;
            double v = std::strtod(f[c].c_str(), &end);
            if (end == f[c].c_str() || *end != '\0') bad("row " + std::to_string(lineno) + ": bad number");
            return v;
        };
        double t = num(tcol), m = 0.0;
        for (int c : phis) {
            double v = std::abs(num(c));
            m = std::isnan(v) ? std::numeric_limits<double>::infinity() : std::max(m, v);
        }
        auto [it, fresh] = per_t.try_emplace(t, m);
        if (!fresh) it->second = std::max(it->second, m);
    }
    std::vector<double> ts, ms;
    double worst = 0.0, first = -1.0;
    for (auto [t, m] : per_t) {
        ts.push_back(t);
        ms.push_back(m);
        worst = std::max(worst, m);
        if (m > tol && first < 0) first = t;
    }
    write_file(o, "orthogonality.csv", orthogonality_csv(ts, ms));
    out << "times " << ts.size() << '\n';
    print_orthogonality(out, worst, first < 0, first, tol);
    return verdict(first < 0, worst);
}

double residual_change(const NormalityResidual& a, const NormalityResidual& b) {
    double d = std::max(max_abs(Vec(a.weak1 - b.weak1)), max_abs(Vec(a.weak2 - b.weak2)));
    if (a.addA.size()) {
        d = std::max(d, max_abs(Mat(a.addA - b.addA)));
        d = std::max(d, max_abs(Mat(a.addB - b.addB)));
        d = std::max(d, max_abs(Mat(a.addC - b.addC)));
    }
    return d;
}

Outcome gauge_test(const Options& o, std::ostream& out) {
    auto L = load_system_file(o.system);
    int n = L.sys.n();
    double tol = tolerance(o, 1e-7);
    if (o.gauges < 1) bad("--gauges must be positive");
    auto pts = sample_points(n, sampler(o, 20));
    int np = static_cast<int>(pts.size());
    std::vector<Vec> alpha(np);
    std::vector<NormalityResidual> base(np);
    double base_max = 0.0;
    parallel_for(np, worker_count(), [&](int i) {
        alpha[i] = weak_fields(L.sys, L.conn, pts[i]).alpha;
        base[i] = normality_at(L.sys, L.conn, pts[i]);
    });
    for (const auto& r : base) base_max = std::max(base_max, r.max_abs());
    std::ostringstream csv;
    csv << "gauge,seed,alpha_change,residual_change,verdict\n";
    double worst_a = 0.0, worst_r = 0.0;
    bool pass = true;
    for (int k = 0; k < o.gauges; ++k) {
        std::uint64_t seed = o.seed + 1 + static_cast<std::uint64_t>(k);
        auto conn = add_gauge(L.conn, GaugeTensor::random(n, seed));
        std::vector<double> da(np), dr(np);
        parallel_for(np, worker_count(), [&](int i) {
            da[i] = max_abs(Vec(weak_fields(L.sys, conn, pts[i]).alpha - alpha[i]));
            dr[i] = residual_change(normality_at(L.sys, conn, pts[i]), base[i]);
        });
        double a = *std::max_element(da.begin(), da.end());
        double r = *std::max_element(dr.begin(), dr.end());
        bool ok = a <= o.alpha_tol && r <= tol;
        pass = pass && ok;
        worst_a = std::max(worst_a, a);
        worst_r = std::max(worst_r, r);
        csv << k << ',' << seed << ',' << fmt17(a) << ',' << fmt17(r) << ',' << (ok ? "PASS" : "FAIL") << '\n';
    }
    write_file(o, "gauge.csv", csv.str());
    print_system(out, L);
    out << "gauges " << o.gauges << " points " << np << " seed " << o.seed << '\n';
    out << "base_residual " << fmt17(base_max) << '\n';
    out << "alpha_change " << fmt17(worst_a) << " tol " << fmt17(o.alpha_tol) << '\n';
    out << "residual_change " << fmt17(worst_r) << " tol " << fmt17(tol) << '\n';
    return verdict(pass, std::max(worst_a, worst_r));
}

bool vanishes(const Expression& h) {
    for (double w : {-2.1, 0.37, 1.3}) {
        double v = h.eval(std::span<const double>(&w, 1));
        if (v != 0.0) return false;
    }
    return true;
}

Outcome cross_check(const Options& o, std::ostream& out) {
    auto L = load_system_file(o.system);
    int n = L.sys.n();
    double tol = tolerance(o, 1e-8);
    auto pts = sample_points(n, sampler(o, 20));
    int np = static_cast<int>(pts.size());
    std::vector<double> gam(np), probe(np);
    parallel_for(np, worker_count(), [&](int i) {
        auto a = canonical_connection(L.sys, pts[i]);
        auto b = connection_oracle(L.sys, pts[i]);
        double w = 0.0;
        for (std::size_t k = 0; k < a.a.size(); ++k) w = std::max(w, std::abs(a.a[k] - b.a[k]));
        gam[i] = w;
        probe[i] = system_probe_gap(L.sys, pts[i]);
    });
    struct Row {
        std::string name;
        double value, tol;
        bool skipped;
    };
    std::vector<Row> rows;
    rows.push_back({"connection_oracle", *std::max_element(gam.begin(), gam.end()), tol, false});
    rows.push_back({"jet_probe", *std::max_element(probe.begin(), probe.end()), 1e-6, false});
    std::string note;
    if (L.sys.kind() == SystemKind::RiemannianEuclidean && L.h && vanishes(*L.h)) {
        const int runs = 10;
        IntegratorConfig cfg{o.step, o.t_end};
        Rng rng(o.seed);
        std::vector<double> gap;
        int redrawn = 0;
        // initial data whose path crosses dW/dv = 0 is outside the correspondence and is redrawn
        while (static_cast<int>(gap.size()) < runs && redrawn < 10 * runs) {
            std::vector<double> x0;
            for (int i = 0; i < n; ++i) x0.push_back(rng.uniform(-o.x_box, o.x_box));
            double speed = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
            Vec d(n);
            for (int i = 0; i < n; ++i) d[i] = rng.normal();
            d *= speed / d.norm();
            try {
                gap.push_back(riemannian_hamiltonian_gap(*L.W, n, x0, std::vector<double>(d.data(), d.data() + n), cfg));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::ZeroWv) throw;
                ++redrawn;
            }
        }
        if (static_cast<int>(gap.size()) < runs) throw Error(ErrorKind::ZeroWv, "no initial data keeps dW/dv away from zero");
        note = "riemannian runs " + std::to_string(gap.size()) + " redrawn " + std::to_string(redrawn) + '\n';
        rows.push_back({"riemannian_hamiltonian", *std::max_element(gap.begin(), gap.end()), 1e-6, false});
    } else {
        rows.push_back({"riemannian_hamiltonian", 0.0, 1e-6, true});
    }
    std::ostringstream csv;
    csv << "check,value,tol,verdict\n";
    print_system(out, L);
    out << "points " << np << " seed " << o.seed << '\n' << note;
    bool pass = true;
    double worst = 0.0;
    for (const auto& r : rows) {
        bool ok = r.skipped || r.value <= r.tol;
        const char* v = r.skipped ? "SKIP" : ok ? "PASS" : "FAIL";
        pass = pass && ok;
        if (!r.skipped) worst = std::max(worst, r.value);
        csv << r.name << ',' << (r.skipped ? std::string("NA") : fmt17(r.value)) << ',' << fmt17(r.tol) << ',' << v
            << '\n';
        out << r.name << ' ' << (r.skipped ? std::string("NA") : fmt17(r.value)) << " tol " << fmt17(r.tol) << ' '
            << v << '\n';
    }
    write_file(o, "cross_check.csv", csv.str());
    return verdict(pass, worst);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Checks and simulations for Newtonian dynamical systems admitting normal shift"};
    app.name("nsl");
    app.require_subcommand(1);
    Options o;

    auto system = [&](CLI::App* s) { s->add_option("--system", o.system, "system JSON")->required(); };
    auto common = [&](CLI::App* s) {
        s->add_option("--out-dir", o.out_dir, "directory for CSV output");
        s->add_option("--tol", o.tol, "tolerance");
        s->add_option("--seed", o.seed, "sampler seed");
    };
    auto sampling = [&](CLI::App* s) {
        s->add_option("--points", o.points, "number of sample points");
        s->add_option("--p-min", o.p_min, "smallest |p|");
        s->add_option("--p-max", o.p_max, "largest |p|");
        s->add_option("--x-box", o.x_box, "x sampled in [-b, b]^n");
    };
    auto surface = [&](CLI::App* s) {
        s->add_option("--surface", o.surface, "surface JSON")->required();
        s->add_option("--nu0", o.nu0, "initial nu");
        s->add_option("--grid", o.grid, "grid counts, e.g. 5,5");
    };
    auto integrator = [&](CLI::App* s) {
        s->add_option("--step", o.step, "RK4 step");
        s->add_option("--t-end", o.t_end, "final time");
    };

    auto* cn = app.add_subcommand("check-normality", "weak and additional normality residuals at sample points");
    system(cn), common(cn), sampling(cn);
    auto* sn = app.add_subcommand("solve-nu", "solve the Pfaff system for nu on a surface grid");
    system(sn), common(sn), surface(sn);
    auto* ss = app.add_subcommand("simulate-shift", "shift a surface and check orthogonality");
    system(ss), common(ss), surface(ss), integrator(ss);
    ss->add_option("--nu-source", o.nu_source, "constant or solved");
    ss->add_flag("--trajectories", o.trajectories, "also write one CSV per trajectory");
    auto* vo = app.add_subcommand("verify-orthogonality", "check the deviation columns of a shift CSV");
    common(vo);
    vo->add_option("--run", o.run_csv, "shift CSV")->required();
    auto* gt = app.add_subcommand("gauge-test", "residual invariance under random gauge tensors");
    system(gt), common(gt), sampling(gt);
    gt->add_option("--gauges", o.gauges, "number of random gauges");
    gt->add_option("--alpha-tol", o.alpha_tol, "tolerance on the change of alpha");
    auto* cc = app.add_subcommand("cross-check", "connection oracle, jet probes, Riemannian/Hamiltonian trajectories");
    system(cc), common(cc), sampling(cc), integrator(cc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    Outcome r;
    try {
        if (cmd == "check-normality")
            r = check_normality(o, out);
        else if (cmd == "solve-nu")
            r = solve_nu_cmd(o, out);
        else if (cmd == "simulate-shift")
            r = simulate_shift_cmd(o, out);
        else if (cmd == "verify-orthogonality")
            r = verify_orthogonality_cmd(o, out);
        else if (cmd == "gauge-test")
            r = gauge_test(o, out);
        else
            r = cross_check(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        r = {false, std::numeric_limits<double>::quiet_NaN(), e.is_config() ? 2 : 3};
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        r = {false, std::numeric_limits<double>::quiet_NaN(), 3};
    }
    out << "RESULT " << cmd << ' ' << (r.pass ? "PASS" : "FAIL") << " max_residual=" << fmt17(r.max_residual)
        << '\n';
    return r.exit;
}

}  // namespace nsl
