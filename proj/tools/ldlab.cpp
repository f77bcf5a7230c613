// ldlab command-line front end.
//
// Exit codes: 0 success, 1 contract violation or runtime failure, 2 usage or
// configuration error (nothing is written in that case).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ldlab/ldlab.hpp"
#include "ldlab/manifest.hpp"

namespace fs = std::filesystem;
using namespace ldlab;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string config;
    std::string out = ".";
    std::vector<std::string> sets;
    std::string n, alpha, h, seed, samples, mass, budget;
    std::string self_table;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "INI config file ([kernel] [grid] [anneal] [sweep] [competitor] [star])");
    sub->add_option("--out", f.out, "output directory")->capture_default_str();
    sub->add_option("--set", f.sets, "override a config key: section.key=value (repeatable)");
    sub->add_option("--n", f.n, "kernel.n");
    sub->add_option("--alpha", f.alpha, "kernel.alpha");
    sub->add_option("--spacing", f.h, "grid.h");
    sub->add_option("--seed", f.seed, "anneal.seed and sweep.seed");
    sub->add_option("--samples", f.samples, "sweep.samples");
    sub->add_option("--self-table", f.self_table, "self-energy table to load before running");
}

std::string joined(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

Config resolve(const Flags& f, const std::string& mass_key) {
    Config cfg;
    if (!f.config.empty()) cfg.load_file(f.config);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(kv, "--set expects section.key=value");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!f.n.empty()) cfg.set("kernel.n", f.n);
    if (!f.alpha.empty()) cfg.set("kernel.alpha", f.alpha);
    if (!f.h.empty()) cfg.set("grid.h", f.h);
    if (!f.seed.empty()) {
        cfg.set("anneal.seed", f.seed);
        cfg.set("sweep.seed", f.seed);
    }
    if (!f.samples.empty()) cfg.set("sweep.samples", f.samples);
    if (!f.mass.empty() && !mass_key.empty()) cfg.set(mass_key, f.mass);
    if (!f.budget.empty()) cfg.set("anneal.budget", f.budget);
    cfg.validate();
    return cfg;
}

Kernel kernel_of(const Config& c) { return Kernel{static_cast<int>(c.integer("kernel.n")), c.real("kernel.alpha")}; }

EnergyOptions energy_options(const Config& c) {
    EnergyOptions o;
    const auto& p = c.text("grid.perimeter");
    o.perimeter = p == "facet" ? PerimeterMethod::facet : p == "crofton" ? PerimeterMethod::crofton : PerimeterMethod::surface_mesh;
    o.nonlocal = c.text("grid.nonlocal") == "direct" ? EnergyMethod::direct : EnergyMethod::convolution;
    return o;
}

GridSet load_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open raster '" + path + "'");
    return read_raster(in);
}

void save_raster(const std::string& path, const GridSet& s) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorCode::Format, "cannot write '" + path + "'");
    write_raster(out, s);
}

std::vector<int> shape_of(const GridSet& s) {
    std::vector<int> v;
    for (int a = 0; a < s.dim(); ++a) v.push_back(s.shape()[a]);
    return v;
}

/// Output directory, manifest and timing for one invocation.
class Run {
public:
    Run(const std::string& verb, const std::string& command, const Config& cfg, const std::string& out)
        : verb_(verb), dir_(out), manifest_(verb, command, cfg), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    RunManifest& manifest() { return manifest_; }

    void csv(const std::string& name, const CsvTable& t) {
        t.write(path(name));
        manifest_.add_output(path(name));
    }
    void raster(const std::string& name, const GridSet& s) {
        save_raster(path(name), s);
        manifest_.add_output(path(name));
    }

    void finish() {
        manifest_.set_wall_time(std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
        manifest_.write(path(verb_ + ".manifest.json"));
    }

private:
    std::string verb_;
    fs::path dir_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

CsvTable energy_table() { return CsvTable({"id", "n", "alpha", "h", "m", "P", "V", "E"}); }

void energy_row(CsvTable& t, const std::string& id, const GridSet& s, const EnergyBreakdown& e) {
    t.add({id, static_cast<long long>(e.kernel.n), e.kernel.alpha, s.spacing(), e.m, e.P, e.V, e.E});
}

// ---------------------------------------------------------------------------

int cmd_energy(const Config& cfg, const Flags& f, const std::string& input, const std::string& cmd) {
    if (input.empty()) throw UsageError("energy needs --input");
    const GridSet s = load_raster(input);
    const Kernel k = kernel_of(cfg);
    const EnergyBreakdown e = total_energy(s, k, energy_options(cfg));
    std::printf("m %.12g\nP %.12g\nV %.12g\nE %.12g\n", e.m, e.P, e.V, e.E);
    Run run("energy", cmd, cfg, f.out);
    run.manifest().add_input(input);
    run.manifest().set_grid_h(s.spacing());
    run.manifest().set_box(shape_of(s));
    CsvTable t = energy_table();
    energy_row(t, fs::path(input).filename().string(), s, e);
    run.csv("energy.csv", t);
    run.finish();
    return 0;
}

int cmd_potential(const Config& cfg, const Flags& f, const std::string& input, const std::vector<std::string>& points,
                  double r_out, int samples, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    Run run("potential", cmd, cfg, f.out);
    if (input.empty()) {
        // closed-form ball profile
        CsvTable t({"radius", "potential"});
        for (const auto& p : ball_profile(k, r_out, samples)) t.add({p.radius, p.potential});
        run.csv("ball_profile.csv", t);
        if (k.alpha != k.n - 1.0) {
            const double ex = boundary_exponent(k, 1e-4, 1e-2);
            run.manifest().result("boundary_exponent", ex);
            std::printf("boundary exponent %.6f\n", ex);
        }
        run.finish();
        return 0;
    }
    const GridSet s = load_raster(input);
    run.manifest().add_input(input);
    run.manifest().set_grid_h(s.spacing());
    const auto field = potential_field(s, k);
    double vmax = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i)
        if (s.occupied(i)) vmax = std::max(vmax, field[i]);
    // bound on sup v_F: the kernel's integral over B_1 plus the mass
    const double bound = (k.n * unit_ball_volume(k.n)) / (k.n - k.alpha) + volume(s);
    std::printf("max v on F %.12g (bound %.12g)\n", vmax, bound);
    run.manifest().result("max_potential", vmax);
    run.manifest().result("potential_bound", bound);
    CsvTable t({"x", "y", "z", "v"});
    for (const auto& p : points) {
        const auto parts = detail::split(p, ',');
        if (parts.size() != static_cast<std::size_t>(s.dim())) throw UsageError("--point needs " + std::to_string(s.dim()) + " coordinates");
        Point x{0.0, 0.0, 0.0};
        for (std::size_t a = 0; a < parts.size(); ++a) x[a] = detail::parse_real(parts[a], "point coordinate");
        const double v = potential_at(s, k, x);
        std::printf("v(%s) %.12g\n", p.c_str(), v);
        t.add({x[0], x[1], x[2], v});
    }
    run.csv("potential.csv", t);
    run.finish();
    return vmax <= bound ? 0 : 1;
}

int cmd_competitor(const Config& cfg, const Flags& f, const std::string& input, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    const double h = cfg.real("grid.h");
    const auto opt = energy_options(cfg);
    const std::string variant = cfg.text("competitor.variant");
    const double m = cfg.real("competitor.mass");
    GridSet out = make_ball(k.n, m, h);
    std::string note;
    auto need_input = [&]() {
        if (input.empty()) throw UsageError(variant + " needs --input");
        return load_raster(input);
    };
    if (variant == "ball_chain") {
        out = make_ball_chain(k.n, k.alpha, m, h, cfg.real("sweep.spacing_factor"), static_cast<int>(cfg.integer("competitor.balls")));
    } else if (variant == "rescaled") {
        const GridSet s = need_input();
        out = rescale_set(s, cfg.real("competitor.scale"), cfg.uinteger("sweep.seed"));
    } else if (variant == "split_translate") {
        const GridSet s = need_input();
        double R = cfg.real("competitor.separation");
        if (R <= 0.0) R = cfg.real("sweep.spacing_factor") * essential_diameter(s);
        const int axis = static_cast<int>(cfg.integer("competitor.axis"));
        const double t = cfg.real("competitor.t");
        // the piecewise energy does not need the translated set to fit in the box
        const EnergyBreakdown e = split_energy(s, axis, t, R, k, opt);
        std::printf("split energy E %.12g (P %.12g V %.12g), unsplit E %.12g\n", e.E, e.P, e.V, total_energy(s, k, opt).E);
        const int shift = static_cast<int>(std::lround(R / s.spacing()));
        Index lower{0, 0, 0}, upper{0, 0, 0};
        upper[axis] = shift;
        out = split_translate(s.padded(lower, upper), axis, t, R);
    } else if (variant == "truncated_ball") {
        const GridSet s = need_input();
        TruncationConfig tc;
        tc.radius = cfg.real("competitor.radius");
        tc.criterion.eps = cfg.real("sweep.eps");
        tc.criterion.energy = opt;
        const TruncationResult r = truncated_competitor(s, k, tc);
        out = r.set;
        note = to_string(r.branch);
        std::printf("branch %s\n", note.c_str());
    }
    const EnergyBreakdown e = total_energy(out, k, opt);
    std::printf("m %.12g\nP %.12g\nV %.12g\nE %.12g\n", e.m, e.P, e.V, e.E);
    Run run("competitor", cmd, cfg, f.out);
    if (!input.empty()) run.manifest().add_input(input);
    run.manifest().set_box(shape_of(out));
    if (!note.empty()) run.manifest().result("branch", note);
    CsvTable t = energy_table();
    energy_row(t, variant, out, e);
    run.csv("competitor.csv", t);
    run.raster("competitor.ras", out);
    run.finish();
    return 0;
}

int cmd_minimize(const Config& cfg, const Flags& f, const std::string& input, bool snapshots, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    const double h = cfg.real("grid.h");
    const std::uint64_t seed = cfg.uinteger("anneal.seed");
    const GridSet init = input.empty() ? initial_set(cfg.text("anneal.init"), k.n, cfg.real("anneal.mass"), h, seed,
                                                     cfg.real("anneal.box_factor"))
                                       : load_raster(input);
    Run run("minimize", cmd, cfg, f.out);
    AnnealConfig ac;
    ac.kernel = k;
    ac.budget = cfg.uinteger("anneal.budget");
    ac.initial_temperature = cfg.real("anneal.initial_temperature");
    ac.decay = cfg.real("anneal.decay");
    ac.sweep_moves = cfg.uinteger("anneal.sweep_moves");
    ac.far_weight = cfg.real("anneal.far_weight");
    ac.seed = seed;
    ac.snapshot_period = cfg.uinteger("anneal.snapshot_period");
    ac.report = energy_options(cfg);
    if (snapshots)
        ac.on_snapshot = [&](std::size_t move, const GridSet& s) {
            run.raster("snapshot_" + std::to_string(move) + ".ras", s);
        };
    const MinimizeResult r = anneal(init, ac);
    const EnergyBreakdown oracle = BallOracle(k).breakdown(volume(r.set));
    CsvTable trace({"move", "temperature", "energy", "best_energy", "acceptance"});
    for (const auto& p : r.trace)
        trace.add({static_cast<long long>(p.move), p.temperature, p.energy, p.best_energy, p.acceptance});
    if (!input.empty()) run.manifest().add_input(input);
    run.manifest().set_seed(seed);
    run.manifest().set_box(shape_of(init));
    run.raster("initial.ras", init);
    run.raster("final.ras", r.set);
    run.csv("trace.csv", trace);
    CsvTable t = energy_table();
    energy_row(t, "final", r.set, r.energy);
    run.csv("final.csv", t);
    auto& m = run.manifest();
    m.result("E", r.energy.E);
    m.result("P", r.energy.P);
    m.result("V", r.energy.V);
    m.result("ball_energy", oracle.E);
    m.result("asymmetry", r.asymmetry);
    m.result("components", r.components);
    m.result("major_components", r.major_components);
    m.result("energy_drift", r.energy_drift);
    run.finish();
    std::printf("E %.12g (ball %.12g)\nasymmetry %.6f\ncomponents %zu (major %zu)\n", r.energy.E, oracle.E, r.asymmetry,
                r.components, r.major_components);
    return 0;
}

int cmd_star(const Config& cfg, const Flags& f, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    if (k.n != 2 && k.n != 3) throw UsageError("star shapes need n in {2, 3}");
    StarOptions so;
    so.h = cfg.real("star.h");
    const int degree = static_cast<int>(cfg.integer("star.degree"));
    const StarModel model(k.n, degree, k, so);
    const StarShape init = random_star(model, cfg.real("star.amplitude"), cfg.uinteger("sweep.seed"));
    const StarDescentResult r = star_descent(init, k, cfg.real("star.eps"), static_cast<int>(cfg.integer("star.steps")),
                                             cfg.real("star.step_size"), so);
    Run run("star", cmd, cfg, f.out);
    CsvTable trace({"step", "energy"});
    trace.add({0LL, r.initial_energy});
    for (std::size_t i = 0; i < r.trace.size(); ++i) trace.add({static_cast<long long>(i + 1), r.trace[i]});
    run.csv("star_trace.csv", trace);
    CsvTable coeffs({"index", "degree", "value"});
    for (std::size_t i = 0; i < r.shape.coeffs.size(); ++i)
        coeffs.add({static_cast<long long>(i), static_cast<long long>(StarShape::mode_degree(k.n, i)), r.shape.coeffs[i]});
    run.csv("star_coeffs.csv", coeffs);
    auto& m = run.manifest();
    m.set_seed(cfg.uinteger("sweep.seed"));
    m.set_grid_h(so.h);
    m.result("initial_energy", r.initial_energy);
    m.result("best_energy", r.best_energy);
    m.result("rho_sup", r.rho_sup);
    m.result("ball", r.ball);
    m.result("non_ball_regime", r.non_ball_regime);
    m.result("stalled", r.stalled);
    run.finish();
    std::printf("steps %d\nE %.12g -> %.12g\nrho_sup %.3e\n%s\n", r.steps, r.initial_energy, r.best_energy, r.rho_sup,
                r.ball ? "ball" : r.non_ball_regime ? "non-ball regime (not a minimizer claim)" : "not converged");
    return 0;
}

int cmd_sweep(const Config& cfg, const Flags& f, const std::string& experiment, const std::string& input,
              const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    const auto opt = energy_options(cfg);
    const double h = cfg.real("grid.h");
    const auto masses = log_masses(cfg.real("sweep.mass_min"), cfg.real("sweep.mass_max"),
                                   static_cast<int>(cfg.integer("sweep.per_decade")));
    Run run("sweep", cmd, cfg, f.out);
    auto& man = run.manifest();
    man.result("experiment", experiment);
    int status = 0;
    if (experiment == "fission") {
        const FissionTable t = fission_scan(k, masses);
        CsvTable csv({"m", "best_balls", "energy_ball", "energy_best"});
        for (const auto& r : t.rows) csv.add({r.m, static_cast<long long>(r.best_balls), r.energies.front(), r.energies[r.best_balls - 1]});
        run.csv("fission.csv", csv);
        man.result("crossover_closed_form", t.crossover_closed_form);
        man.result("crossover_bisection", t.crossover_bisection);
        man.result("monotone", t.monotone);
        std::printf("m* %.9g (bisection %.9g)\n", t.crossover_closed_form, t.crossover_bisection);
        status = t.monotone ? 0 : 1;
    } else if (experiment == "crossover") {
        const GridCrossover g = grid_crossover(k, h, cfg.real("sweep.spacing_factor"), 1.0, 2.6, opt);
        CsvTable csv({"spacing_factor", "crossover"});
        csv.add({g.spacing_factor, g.crossover_near});
        csv.add({2.0 * g.spacing_factor, g.crossover_far});
        csv.add({std::string("inf"), g.crossover});
        run.csv("crossover.csv", csv);
        man.result("crossover", g.crossover);
        man.result("oracle", g.oracle);
        man.result("relative_error", g.relative_error);
        std::printf("grid crossover %.6f (R: %.6f, 2R: %.6f), oracle %.6f\n", g.crossover, g.crossover_near, g.crossover_far, g.oracle);
    } else if (experiment == "scaling") {
        const ScalingReport r = scaling_sweep(k, masses);
        CsvTable csv({"m", "best", "P", "V", "E"});
        for (const auto& rec : r.records) {
            const auto& b = rec.best_candidate();
            csv.add({rec.m, b.id, b.energy.P, b.energy.V, b.energy.E});
        }
        run.csv("scaling.csv", csv);
        man.result("slope_small", r.small.slope);
        man.result("slope_large", r.large.slope);
        man.result("c_lower", r.c_lower);
        man.result("c_upper", r.c_upper);
        man.result("interpolation_constant", r.interpolation_constant);
        std::printf("slopes %.4f (small) %.4f (large)\n", r.small.slope, r.large.slope);
    } else if (experiment == "equipartition") {
        double beta = cfg.real("sweep.beta");
        if (beta <= 0.0) beta = 2.0 * BallOracle(k).energy(1.0);
        std::vector<double> ms;
        for (double m : masses)
            if (m >= 1.0) ms.push_back(m);
        const EquipartitionReport r = equipartition_check(chain_candidates(k, ms), beta);
        CsvTable csv({"m", "P", "V", "min_over_m", "max_over_m"});
        for (const auto& row : r.rows) csv.add({row.m, row.P, row.V, row.min_ratio, row.max_ratio});
        run.csv("equipartition.csv", csv);
        man.result("beta", beta);
        man.result("c_fit", r.c_fit);
        man.result("spread", r.spread);
        status = r.upper_violations == 0 ? 0 : 1;
    } else if (experiment == "diameter") {
        std::vector<DiameterSample> samples;
        for (double m : masses)
            if (m >= 1.0) samples.push_back(chain_diameter_sample(k, m, cfg.real("sweep.spacing_factor")));
        const DiameterReport r = diameter_bounds_check(samples, k);
        CsvTable csv({"id", "m", "diameter", "V"});
        for (const auto& s : samples) csv.add({s.id, s.m, s.diameter, s.V});
        run.csv("diameter.csv", csv);
        man.result("c_lower", r.c_lower);
        man.result("c_upper", r.c_upper);
        man.result("energy_violations", r.energy_violations.size());
        status = r.energy_violations.empty() ? 0 : 1;
    } else if (experiment == "cut" || experiment == "density") {
        const GridSet s = input.empty() ? make_ball(k.n, cfg.real("competitor.mass"), h) : load_raster(input);
        if (!input.empty()) man.add_input(input);
        if (experiment == "cut") {
            const double R = cfg.real("sweep.spacing_factor");
            const CutReport r = cut_inequality_probe(s, k, static_cast<int>(cfg.integer("competitor.axis")), {R, 2.0 * R}, opt);
            CsvTable csv({"t", "U", "rho", "lhs", "rhs", "fails", "E_split_R", "E_split_2R", "profitable"});
            for (const auto& row : r.rows)
                csv.add({row.t, row.U, row.rho, row.lhs, row.rhs, static_cast<long long>(row.inequality_fails),
                         row.split_energy.size() > 0 ? row.split_energy[0] : r.energy,
                         row.split_energy.size() > 1 ? row.split_energy[1] : r.energy, static_cast<long long>(row.profitable)});
            run.csv("cut.csv", csv);
            man.result("energy", r.energy);
            man.result("diameter", r.diameter);
            man.result("any_profitable", r.any_profitable);
            man.result("best_t", r.best_t);
            man.result("best_gain", r.best_gain);
            std::printf("profitable split: %s (best gain %.6g at t = %.6g)\n", r.any_profitable ? "yes" : "no", r.best_gain, r.best_t);
        } else {
            const DensityReport r = density_bound_check(s);
            CsvTable csv({"samples", "min_mass", "min_fraction", "x", "y", "z", "flagged"});
            csv.add({static_cast<long long>(r.samples), r.min_mass, r.min_fraction, r.location[0], r.location[1], r.location[2],
                     static_cast<long long>(r.flagged)});
            run.csv("density.csv", csv);
            man.result("min_mass", r.min_mass);
            man.result("flagged", r.flagged);
        }
    } else {
        throw UsageError("unknown experiment '" + experiment + "'");
    }
    run.finish();
    return status;
}

int cmd_verify(const Config& cfg, const Flags& f, const std::string& check, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    const auto opt = energy_options(cfg);
    const std::size_t samples = cfg.uinteger("sweep.samples");
    const std::uint64_t seed = cfg.uinteger("sweep.seed");
    Run run("verify", cmd, cfg, f.out);
    auto& man = run.manifest();
    man.set_seed(seed);
    man.result("check", check);
    bool ok = true;
    if (check == "interpolation") {
        const InterpolationScan s = interpolation_scan(k, {0.1, 1.0, 10.0}, 16.0, samples, 1.0, 1.0 / 12.0, seed, 1.0, opt);
        CsvTable csv({"kind", "m", "ratio"});
        for (std::size_t i = 0; i < s.ball_masses.size(); ++i) csv.add({std::string("ball"), s.ball_masses[i], s.ball_ratios[i]});
        for (double r : s.random_ratios) csv.add({std::string("random"), 1.0, r});
        run.csv("interpolation.csv", csv);
        man.result("constant", s.constant);
        man.result("ball_spread", s.ball_spread);
        man.result("random_max", s.random_max);
        man.result("counterexamples", s.counterexamples);
        ok = s.ball_spread <= 0.02 && s.counterexamples == 0;
        std::printf("constant %.6f, ball spread %.2e, random max %.6f, counterexamples %zu\n", s.constant, s.ball_spread,
                    s.random_max, s.counterexamples);
    } else if (check == "qiso") {
        CsvTable csv({"set", "asymmetry", "deficit", "ratio"});
        const double h = cfg.real("grid.h");
        std::vector<std::pair<std::string, GridSet>> family;
        for (double e : {1.1, 1.2, 1.4}) family.emplace_back("ellipsoid" + std::to_string(e), make_ellipsoid(k.n, {0.5 * e, 0.5, 0.5 / e}, h));
        family.emplace_back("cube", make_box(k.n, {0.8, 0.8, 0.8}, h));
        for (std::size_t j = 0; j < samples; ++j) family.emplace_back("union" + std::to_string(j), random_union(k.n, 0.5, h, seed + j));
        double worst = 0.0;
        for (const auto& [id, s] : family) {
            try {
                const QisoReport r = check_qiso(s);
                csv.add({id, r.asymmetry, r.deficit, r.ratio});
                worst = std::max(worst, r.ratio);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateDeficit) throw;
            }
        }
        run.csv("qiso.csv", csv);
        man.result("max_ratio", worst);
        ok = std::isfinite(worst);
        std::printf("max asymmetry / sqrt(deficit) %.6f over %zu sets\n", worst, csv.rows());
    } else if (check == "posdef") {
        CsvTable csv({"pair", "gap", "tolerance"});
        const double h = cfg.real("grid.h");
        for (std::size_t j = 0; j < samples; ++j) {
            const GridSet a = random_union(k.n, 0.5, h, seed + 2 * j), b = random_union(k.n, 0.5, h, seed + 2 * j + 1);
            const double gap = posdef_gap(a, b, k, 0.0);
            const double tol = 1e-3 * std::max(nonlocal_energy(a, k), nonlocal_energy(b, k));
            csv.add({static_cast<long long>(j), gap, tol});
            if (gap < -tol) ok = false;
        }
        run.csv("posdef.csv", csv);
    } else if (check == "gradient") {
        StarOptions so;
        so.h = cfg.real("star.h");
        const StarModel model(3, static_cast<int>(cfg.integer("star.degree")), Kernel{3, k.n == 3 ? k.alpha : 1.0}, so);
        CsvTable csv({"sample", "perimeter_error", "richardson_ratio"});
        for (std::size_t j = 0; j < samples; ++j) {
            const StarShape s = random_star(model, 0.1, seed + j);
            const GradientCheck g = gradient_check(s, model.kernel(), cfg.real("star.eps"), so);
            csv.add({static_cast<long long>(j), g.perimeter_error, g.nonlocal_ratio});
            if (g.perimeter_error > 1e-4 || g.nonlocal_ratio < 3.5 || g.nonlocal_ratio > 4.5) ok = false;
        }
        run.csv("gradient.csv", csv);
    } else if (check == "fuglede") {
        const Kernel k3{3, k.n == 3 ? k.alpha : 1.0};
        const FugledeReport a = fuglede_check(samples, k3, static_cast<int>(cfg.integer("star.degree")), seed);
        const FugledeReport b = fuglede_check(2 * samples, k3, static_cast<int>(cfg.integer("star.degree")), seed + 1);
        CsvTable csv({"samples", "max_ratio"});
        csv.add({static_cast<long long>(a.ratios.size()), a.max_ratio});
        csv.add({static_cast<long long>(b.ratios.size()), b.max_ratio});
        run.csv("fuglede.csv", csv);
        const double drift = std::abs(b.max_ratio / a.max_ratio - 1.0);
        man.result("constant", std::max(a.max_ratio, b.max_ratio));
        man.result("doubling_drift", drift);
        ok = std::isfinite(a.max_ratio) && drift <= 0.2;
        std::printf("Fuglede constant %.6f (doubling drift %.3f)\n", std::max(a.max_ratio, b.max_ratio), drift);
    } else {
        throw UsageError("unknown check '" + check + "'");
    }
    man.result("pass", ok);
    run.finish();
    std::printf("%s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 1;
}

int cmd_calibrate(const Config& cfg, const Flags& f, std::size_t mc_samples, const std::string& cmd) {
    const Kernel k = kernel_of(cfg);
    k.validate(true);
    SelfEnergyTable table;
    if (!f.self_table.empty()) {
        std::ifstream in(f.self_table);
        if (!in) throw UsageError("cannot open self-energy table '" + f.self_table + "'");
        table = SelfEnergyTable::load(in);
    }
    const double q = self_energy_quadrature(k.n, k.alpha);
    const SelfEnergyEstimate mc = self_energy_monte_carlo(k.n, k.alpha, mc_samples, cfg.uinteger("sweep.seed"));
    table.put(k.n, k.alpha, "quadrature", {q, 0.0});
    table.put(k.n, k.alpha, "monte_carlo", {mc.value, mc.stderr_});
    Run run("calibrate", cmd, cfg, f.out);
    {
        std::ofstream out(run.path("self_energy.txt"));
        table.save(out);
    }
    run.manifest().add_output(run.path("self_energy.txt"));
    run.manifest().result("quadrature", q);
    run.manifest().result("monte_carlo", mc.value);
    run.manifest().result("monte_carlo_stderr", mc.stderr_);
    run.finish();
    std::printf("c_self(%d, %g): quadrature %.10f, Monte Carlo %.10f +- %.2e\n", k.n, k.alpha, q, mc.value, mc.stderr_);
    return std::abs(q - mc.value) <= 5.0 * mc.stderr_ + 1e-12 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for the nonlocal isoperimetric problem"};
    app.require_subcommand(1, 1);
    app.footer("Config keys (section.key = default):\n" + Config::describe() +
               "Environment: LDLAB_THREADS sets the worker count.");
    Flags f;
    std::string input, experiment = "fission", check = "interpolation";
    std::vector<std::string> points;
    double r_out = 3.0;
    int profile_samples = 61;
    bool snapshots = false;
    std::size_t mc_samples = 1000000;
    std::string variant;

    auto* energy = app.add_subcommand("energy", "P, V and E of a raster");
    energy->add_option("--input", input, "raster file")->required();
    auto* potential = app.add_subcommand("potential", "potential of a raster, or the ball profile without --input");
    potential->add_option("--input", input, "raster file");
    potential->add_option("--point", points, "evaluation point x,y[,z] (repeatable)");
    potential->add_option("--r-out", r_out, "ball profile outer radius")->capture_default_str();
    potential->add_option("--profile-samples", profile_samples, "ball profile samples")->capture_default_str();
    auto* competitor = app.add_subcommand("competitor", "build a competitor set");
    competitor->add_option("--input", input, "source raster (rescaled, split_translate, truncated_ball)");
    competitor->add_option("--variant", variant, "competitor.variant");
    competitor->add_option("--mass", f.mass, "competitor.mass");
    auto* minimize = app.add_subcommand("minimize", "simulated annealing at fixed mass");
    minimize->add_option("--input", input, "initial raster (default: generated from [anneal])");
    minimize->add_option("--mass", f.mass, "anneal.mass");
    minimize->add_option("--budget", f.budget, "anneal.budget");
    minimize->add_flag("--snapshots", snapshots, "write a raster at every trace row");
    auto* star = app.add_subcommand("star", "spectral descent on star-shaped sets");
    auto* sweep = app.add_subcommand("sweep", "experiments: fission, crossover, scaling, equipartition, diameter, cut, density");
    sweep->add_option("--experiment", experiment, "experiment name")->capture_default_str();
    sweep->add_option("--input", input, "raster for cut / density (default: ball of competitor.mass)");
    auto* verify = app.add_subcommand("verify", "inequality and property checks: interpolation, qiso, posdef, gradient, fuglede");
    verify->add_option("--check", check, "check name")->capture_default_str();
    auto* calibrate = app.add_subcommand("calibrate", "self-energy constant by quadrature and Monte Carlo");
    calibrate->add_option("--mc-samples", mc_samples, "Monte-Carlo samples")->capture_default_str();
    for (auto* sub : {energy, potential, competitor, minimize, star, sweep, verify, calibrate}) add_common(sub, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = joined(argc, argv);
    try {
        Config cfg = resolve(f, minimize->parsed() ? "anneal.mass" : competitor->parsed() ? "competitor.mass" : "");
        if (!variant.empty()) {
            cfg.set("competitor.variant", variant);
            cfg.validate();
        }
        if (!f.self_table.empty() && !calibrate->parsed()) {
            std::ifstream in(f.self_table);
            if (!in) throw UsageError("cannot open self-energy table '" + f.self_table + "'");
            SelfEnergyTable::global() = SelfEnergyTable::load(in);
        }
        if (energy->parsed()) return cmd_energy(cfg, f, input, cmd);
        if (potential->parsed()) return cmd_potential(cfg, f, input, points, r_out, profile_samples, cmd);
        if (competitor->parsed()) return cmd_competitor(cfg, f, input, cmd);
        if (minimize->parsed()) return cmd_minimize(cfg, f, input, snapshots, cmd);
        if (star->parsed()) return cmd_star(cfg, f, cmd);
        if (sweep->parsed()) return cmd_sweep(cfg, f, experiment, input, cmd);
        if (verify->parsed()) return cmd_verify(cfg, f, check, cmd);
        if (calibrate->parsed()) return cmd_calibrate(cfg, f, mc_samples, cmd);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidKernel || e.code() == ErrorCode::InvalidArgument ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
