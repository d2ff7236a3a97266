// qcl: quantum control landscape toolkit.
//
// Subcommands: simulate | corank | singular-gen | ascend | classify |
// experiment-fig3. Everything is deterministic given (config, flags,
// rng seed); time series go to CSV, verdicts to JSON.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace cli {

namespace {

const char* class_name(int c) {
    switch (c) {
        case QCL_CLASS_NOT_CRITICAL:
            return "not_critical";
        case QCL_CLASS_REGULAR_KINEMATIC:
            return "regular_kinematic";
        case QCL_CLASS_SINGULAR_KINEMATIC:
            return "singular_kinematic";
        case QCL_CLASS_NONKINEMATIC:
            return "nonkinematic";
        default:
            return "unknown";
    }
}

const char* term_name(int t) {
    switch (t) {
        case QCL_TERM_GRAD_TOL:
            return "grad_tol";
        case QCL_TERM_J_TOL:
            return "j_tol";
        case QCL_TERM_MAX_ITERS:
            return "max_iters";
        case QCL_TERM_LINE_SEARCH_FAILURE:
            return "line_search_failure";
        default:
            return "unknown";
    }
}

SystemPtr make_system(const Config& cfg) {
    qcl_system* sys = nullptr;
    const qcl_status st =
        cfg.hermitian ? qcl_system_create_hermitian(cfg.dim, cfg.h0.data(), cfg.h1.data(), &sys)
                      : qcl_system_create_skew(cfg.dim, cfg.h0.data(), cfg.h1.data(), &sys);
    check(st, "system");
    return SystemPtr(sys);
}

ControlPtr make_control(double duration, const std::vector<double>& samples) {
    qcl_control* c = nullptr;
    check(qcl_control_create(duration, samples.data(), static_cast<std::int64_t>(samples.size()),
                             &c),
          "control");
    return ControlPtr(c);
}

std::vector<double> random_samples(std::int64_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> s(static_cast<std::size_t>(m));
    for (auto& x : s) x = u(rng);
    return s;
}

// Control CSV whose duration must match the configured problem horizon.
ControlPtr load_control_file(const Config& cfg, const fs::path& path) {
    ParsedControl pc = read_control_csv(path);
    if (std::abs(pc.duration - cfg.duration) > 1e-9 * std::max(1.0, cfg.duration))
        throw CliError(kConfig, "control file " + path.string() + " spans duration " +
                                    fmt(pc.duration) + " but problem.duration is " +
                                    fmt(cfg.duration));
    return make_control(pc.duration, pc.samples);
}

ControlPtr config_control(const Config& cfg) {
    if (cfg.control.type == "zero")
        return make_control(cfg.duration, std::vector<double>(static_cast<std::size_t>(cfg.samples), 0.0));
    if (cfg.control.type == "constant")
        return make_control(cfg.duration,
                            std::vector<double>(static_cast<std::size_t>(cfg.samples), cfg.control.value));
    if (cfg.control.type == "random")
        return make_control(cfg.duration,
                            random_samples(cfg.samples, cfg.control.rng_seed.value_or(cfg.rng_seed)));
    return load_control_file(cfg, cfg.control.path);
}

std::vector<double> control_samples_of(const qcl_control* c, double* duration = nullptr,
                                       std::int64_t* m_out = nullptr) {
    std::int64_t m = 0;
    check(qcl_control_num_samples(c, &m), "control");
    std::vector<double> s(static_cast<std::size_t>(m));
    check(qcl_control_samples(c, s.data()), "control");
    if (duration) check(qcl_control_duration(c, duration), "control");
    if (m_out) *m_out = m;
    return s;
}

double yield_of(const std::vector<double>& psif, const std::vector<double>& psi) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k + 1 < psi.size(); k += 2) {
        re += psif[k] * psi[k] + psif[k + 1] * psi[k + 1];
        im += psif[k] * psi[k + 1] - psif[k + 1] * psi[k];
    }
    return re * re + im * im;
}

qcl_ascent_options to_c(const AscentCfg& a) {
    qcl_ascent_options o;
    qcl_ascent_options_default(&o);
    o.max_iters = a.max_iters;
    o.step0 = a.step0;
    o.backtrack = a.backtrack;
    o.growth = a.growth;
    o.step_max = a.step_max;
    o.grad_tol = a.grad_tol;
    o.j_tol = a.j_tol;
    o.alpha_min = a.alpha_min;
    return o;
}

// Exact sup-norm perturbation of radius r, matching the experiment driver.
std::vector<double> perturbed_samples(const std::vector<double>& base, double radius,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> out = base;
    if (radius == 0.0) return out;
    for (;;) {
        std::vector<double> delta(base.size());
        double sup = 0.0;
        for (auto& d : delta) {
            d = u(rng);
            sup = std::max(sup, std::abs(d));
        }
        if (sup == 0.0) continue;
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += radius * delta[j] / sup;
        return out;
    }
}

std::string ascent_csv(const qcl_ascent* a, bool with_distance) {
    std::int64_t n = 0;
    check(qcl_ascent_num_iterates(a, &n), "ascent record");
    std::string csv = with_distance ? "iteration,j,grad_sup,step,distance\n"
                                    : "iteration,j,grad_sup,step\n";
    for (std::int64_t i = 0; i < n; ++i) {
        double j = 0.0, g = 0.0, st = 0.0, d = 0.0;
        check(qcl_ascent_iterate(a, i, &j, &g, &st, &d), "ascent record");
        csv += std::to_string(i);
        csv += ',';
        csv += fmt(j);
        csv += ',';
        csv += fmt(g);
        csv += ',';
        csv += fmt(st);
        if (with_distance) {
            csv += ',';
            csv += fmt(d);
        }
        csv += '\n';
    }
    return csv;
}

void corank_json(JsonWriter& w, const qcl_corank_report& rep, const std::vector<double>& sv) {
    w.begin_object();
    w.key("ambient_dim").value(rep.ambient_dim);
    w.key("rank").value(rep.rank);
    w.key("corank").value(rep.corank);
    w.key("threshold").value(rep.threshold);
    w.key("threshold_rel").value(rep.threshold_rel);
    w.key("spectral_gap").value(rep.spectral_gap);
    if (!sv.empty()) {
        w.key("singular_values").begin_array();
        for (double s : sv) w.value(s);
        w.end_array();
    }
    w.end_object();
}

// --- subcommands ---------------------------------------------------------------

int cmd_simulate(const Config& cfg, const fs::path& out) {
    auto sys = make_system(cfg);
    auto c = config_control(cfg);
    qcl_trajectory* tr = nullptr;
    check(qcl_propagate(sys.get(), c.get(), cfg.psi0.data(), &tr), "propagate");
    TrajectoryPtr traj(tr);

    std::int64_t nodes = 0;
    check(qcl_trajectory_num_nodes(tr, &nodes), "trajectory");
    std::vector<double> times(static_cast<std::size_t>(nodes));
    check(qcl_trajectory_times(tr, times.data()), "trajectory");

    std::string csv = "t";
    for (std::int64_t k = 1; k <= cfg.dim; ++k) {
        csv += ",psi" + std::to_string(k) + "_re,psi" + std::to_string(k) + "_im";
    }
    csv += ",j\n";
    std::vector<double> state(static_cast<std::size_t>(2 * cfg.dim));
    double final_j = 0.0;
    for (std::int64_t i = 0; i < nodes; ++i) {
        check(qcl_trajectory_state(tr, i, state.data()), "trajectory");
        csv += fmt(times[static_cast<std::size_t>(i)]);
        for (double x : state) {
            csv += ',';
            csv += fmt(x);
        }
        final_j = yield_of(cfg.psif, state);
        csv += ',';
        csv += fmt(final_j);
        csv += '\n';
    }
    write_file(out / "trajectory.csv", csv);
    std::printf("simulate: %" PRId64 " nodes, final J = %s -> %s\n", nodes, fmt(final_j).c_str(),
                (out / "trajectory.csv").string().c_str());
    return kOk;
}

int cmd_corank(const Config& cfg, const fs::path& out, const std::string& map) {
    auto sys = make_system(cfg);
    auto c = config_control(cfg);
    qcl_corank_report rep{};
    const std::int64_t cap = map == "state" ? 2 * cfg.dim : cfg.dim * cfg.dim;
    std::vector<double> sv(static_cast<std::size_t>(cap));
    std::int64_t count = 0;
    if (map == "state") {
        check(qcl_corank_state(sys.get(), c.get(), cfg.psi0.data(), cfg.rank_threshold_rel, &rep,
                               sv.data(), cap, &count),
              "corank");
    } else {
        check(qcl_corank_propagator(sys.get(), c.get(), cfg.rank_threshold_rel, &rep, sv.data(),
                                    cap, &count),
              "corank");
    }
    sv.resize(static_cast<std::size_t>(std::min(count, cap)));

    JsonWriter w;
    w.begin_object();
    w.key("map").value(map);
    w.key("num_samples").value(cfg.samples);
    w.key("report");
    corank_json(w, rep, sv);
    w.end_object();
    write_file(out / "corank.json", w.take());
    std::printf("corank(%s) = %" PRId64 "  rank %" PRId64 "/%" PRId64 "  gap %s\n", map.c_str(),
                rep.corank, rep.rank, rep.ambient_dim, fmt(rep.spectral_gap).c_str());
    return kOk;
}

int cmd_singular_gen(const Config& cfg, const fs::path& out, std::int64_t order,
                     std::uint64_t rng_seed, bool phase_orthogonal) {
    auto sys = make_system(cfg);
    qcl_seed* sd = nullptr;
    check(qcl_sample_seed_pair(sys.get(), order, rng_seed, phase_orthogonal ? 1 : 0, 0, &sd),
          "seed sampling");
    SeedPtr seed(sd);
    qcl_extremal* ex = nullptr;
    check(qcl_generate_singular_extremal(sys.get(), sd, cfg.duration, cfg.samples,
                                         cfg.den_floor_rel, &ex),
          "generation");
    ExtremalPtr arc(ex);

    qcl_control* cc = nullptr;
    check(qcl_extremal_control(ex, &cc), "extremal");
    ControlPtr c(cc);
    double duration = 0.0;
    std::int64_t m = 0;
    const std::vector<double> samples = control_samples_of(cc, &duration, &m);
    write_file(out / "control.csv", control_csv(duration, samples.data(), m));

    std::vector<double> rt(static_cast<std::size_t>(m)), r1(rt.size()), r2(rt.size()),
        r3(rt.size());
    check(qcl_extremal_residuals(ex, rt.data(), r1.data(), r2.data(), r3.data()), "extremal");
    std::string rcsv = "t,r1,r2,r3\n";
    double rmax = 0.0;
    for (std::int64_t j = 0; j < m; ++j) {
        const auto k = static_cast<std::size_t>(j);
        rcsv += fmt(rt[k]);
        rcsv += ',';
        rcsv += fmt(r1[k]);
        rcsv += ',';
        rcsv += fmt(r2[k]);
        rcsv += ',';
        rcsv += fmt(r3[k]);
        rcsv += '\n';
        rmax = std::max({rmax, std::abs(r1[k]), std::abs(r2[k]), std::abs(r3[k])});
    }
    write_file(out / "residuals.csv", rcsv);

    std::vector<double> psi0(static_cast<std::size_t>(2 * cfg.dim)), phi0(psi0.size());
    check(qcl_seed_data(sd, psi0.data(), phi0.data(), nullptr), "seed");
    std::int64_t pat_len = 0;
    check(qcl_extremal_pattern(ex, nullptr, 0, &pat_len), "extremal");
    std::vector<std::int64_t> pattern(static_cast<std::size_t>(pat_len));
    check(qcl_extremal_pattern(ex, pattern.data(), pat_len, &pat_len), "extremal");
    double den_min = 0.0;
    check(qcl_extremal_den_min(ex, &den_min), "extremal");

    JsonWriter w;
    w.begin_object();
    w.key("order").value(order);
    w.key("rng_seed").value(rng_seed);
    w.key("phase_orthogonal").value(phase_orthogonal);
    w.key("duration").value(duration);
    w.key("samples").value(m);
    w.key("pattern").begin_array();
    for (auto p : pattern) w.value(p);
    w.end_array();
    w.key("den_min").value(den_min);
    w.key("max_residual").value(rmax);
    w.key("psi0").begin_array();
    for (std::int64_t i = 0; i < cfg.dim; ++i) {
        w.begin_array()
            .value(psi0[static_cast<std::size_t>(2 * i)])
            .value(psi0[static_cast<std::size_t>(2 * i + 1)])
            .end_array();
    }
    w.end_array();
    w.key("phi0").begin_array();
    for (std::int64_t i = 0; i < cfg.dim; ++i) {
        w.begin_array()
            .value(phi0[static_cast<std::size_t>(2 * i)])
            .value(phi0[static_cast<std::size_t>(2 * i + 1)])
            .end_array();
    }
    w.end_array();
    w.end_object();
    write_file(out / "seed.json", w.take());

    std::printf("singular-gen: order %" PRId64 ", seed %" PRIu64 ", max residual %s, den_min %s -> %s\n",
                order, rng_seed, fmt(rmax).c_str(), fmt(den_min).c_str(), out.string().c_str());
    return kOk;
}

struct StartSpec {
    std::string mode;  // config | random | file | perturbed
    fs::path path;     // file: control CSV; perturbed: bundle directory
    double radius = 0.0;
};

StartSpec parse_start(const std::string& s) {
    StartSpec sp;
    if (s == "file" || s == "config") {
        sp.mode = "config";
        return sp;
    }
    if (s == "random") {
        sp.mode = "random";
        return sp;
    }
    if (s.rfind("file:", 0) == 0) {
        sp.mode = "file";
        sp.path = s.substr(5);
        if (sp.path.empty()) throw CliError(kConfig, "--start file: needs a path");
        return sp;
    }
    if (s.rfind("perturbed:", 0) == 0) {
        const std::string rest = s.substr(10);
        const std::size_t colon = rest.rfind(':');
        if (colon == std::string::npos || colon == 0)
            throw CliError(kConfig, "--start perturbed needs the form perturbed:<bundle>:<radius>");
        sp.mode = "perturbed";
        sp.path = rest.substr(0, colon);
        sp.radius = parse_double(rest.substr(colon + 1), "--start radius");
        if (sp.radius < 0.0) throw CliError(kConfig, "--start perturbation radius must be >= 0");
        return sp;
    }
    throw CliError(kConfig, "--start must be file | random | file:<path> | perturbed:<bundle>:<radius>");
}

int cmd_ascend(const Config& cfg, const fs::path& out, const std::string& start) {
    const StartSpec sp = parse_start(start);
    auto sys = make_system(cfg);

    ControlPtr reference;  // distance column only for perturbed starts
    ControlPtr c0;
    if (sp.mode == "config") {
        c0 = config_control(cfg);
    } else if (sp.mode == "random") {
        c0 = make_control(cfg.duration, random_samples(cfg.samples, cfg.rng_seed));
    } else if (sp.mode == "file") {
        c0 = load_control_file(cfg, sp.path);
    } else {
        reference = load_control_file(cfg, sp.path / "control.csv");
        double duration = 0.0;
        const std::vector<double> base = control_samples_of(reference.get(), &duration);
        c0 = make_control(duration, perturbed_samples(base, sp.radius, cfg.rng_seed));
    }

    const qcl_ascent_options opts = to_c(cfg.ascent);
    qcl_ascent* a = nullptr;
    check(qcl_steepest_ascent(sys.get(), c0.get(), cfg.psi0.data(), cfg.psif.data(), &opts,
                              reference.get(), &a),
          "ascent");
    AscentPtr rec(a);

    write_file(out / "ascent.csv", ascent_csv(a, reference != nullptr));
    qcl_control* fc = nullptr;
    check(qcl_ascent_final_control(a, &fc), "ascent record");
    ControlPtr final_control(fc);
    double duration = 0.0;
    std::int64_t m = 0;
    const std::vector<double> fs_ = control_samples_of(fc, &duration, &m);
    write_file(out / "final_control.csv", control_csv(duration, fs_.data(), m));

    double final_j = 0.0, smallest_alpha = 0.0;
    int term = 0, converged = 0;
    check(qcl_ascent_summary(a, &final_j, &term, &converged, &smallest_alpha), "ascent record");
    std::int64_t n = 0;
    check(qcl_ascent_num_iterates(a, &n), "ascent record");
    std::printf("ascend: %s after %" PRId64 " iterations, final J = %s -> %s\n", term_name(term),
                n - 1, fmt(final_j).c_str(), out.string().c_str());
    return term == QCL_TERM_LINE_SEARCH_FAILURE ? kLineSearch : kOk;
}

int cmd_classify(const Config& cfg, const fs::path& out, const std::string& control_path,
                 bool with_hessian, double fd_step, bool force_hessian) {
    auto sys = make_system(cfg);
    ControlPtr c = control_path.empty() ? config_control(cfg)
                                        : load_control_file(cfg, control_path);

    qcl_classify_options co;
    qcl_classify_options_default(&co);
    co.crit_tol = cfg.crit_tol;
    co.kin_tol = cfg.kin_tol;
    co.rank_threshold_rel = cfg.rank_threshold_rel;
    co.with_hessian = with_hessian ? 1 : 0;
    co.hessian_fd_step = fd_step;
    co.force_hessian = force_hessian ? 1 : 0;

    qcl_critical_report rep{};
    check(qcl_classify(sys.get(), c.get(), cfg.psi0.data(), cfg.psif.data(), &co, &rep),
          "classify");

    JsonWriter w;
    w.begin_object();
    w.key("classification").value(class_name(rep.classification));
    w.key("j").value(rep.j);
    w.key("grad_norm").value(rep.grad_norm);
    w.key("kinematic_grad_norm").value(rep.kinematic_grad_norm);
    w.key("kinematic_grad_norm_ambient").value(rep.kinematic_grad_norm_ambient);
    w.key("corank");
    corank_json(w, rep.corank, {});
    w.key("tolerances")
        .begin_object()
        .key("crit_tol")
        .value(cfg.crit_tol)
        .key("kin_tol")
        .value(cfg.kin_tol)
        .key("rank_threshold_rel")
        .value(cfg.rank_threshold_rel)
        .end_object();
    if (rep.has_hessian) {
        w.key("hessian")
            .begin_object()
            .key("min")
            .value(rep.hessian_min)
            .key("max")
            .value(rep.hessian_max)
            .key("fd_step")
            .value(fd_step)
            .end_object();
    }
    w.end_object();
    write_file(out / "classification.json", w.take());
    std::printf("classify: %s (J = %s, grad %s, kinematic %s, corank %" PRId64 ")\n",
                class_name(rep.classification), fmt(rep.j).c_str(), fmt(rep.grad_norm).c_str(),
                fmt(rep.kinematic_grad_norm).c_str(), rep.corank.corank);
    return kOk;
}

template <class F>
auto run_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (CliError& e) {
        throw CliError(e.exit_code, std::string("stage ") + stage + ": " + e.what());
    }
}

int cmd_experiment_fig3(const Config& cfg, const fs::path& out) {
    auto sys = make_system(cfg);
    const ExperimentCfg& ex = cfg.experiment;

    // Reference arcs: iterate rng seeds until num_arcs arcs clear the
    // denominator health margin; spiky arcs are recorded and skipped.
    struct Arc {
        ExtremalPtr extremal;
        ControlPtr control;
        std::uint64_t rng_seed;
        double den_min;
        double j_reference;
        std::vector<std::int64_t> pattern;
    };
    std::vector<Arc> arcs;
    std::vector<std::uint64_t> rejected;
    run_stage("generate-reference-arcs", [&] {
        const int max_tries = 64;
        std::uint64_t s = cfg.rng_seed;
        for (int t = 0; t < max_tries && std::cmp_less(arcs.size(), ex.num_arcs); ++t, ++s) {
            qcl_seed* sd = nullptr;
            check(qcl_sample_seed_pair(sys.get(), ex.order, s, 0, 0, &sd), "seed sampling");
            SeedPtr seed(sd);
            std::vector<double> phi0(static_cast<std::size_t>(2 * cfg.dim));
            check(qcl_seed_data(sd, nullptr, phi0.data(), nullptr), "seed");
            double phi_norm2 = 0.0;
            for (double x : phi0) phi_norm2 += x * x;

            qcl_extremal* e = nullptr;
            const qcl_status st = qcl_generate_singular_extremal(sys.get(), sd, cfg.duration,
                                                                 cfg.samples, cfg.den_floor_rel, &e);
            if (st == QCL_ERR_ARC_TRANSITION) {
                rejected.push_back(s);
                continue;
            }
            check(st, "generation");
            ExtremalPtr arc(e);
            double den_min = 0.0;
            check(qcl_extremal_den_min(e, &den_min), "extremal");
            // Health margin alone is not enough on coarse grids: an
            // under-resolved integration can step across the denominator
            // collapse and report a healthy minimum while the constraint
            // residuals have already blown up. Check both certificates.
            std::int64_t m = 0;
            check(qcl_extremal_num_samples(e, &m), "extremal");
            std::vector<double> r1(static_cast<std::size_t>(m)), r2(r1.size()), r3(r1.size());
            check(qcl_extremal_residuals(e, nullptr, r1.data(), r2.data(), r3.data()), "extremal");
            double rmax = 0.0;
            for (std::size_t i = 0; i < r1.size(); ++i)
                rmax = std::max({rmax, std::abs(r1[i]), std::abs(r2[i]), std::abs(r3[i])});
            const double phi_norm = std::sqrt(phi_norm2);
            if (den_min < QCL_DEN_HEALTHY_REL * phi_norm || rmax > 1e-6 * phi_norm) {
                rejected.push_back(s);
                continue;
            }
            Arc a;
            a.rng_seed = s;
            a.den_min = den_min;
            qcl_control* cc = nullptr;
            check(qcl_extremal_control(e, &cc), "extremal");
            a.control = ControlPtr(cc);
            check(qcl_objective(sys.get(), cc, cfg.psi0.data(), cfg.psif.data(), &a.j_reference),
                  "objective");
            std::int64_t len = 0;
            check(qcl_extremal_pattern(e, nullptr, 0, &len), "extremal");
            a.pattern.resize(static_cast<std::size_t>(len));
            check(qcl_extremal_pattern(e, a.pattern.data(), len, &len), "extremal");
            a.extremal = std::move(arc);
            arcs.push_back(std::move(a));
        }
        if (std::cmp_less(arcs.size(), ex.num_arcs))
            throw CliError(kNoSeed, "only " + std::to_string(arcs.size()) + " of " +
                                        std::to_string(ex.num_arcs) +
                                        " reference arcs cleared the denominator margin within " +
                                        std::to_string(max_tries) + " rng seeds");
    });

    run_stage("write-reference-arcs", [&] {
        for (std::size_t k = 0; k < arcs.size(); ++k) {
            const std::string base = "arc" + std::to_string(k + 1);
            double duration = 0.0;
            std::int64_t m = 0;
            const std::vector<double> samples = control_samples_of(arcs[k].control.get(), &duration, &m);
            write_file(out / (base + "_control.csv"), control_csv(duration, samples.data(), m));
            std::vector<double> rt(static_cast<std::size_t>(m)), r1(rt.size()), r2(rt.size()),
                r3(rt.size());
            check(qcl_extremal_residuals(arcs[k].extremal.get(), rt.data(), r1.data(), r2.data(),
                                         r3.data()),
                  "extremal");
            std::string rcsv = "t,r1,r2,r3\n";
            for (std::int64_t j = 0; j < m; ++j) {
                const auto i = static_cast<std::size_t>(j);
                rcsv += fmt(rt[i]);
                rcsv += ',';
                rcsv += fmt(r1[i]);
                rcsv += ',';
                rcsv += fmt(r2[i]);
                rcsv += ',';
                rcsv += fmt(r3[i]);
                rcsv += '\n';
            }
            write_file(out / (base + "_residuals.csv"), rcsv);
        }
    });

    struct TrialRow {
        double initial_j, final_j, initial_distance, final_distance;
        bool success, stalled;
        std::int64_t iterations;
        int termination;
        std::string csv_name;
    };
    std::vector<std::vector<TrialRow>> rows(arcs.size());
    std::int64_t total_success = 0, total_stalled = 0, total_trials = 0;
    double min_final_j = 1.0;
    bool any_on_critical = false;

    run_stage("perturb-and-ascend", [&] {
        for (std::size_t k = 0; k < arcs.size(); ++k) {
            qcl_trap_options topt;
            qcl_trap_options_default(&topt);
            topt.num_trials = ex.trials_per_arc;
            topt.radius = ex.radius;
            topt.success_j = ex.success_j;
            topt.rng_seed = cfg.rng_seed + 1000 * static_cast<std::uint64_t>(k + 1);
            topt.ascent = to_c(ex.ascent);
            qcl_trap* trap = nullptr;
            check(qcl_trap_experiment(sys.get(), arcs[k].control.get(), cfg.psi0.data(),
                                      cfg.psif.data(), &topt, &trap),
                  "trap experiment");
            TrapPtr rep(trap);

            std::int64_t n = 0, succ = 0, stall = 0;
            int on_crit = 0;
            check(qcl_trap_summary(trap, &n, &succ, &stall, nullptr, nullptr, &on_crit),
                  "trap summary");
            total_success += succ;
            total_stalled += stall;
            total_trials += n;
            any_on_critical = any_on_critical || on_crit != 0;

            for (std::int64_t i = 0; i < n; ++i) {
                TrialRow row{};
                int success = 0, stalled = 0;
                check(qcl_trap_trial(trap, i, &row.initial_j, &row.final_j, &success, &stalled,
                                     &row.initial_distance, &row.final_distance),
                      "trap trial");
                row.success = success != 0;
                row.stalled = stalled != 0;
                qcl_ascent* a = nullptr;
                check(qcl_trap_trial_record(trap, i, &a), "trap trial");
                AscentPtr arec(a);
                std::int64_t iters = 0;
                check(qcl_ascent_num_iterates(a, &iters), "trap trial");
                row.iterations = iters - 1;
                int term = 0;
                check(qcl_ascent_summary(a, nullptr, &term, nullptr, nullptr), "trap trial");
                row.termination = term;
                row.csv_name = "arc" + std::to_string(k + 1) + "_trial" + std::to_string(i + 1) +
                               "_ascent.csv";
                write_file(out / row.csv_name, ascent_csv(a, true));
                min_final_j = std::min(min_final_j, row.final_j);
                rows[k].push_back(std::move(row));
            }
        }
    });

    const std::int64_t moved = total_trials - total_stalled;
    const double fraction = moved > 0 ? static_cast<double>(total_success) / static_cast<double>(moved) : 0.0;

    run_stage("write-report", [&] {
        JsonWriter w;
        w.begin_object();
        w.key("rng_seed").value(cfg.rng_seed);
        w.key("num_arcs").value(static_cast<std::int64_t>(arcs.size()));
        w.key("trials_per_arc").value(ex.trials_per_arc);
        w.key("radius").value(ex.radius);
        w.key("success_j").value(ex.success_j);
        w.key("order").value(ex.order);
        w.key("arcs").begin_array();
        for (std::size_t k = 0; k < arcs.size(); ++k) {
            w.begin_object();
            w.key("rng_seed").value(arcs[k].rng_seed);
            w.key("den_min").value(arcs[k].den_min);
            w.key("j_reference").value(arcs[k].j_reference);
            w.key("pattern").begin_array();
            for (auto p : arcs[k].pattern) w.value(p);
            w.end_array();
            w.key("control_csv").value("arc" + std::to_string(k + 1) + "_control.csv");
            w.key("trials").begin_array();
            for (const TrialRow& row : rows[k]) {
                w.begin_object();
                w.key("initial_j").value(row.initial_j);
                w.key("final_j").value(row.final_j);
                w.key("success").value(row.success);
                w.key("stalled").value(row.stalled);
                w.key("initial_distance").value(row.initial_distance);
                w.key("final_distance").value(row.final_distance);
                w.key("iterations").value(row.iterations);
                w.key("termination").value(term_name(row.termination));
                w.key("ascent_csv").value(row.csv_name);
                w.end_object();
            }
            w.end_array();
            w.end_object();
        }
        w.end_array();
        w.key("rejected_seeds").begin_array();
        for (auto s : rejected) w.value(s);
        w.end_array();
        w.key("fraction_success").value(fraction);
        w.key("min_final_j").value(min_final_j);
        w.key("num_stalled").value(total_stalled);
        w.key("on_critical_start").value(any_on_critical);
        w.end_object();
        write_file(out / "summary.json", w.take());
    });

    std::printf("experiment-fig3: fraction = %s, min final J = %s over %" PRId64
                " trials (%" PRId64 " stalled) -> %s\n",
                fmt(fraction).c_str(), fmt(min_final_j).c_str(), total_trials, total_stalled,
                (out / "summary.json").string().c_str());
    return kOk;
}

}  // namespace
}  // namespace cli

int main(int argc, char** argv) {
    CLI::App app{"quantum control landscape toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> ov_rng_seed;
    std::optional<std::int64_t> ov_grid_m;
    std::optional<double> ov_crit_tol, ov_kin_tol, ov_rank_rel, ov_den_floor, ov_surface_tol,
        ov_grad_tol, ov_j_tol;

    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (default: current)");
    app.add_option("--rng-seed", ov_rng_seed, "override the configured rng seed");
    app.add_option("--grid-m", ov_grid_m, "override the configured number of control samples");
    app.add_option("--crit-tol", ov_crit_tol, "override the criticality tolerance");
    app.add_option("--kin-tol", ov_kin_tol, "override the kinematic tolerance");
    app.add_option("--rank-threshold-rel", ov_rank_rel, "override the rank threshold");
    app.add_option("--den-floor-rel", ov_den_floor, "override the feedback denominator floor");
    app.add_option("--surface-tol", ov_surface_tol, "override the singular-surface tolerance");
    app.add_option("--grad-tol", ov_grad_tol, "override the ascent gradient tolerance");
    app.add_option("--j-tol", ov_j_tol, "override the ascent yield tolerance");

    auto* simulate = app.add_subcommand("simulate", "propagate and write the trajectory CSV");

    auto* corank = app.add_subcommand("corank", "rank deficiency of the end-point map");
    std::string map = "state";
    corank->add_option("--map", map, "state | propagator")
        ->check(CLI::IsMember({"state", "propagator"}));

    auto* singular_gen =
        app.add_subcommand("singular-gen", "generate a singular extremal bundle");
    std::int64_t order = 2;
    std::optional<std::uint64_t> gen_seed;
    bool phase_orthogonal = false;
    singular_gen->add_option("--order", order, "singularity order k (default 2)");
    singular_gen->add_option("--seed", gen_seed, "seed-pair rng seed (default: run rng seed)");
    singular_gen->add_flag("--phase-orthogonal", phase_orthogonal,
                           "also orthogonalize the conjugate seed against i*psi0");

    auto* ascend = app.add_subcommand("ascend", "steepest ascent of the yield");
    std::string start = "file";
    ascend->add_option("--start", start, "file | random | file:<path> | perturbed:<bundle>:<radius>");
    std::optional<std::int64_t> max_iters;
    ascend->add_option("--max-iters", max_iters, "override the ascent iteration budget");

    auto* classify = app.add_subcommand("classify", "critical-point classification report");
    std::string control_path;
    bool with_hessian = false, force_hessian = false;
    double fd_step = 1e-4;
    classify->add_option("--control", control_path, "control CSV (default: config control)");
    classify->add_flag("--with-hessian", with_hessian, "attach Hessian extremes");
    classify->add_option("--fd-step", fd_step, "Hessian finite-difference step (default 1e-4)");
    classify->add_flag("--force-hessian", force_hessian, "allow Hessian beyond 512 samples");

    auto* experiment =
        app.add_subcommand("experiment-fig3", "singular-control trap-escape experiment");
    std::optional<std::int64_t> exp_trials;
    std::optional<double> exp_radius;
    experiment->add_option("--trials", exp_trials, "trials per reference arc");
    experiment->add_option("--radius", exp_radius, "perturbation sup-norm radius");

    for (auto* sc : app.get_subcommands({})) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kConfig;
    }

    try {
        cli::Config cfg = cli::load_config(config_path);
        if (ov_rng_seed) cfg.rng_seed = *ov_rng_seed;
        if (ov_grid_m) {
            if (*ov_grid_m < 1) throw cli::CliError(cli::kConfig, "--grid-m must be at least 1");
            cfg.samples = *ov_grid_m;
        }
        if (ov_crit_tol) cfg.crit_tol = *ov_crit_tol;
        if (ov_kin_tol) cfg.kin_tol = *ov_kin_tol;
        if (ov_rank_rel) cfg.rank_threshold_rel = *ov_rank_rel;
        if (ov_den_floor) cfg.den_floor_rel = *ov_den_floor;
        if (ov_surface_tol) cfg.surface_tol = *ov_surface_tol;
        if (ov_grad_tol) {
            cfg.ascent.grad_tol = *ov_grad_tol;
            cfg.experiment.ascent.grad_tol = *ov_grad_tol;
        }
        if (ov_j_tol) {
            cfg.ascent.j_tol = *ov_j_tol;
            cfg.experiment.ascent.j_tol = *ov_j_tol;
        }
        if (max_iters) cfg.ascent.max_iters = *max_iters;
        if (exp_trials) cfg.experiment.trials_per_arc = *exp_trials;
        if (exp_radius) cfg.experiment.radius = *exp_radius;

        const fs::path out(out_dir);
        {
            std::error_code ec;
            fs::create_directories(out, ec);
        }

        if (simulate->parsed()) return cli::cmd_simulate(cfg, out);
        if (corank->parsed()) return cli::cmd_corank(cfg, out, map);
        if (singular_gen->parsed())
            return cli::cmd_singular_gen(cfg, out, order, gen_seed.value_or(cfg.rng_seed),
                                         phase_orthogonal);
        if (ascend->parsed()) return cli::cmd_ascend(cfg, out, start);
        if (classify->parsed())
            return cli::cmd_classify(cfg, out, control_path, with_hessian, fd_step, force_hessian);
        if (experiment->parsed()) return cli::cmd_experiment_fig3(cfg, out);
        throw cli::CliError(cli::kConfig, "no subcommand given");
    } catch (const cli::CliError& e) {
        std::fprintf(stderr, "qcl: %s\n", e.what());
        return e.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qcl: %s\n", e.what());
        return cli::kFailure;
    }
}
