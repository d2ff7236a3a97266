#pragma once
// Run configuration: JSON schema -> plain structs, with field-path error
// messages ("config error at system.h1[0][1]: ...").

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "support.hpp"

namespace cli {

struct ControlSpec {
    std::string type = "zero";  // zero | constant | file | random
    double value = 0.0;
    std::string path;
    std::optional<std::uint64_t> rng_seed;  // random draws; falls back to the run seed
};

struct AscentCfg {
    std::int64_t max_iters = 5000;
    double step0 = 0.05;
    double backtrack = 0.5;
    double growth = 2.0;
    double step_max = 1.0;
    double grad_tol = 1e-6;
    double j_tol = 1e-6;
    double alpha_min = 1e-12;
};

// Experiment ascents default to a wider step ceiling: starts near singular
// arcs see suppressed gradients, and the stock ceiling can plateau for
// thousands of iterations before reaching high yield.
inline AscentCfg experiment_ascent_defaults() {
    AscentCfg a;
    a.max_iters = 10000;
    a.step0 = 0.2;
    a.step_max = 4.0;
    a.j_tol = 1e-4;
    return a;
}

struct ExperimentCfg {
    std::int64_t num_arcs = 2;
    std::int64_t trials_per_arc = 1;
    std::int64_t order = 2;
    double radius = 0.01;
    double success_j = 0.99;
    AscentCfg ascent = experiment_ascent_defaults();
};

struct Config {
    std::int64_t dim = 0;
    bool hermitian = true;
    std::vector<double> h0, h1;      // interleaved re/im, row-major
    std::vector<double> psi0, psif;  // interleaved re/im
    double duration = 0.0;
    std::int64_t samples = 256;
    ControlSpec control;
    double crit_tol = 1e-6;
    double kin_tol = 1e-6;
    double rank_threshold_rel = QCL_DEFAULT_RANK_THRESHOLD_REL;
    double den_floor_rel = QCL_DEFAULT_DEN_FLOOR_REL;
    double surface_tol = QCL_DEFAULT_SURFACE_TOL;
    AscentCfg ascent;
    ExperimentCfg experiment;
    std::uint64_t rng_seed = 1;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& msg) {
    throw CliError(kConfig, "config error at " + path + ": " + msg);
}

// A (node, dotted-path) pair; every accessor reports the full path on failure.
struct Cursor {
    const json* node;
    std::string path;

    Cursor field(const std::string& name) const {
        if (!node->is_object()) config_fail(path, "expected an object");
        auto it = node->find(name);
        if (it == node->end()) config_fail(path + "." + name, "missing required field");
        return {&*it, path + "." + name};
    }
    std::optional<Cursor> opt(const std::string& name) const {
        if (!node->is_object()) config_fail(path, "expected an object");
        auto it = node->find(name);
        if (it == node->end()) return std::nullopt;
        return Cursor{&*it, path + "." + name};
    }
    Cursor item(std::size_t i) const {
        return {&(*node)[i], path + "[" + std::to_string(i) + "]"};
    }
    std::size_t size() const {
        if (!node->is_array()) config_fail(path, "expected an array");
        return node->size();
    }
    double number() const {
        if (!node->is_number()) config_fail(path, "expected a number");
        return node->get<double>();
    }
    std::int64_t integer() const {
        if (!node->is_number_integer()) config_fail(path, "expected an integer");
        return node->get<std::int64_t>();
    }
    std::uint64_t uinteger() const {
        if (!node->is_number_unsigned() && !(node->is_number_integer() && node->get<std::int64_t>() >= 0))
            config_fail(path, "expected a non-negative integer");
        return node->get<std::uint64_t>();
    }
    bool boolean() const {
        if (!node->is_boolean()) config_fail(path, "expected true or false");
        return node->get<bool>();
    }
    std::string str() const {
        if (!node->is_string()) config_fail(path, "expected a string");
        return node->get<std::string>();
    }
    // complex entry as an [re, im] pair
    void complex_pair(double& re, double& im) const {
        if (!node->is_array() || node->size() != 2) config_fail(path, "expected an [re, im] pair");
        re = item(0).number();
        im = item(1).number();
    }
};

// N x N complex matrix from nested arrays of [re, im] pairs -> interleaved.
inline std::vector<double> read_matrix(const Cursor& c, std::int64_t dim) {
    if (c.size() != static_cast<std::size_t>(dim))
        config_fail(c.path, "expected " + std::to_string(dim) + " rows");
    std::vector<double> flat(static_cast<std::size_t>(2 * dim * dim));
    for (std::int64_t i = 0; i < dim; ++i) {
        Cursor row = c.item(static_cast<std::size_t>(i));
        if (row.size() != static_cast<std::size_t>(dim))
            config_fail(row.path, "expected " + std::to_string(dim) + " entries");
        for (std::int64_t j = 0; j < dim; ++j) {
            double re = 0.0, im = 0.0;
            row.item(static_cast<std::size_t>(j)).complex_pair(re, im);
            flat[static_cast<std::size_t>(2 * (i * dim + j))] = re;
            flat[static_cast<std::size_t>(2 * (i * dim + j) + 1)] = im;
        }
    }
    return flat;
}

inline std::vector<double> read_vector(const Cursor& c, std::int64_t dim) {
    if (c.size() != static_cast<std::size_t>(dim))
        config_fail(c.path, "expected " + std::to_string(dim) + " entries");
    std::vector<double> flat(static_cast<std::size_t>(2 * dim));
    for (std::int64_t i = 0; i < dim; ++i) {
        double re = 0.0, im = 0.0;
        c.item(static_cast<std::size_t>(i)).complex_pair(re, im);
        flat[static_cast<std::size_t>(2 * i)] = re;
        flat[static_cast<std::size_t>(2 * i + 1)] = im;
    }
    return flat;
}

// Hermitian (or skew-Hermitian) consistency with entry-level blame.
inline void check_symmetry(const Cursor& c, const std::vector<double>& flat, std::int64_t dim,
                           bool hermitian) {
    double scale = 1e-300;
    for (std::size_t k = 0; k + 1 < flat.size(); k += 2)
        scale = std::max({scale, std::abs(flat[k]), std::abs(flat[k + 1])});
    const double tol = 1e-12 * scale;
    const double sign = hermitian ? 1.0 : -1.0;
    for (std::int64_t i = 0; i < dim; ++i) {
        for (std::int64_t j = i; j < dim; ++j) {
            const std::size_t ij = static_cast<std::size_t>(2 * (i * dim + j));
            const std::size_t ji = static_cast<std::size_t>(2 * (j * dim + i));
            if (std::abs(flat[ij] - sign * flat[ji]) > tol ||
                std::abs(flat[ij + 1] + sign * flat[ji + 1]) > tol) {
                const std::string kind = hermitian ? "Hermitian" : "skew-Hermitian";
                config_fail(c.path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                            "matrix is not " + kind + " (conflicts with entry [" +
                                std::to_string(j) + "][" + std::to_string(i) + "])");
            }
        }
    }
}

inline void check_unit(const Cursor& c, const std::vector<double>& flat) {
    double nrm2 = 0.0;
    for (double x : flat) nrm2 += x * x;
    if (std::abs(std::sqrt(nrm2) - 1.0) > 1e-10)
        config_fail(c.path, "state must have unit norm (got " + fmt(std::sqrt(nrm2)) + ")");
}

inline void read_ascent(const Cursor& c, AscentCfg& a) {
    if (auto v = c.opt("max_iters")) a.max_iters = v->integer();
    if (auto v = c.opt("step0")) a.step0 = v->number();
    if (auto v = c.opt("backtrack")) a.backtrack = v->number();
    if (auto v = c.opt("growth")) a.growth = v->number();
    if (auto v = c.opt("step_max")) a.step_max = v->number();
    if (auto v = c.opt("grad_tol")) a.grad_tol = v->number();
    if (auto v = c.opt("j_tol")) a.j_tol = v->number();
    if (auto v = c.opt("alpha_min")) a.alpha_min = v->number();
}

}  // namespace detail

inline Config load_config(const std::string& path) {
    nlohmann::json root;
    {
        std::string text;
        try {
            text = read_file(path);
        } catch (const CliError& e) {
            // an unreadable config is a configuration error, not a runtime one
            throw CliError(kConfig, std::string("config error: ") + e.what());
        }
        root = nlohmann::json::parse(text, nullptr, false);
        if (root.is_discarded())
            throw CliError(kConfig, "config error at " + path + ": not valid JSON");
    }
    using detail::Cursor;
    Cursor top{&root, "$"};
    Config cfg;

    Cursor system = top.field("system");
    cfg.dim = system.field("dim").integer();
    if (cfg.dim < 2) detail::config_fail(system.path + ".dim", "dimension must be at least 2");
    if (auto conv = system.opt("input_convention")) {
        const std::string s = conv->str();
        if (s == "hermitian")
            cfg.hermitian = true;
        else if (s == "skew")
            cfg.hermitian = false;
        else
            detail::config_fail(conv->path, "expected \"hermitian\" or \"skew\"");
    }
    Cursor h0 = system.field("h0");
    Cursor h1 = system.field("h1");
    cfg.h0 = detail::read_matrix(h0, cfg.dim);
    cfg.h1 = detail::read_matrix(h1, cfg.dim);
    detail::check_symmetry(h0, cfg.h0, cfg.dim, cfg.hermitian);
    detail::check_symmetry(h1, cfg.h1, cfg.dim, cfg.hermitian);

    Cursor problem = top.field("problem");
    Cursor psi0 = problem.field("psi0");
    Cursor psif = problem.field("psif");
    cfg.psi0 = detail::read_vector(psi0, cfg.dim);
    cfg.psif = detail::read_vector(psif, cfg.dim);
    detail::check_unit(psi0, cfg.psi0);
    detail::check_unit(psif, cfg.psif);
    cfg.duration = problem.field("duration").number();
    if (!(cfg.duration > 0.0))
        detail::config_fail(problem.path + ".duration", "must be positive");
    if (auto m = problem.opt("samples")) {
        cfg.samples = m->integer();
        if (cfg.samples < 1) detail::config_fail(m->path, "must be at least 1");
    }

    if (auto control = top.opt("control")) {
        Cursor type = control->field("type");
        cfg.control.type = type.str();
        if (cfg.control.type == "constant") {
            cfg.control.value = control->field("value").number();
        } else if (cfg.control.type == "file") {
            cfg.control.path = control->field("path").str();
        } else if (cfg.control.type == "random") {
            if (auto s = control->opt("rng_seed")) cfg.control.rng_seed = s->uinteger();
        } else if (cfg.control.type != "zero") {
            detail::config_fail(type.path, "expected zero | constant | file | random");
        }
    }

    if (auto tol = top.opt("tolerances")) {
        if (auto v = tol->opt("crit_tol")) cfg.crit_tol = v->number();
        if (auto v = tol->opt("kin_tol")) cfg.kin_tol = v->number();
        if (auto v = tol->opt("rank_threshold_rel")) cfg.rank_threshold_rel = v->number();
        if (auto v = tol->opt("den_floor_rel")) cfg.den_floor_rel = v->number();
        if (auto v = tol->opt("surface_tol")) cfg.surface_tol = v->number();
    }

    if (auto asc = top.opt("ascent")) detail::read_ascent(*asc, cfg.ascent);

    if (auto exp = top.opt("experiment")) {
        if (auto v = exp->opt("num_arcs")) cfg.experiment.num_arcs = v->integer();
        if (auto v = exp->opt("trials_per_arc")) cfg.experiment.trials_per_arc = v->integer();
        if (auto v = exp->opt("order")) cfg.experiment.order = v->integer();
        if (auto v = exp->opt("radius")) cfg.experiment.radius = v->number();
        if (auto v = exp->opt("success_j")) cfg.experiment.success_j = v->number();
        if (auto v = exp->opt("ascent")) detail::read_ascent(*v, cfg.experiment.ascent);
        if (cfg.experiment.num_arcs < 1)
            detail::config_fail(exp->path + ".num_arcs", "must be at least 1");
        if (cfg.experiment.trials_per_arc < 1)
            detail::config_fail(exp->path + ".trials_per_arc", "must be at least 1");
    }

    if (auto s = top.opt("rng_seed")) cfg.rng_seed = s->uinteger();
    return cfg;
}

}  // namespace cli
