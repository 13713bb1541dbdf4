#include "magloop/config.hpp"

#include "magloop/io.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace magloop {

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  " + s;
    return out;
}

std::string where(const YAML::Node& n) {
    const auto m = n.Mark();
    if (m.is_null()) return "";
    return " (line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ")";
}

class Reader {
public:
    std::vector<std::string> errors;

    void error(const std::string& key, const std::string& msg, const YAML::Node& n = {}) {
        errors.push_back(key + ": " + msg + (n.IsDefined() ? where(n) : ""));
    }

    /// Visits the keys of a mapping, rejecting the ones not listed.
    void section(const YAML::Node& node, const std::string& prefix,
                 const std::map<std::string, std::function<void(const YAML::Node&, const std::string&)>>& handlers) {
        if (!node.IsMap()) {
            error(prefix.empty() ? "document" : prefix, "expected a mapping", node);
            return;
        }
        for (const auto& kv : node) {
            const std::string key = kv.first.as<std::string>();
            const std::string path = prefix.empty() ? key : prefix + "." + key;
            const auto it = handlers.find(key);
            if (it == handlers.end()) {
                error(path, "unknown key", kv.first);
                continue;
            }
            it->second(kv.second, path);
        }
    }

    template <typename T>
    bool scalar(const YAML::Node& n, const std::string& key, T& out) {
        if (!n.IsScalar()) {
            error(key, "expected a scalar", n);
            return false;
        }
        try {
            out = n.as<T>();
            return true;
        } catch (const YAML::Exception&) {
            error(key, "cannot convert '" + n.Scalar() + "'", n);
            return false;
        }
    }

    auto number(double& out, std::function<bool(double)> ok = {}, const char* requirement = "") {
        return [this, &out, ok, requirement](const YAML::Node& n, const std::string& key) {
            double v = 0.0;
            if (!scalar(n, key, v)) return;
            if (!std::isfinite(v) || (ok && !ok(v))) {
                error(key, std::string("must be ") + (ok ? requirement : "finite"), n);
                return;
            }
            out = v;
        };
    }

    auto integer(int& out, int lo, const char* requirement) {
        return [this, &out, lo, requirement](const YAML::Node& n, const std::string& key) {
            int v = 0;
            if (!scalar(n, key, v)) return;
            if (v < lo) {
                error(key, std::string("must be ") + requirement, n);
                return;
            }
            out = v;
        };
    }

    auto flag(bool& out) {
        return [this, &out](const YAML::Node& n, const std::string& key) { scalar(n, key, out); };
    }

    auto path(std::filesystem::path& out, const std::filesystem::path& base) {
        return [this, &out, base](const YAML::Node& n, const std::string& key) {
            std::string s;
            if (!scalar(n, key, s)) return;
            const std::filesystem::path p(s);
            out = p.is_absolute() || base.empty() ? p : base / p;
        };
    }

    /// A constant, or a list of [degree, order, coefficient] triples.
    std::optional<SphericalField> field(const YAML::Node& n, const std::string& key) {
        if (n.IsNull()) return SphericalField();
        if (n.IsScalar()) {
            double c = 0.0;
            if (!scalar(n, key, c)) return std::nullopt;
            return SphericalField::constant(c);
        }
        if (!n.IsSequence()) {
            error(key, "expected a constant or a list of [l, m, coeff] triples", n);
            return std::nullopt;
        }
        std::vector<HarmonicTerm> terms;
        bool ok = true;
        for (std::size_t i = 0; i < n.size(); ++i) {
            const YAML::Node t = n[i];
            const std::string tk = key + "[" + std::to_string(i) + "]";
            HarmonicTerm term;
            if (!t.IsSequence() || t.size() != 3) {
                error(tk, "expected [l, m, coeff]", t);
                ok = false;
                continue;
            }
            if (!scalar(t[0], tk + ".l", term.degree) || !scalar(t[1], tk + ".m", term.order) ||
                !scalar(t[2], tk + ".coeff", term.coeff)) {
                ok = false;
                continue;
            }
            if (term.degree < 0 || std::abs(term.order) > term.degree) {
                error(tk, "needs l >= 0 and |m| <= l", t);
                ok = false;
                continue;
            }
            if (!std::isfinite(term.coeff)) {
                error(tk, "coefficient must be finite", t);
                ok = false;
                continue;
            }
            terms.push_back(term);
        }
        if (!ok) return std::nullopt;
        return SphericalField(std::move(terms));
    }
};

const auto positive = [](double v) { return v > 0.0; };
const auto nonnegative = [](double v) { return v >= 0.0; };

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(join(violations)), violations_(std::move(violations)) {}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({"syntax error at line " + std::to_string(e.mark.line + 1) + ", column " +
                           std::to_string(e.mark.column + 1) + ": " + e.msg});
    }

    RunConfig cfg;
    Reader r;
    std::optional<SphericalField> phi = SphericalField(), k;
    bool k_given = false;
    auto& solver = cfg.search.solver;
    auto& cont = cfg.search.continuation;
    auto& tol = cfg.verify.tol;
    int seed = -1;

    if (root.IsNull()) {
        r.error("document", "empty configuration");
    } else {
        r.section(root, "", {
            {"phi", [&](const YAML::Node& n, const std::string& key) { phi = r.field(n, key); }},
            {"k", [&](const YAML::Node& n, const std::string& key) {
                 k_given = true;
                 k = r.field(n, key);
             }},
            {"N", r.integer(solver.N, 16, "at least 16")},
            {"seed", r.integer(seed, 0, "nonnegative")},
            {"output", r.path(cfg.output, base_dir)},
            {"solver", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"newton_tol", r.number(solver.newton_tol, positive, "positive")},
                     {"max_iters", r.integer(solver.max_iters, 1, "at least 1")},
                     {"damping", r.number(solver.damping, [](double v) { return v > 0 && v < 1; }, "in (0, 1)")},
                     {"svd_cutoff", r.number(solver.svd_cutoff, nonnegative, "nonnegative")},
                 });
             }},
            {"continuation", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"t_start", r.number(cont.t_start, [](double v) { return v >= 0 && v < 1; }, "in [0, 1)")},
                     {"dt_initial", r.number(cont.dt_initial, positive, "positive")},
                     {"dt_min", r.number(cont.dt_min, positive, "positive")},
                     {"dt_max", r.number(cont.dt_max, positive, "positive")},
                     {"grow", r.number(cont.grow, [](double v) { return v >= 1; }, "at least 1")},
                     {"easy_iters", r.integer(cont.easy_iters, 0, "nonnegative")},
                     {"max_attempts", r.integer(cont.max_attempts, 1, "at least 1")},
                     {"continuity_factor", r.number(cont.continuity_factor, positive, "positive")},
                     {"refine_seed", r.flag(cont.refine_seed)},
                 });
             }},
            {"search", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"seeds", r.integer(cfg.search.seed_count, 1, "at least 1")},
                     {"threads", r.integer(cfg.search.threads, 0, "nonnegative")},
                 });
             }},
            {"verify", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"grid_rows", r.integer(cfg.verify.grid_rows, 4, "at least 4")},
                     {"subrows", r.integer(cfg.verify.subrows, 1, "at least 1")},
                     {"polyline_points", r.integer(cfg.verify.polyline_points, 16, "at least 16")},
                     {"curvature", r.number(tol.curvature, positive, "positive")},
                     {"speed_variation", r.number(tol.speed_variation, positive, "positive")},
                     {"length", r.number(tol.length, nonnegative, "nonnegative")},
                     {"gauss_bonnet", r.number(tol.gauss_bonnet, positive, "positive")},
                     {"isoperimetric", r.number(tol.isoperimetric, nonnegative, "nonnegative")},
                 });
             }},
            {"solve", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"guess", r.path(cfg.solve.guess, base_dir)},
                     {"center", [&](const YAML::Node& c, const std::string& ck) {
                          if (!c.IsSequence() || c.size() != 3) {
                              r.error(ck, "expected [x, y, z]", c);
                              return;
                          }
                          double v[3];
                          for (int i = 0; i < 3; ++i)
                              if (!r.scalar(c[i], ck + "[" + std::to_string(i) + "]", v[i])) return;
                          const Vec3d p(v[0], v[1], v[2]);
                          if (!(p.norm() > 0.0) || !p.allFinite()) {
                              r.error(ck, "must be a nonzero finite vector", c);
                              return;
                          }
                          cfg.solve.center = p.normalized();
                      }},
                     {"radius", r.number(cfg.solve.radius, [](double v) { return v > 0 && v < M_PI; }, "in (0, pi)")},
                 });
             }},
            {"continue", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {{"seed_index", r.integer(cfg.cont.seed_index, 0, "nonnegative")}});
             }},
            {"check", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"orbit", r.path(cfg.check.orbit, base_dir)},
                     {"energy", r.number(cfg.check.energy, nonnegative, "nonnegative")},
                 });
             }},
            {"sweep", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"energies", [&](const YAML::Node& e, const std::string& ek) {
                          if (!e.IsSequence()) {
                              r.error(ek, "expected a list of energies", e);
                              return;
                          }
                          for (std::size_t i = 0; i < e.size(); ++i) {
                              double c = 0.0;
                              const std::string ik = ek + "[" + std::to_string(i) + "]";
                              if (!r.scalar(e[i], ik, c)) continue;
                              if (!(c > 0.0) || !std::isfinite(c)) r.error(ik, "energy must be positive", e[i]);
                              else cfg.sweep.energies.push_back(c);
                          }
                      }},
                     {"seed_index", r.integer(cfg.sweep.seed_index, 0, "nonnegative")},
                 });
             }},
            {"plot", [&](const YAML::Node& n, const std::string& key) {
                 r.section(n, key, {
                     {"orbit", r.path(cfg.plot.orbit, base_dir)},
                     {"size", r.integer(cfg.plot.size, 64, "at least 64")},
                 });
             }},
        });
    }

    if (solver.N % 2 != 0) r.error("N", "must be even (got " + std::to_string(solver.N) + ")");
    if (cont.dt_min > cont.dt_max) r.error("continuation", "dt_min exceeds dt_max");
    if (cont.dt_initial < cont.dt_min || cont.dt_initial > cont.dt_max)
        r.error("continuation.dt_initial", "must lie in [dt_min, dt_max]");
    if (cfg.search.seed_count > 0) {
        if (cfg.cont.seed_index >= cfg.search.seed_count)
            r.error("continue.seed_index", "must be below search.seeds");
        if (cfg.sweep.seed_index >= cfg.search.seed_count) r.error("sweep.seed_index", "must be below search.seeds");
    }
    if (!k_given) r.error("k", "missing curvature prescription");
    if (k) {
        try {
            cfg.pair = FieldPair::certified(phi.value_or(SphericalField()), *k);
        } catch (const DomainError& e) {
            r.error("k", e.what());
        }
    }
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    solver.seed = cfg.seed;
    cfg.verify.seed = cfg.seed;

    if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError({e.what()});
    }
    return parse_config(text, path.parent_path());
}

}  // namespace magloop
