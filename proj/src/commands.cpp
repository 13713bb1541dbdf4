#include "magloop/commands.hpp"

#include "magloop/io.hpp"

#include <atomic>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace magloop {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

/// Tees progress lines to the caller's stream and to run.log.
class RunLog {
public:
    RunLog(std::ostream& out, ArtifactWriter& writer) : out_(out), writer_(writer) {}

    void line(const std::string& s) {
        out_ << s << "\n";
        text_ += s + "\n";
    }
    void flush() { writer_.add("run.log", text_); }

private:
    std::ostream& out_;
    ArtifactWriter& writer_;
    std::string text_;
};

void write_solution(ArtifactWriter& out, const std::string& stem, const OrbitSolution& sol) {
    out.add(stem + ".csv", orbit_csv(OrbitRecord::from_solution(sol)));
    out.add(stem + ".json", dump_json(orbit_json(sol)));
}

void write_report(ArtifactWriter& out, const std::string& name, const VerificationReport& rep) {
    out.add(name, dump_json(report_json(rep)));
}

void log_report(RunLog& log, const std::string& what, const VerificationReport& rep) {
    std::ostringstream s;
    s << what << ": " << (rep.passed ? "passed" : "FAILED") << ", length " << rep.length << " (bound "
      << rep.length_upper_bound << "), curvature mismatch " << rep.curvature_mismatch << ", "
      << to_string(rep.alexandrov.kind);
    if (!rep.alexandrov.reason.empty()) s << " (" << rep.alexandrov.reason << ")";
    log.line(s.str());
    for (const auto& f : rep.failures) log.line("  failure: " + f);
}

SolverOptions inner_solver(const RunConfig& cfg) {
    SolverOptions s = cfg.search.solver;
    s.verify = false;
    return s;
}

DiscreteLoop load_loop(const std::filesystem::path& path, int N) {
    const DiscreteLoop loop = read_orbit_csv(path).loop();
    return loop.size() == N ? loop : resample(loop, N);
}

std::string continuation_csv(const ContinuationPath& path) {
    std::string out = "t,dt,iterations,residual,length\n";
    std::size_t sample = 1;
    for (const auto& st : path.steps) {
        if (!st.accepted) continue;
        const double length = sample < path.samples.size() ? path.samples[sample++].second.speed : 0.0;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g\n", st.t, st.dt, st.iterations, st.residual,
                      length);
        out += buf;
    }
    return out;
}

void log_steps(RunLog& log, const ContinuationPath& path) {
    if (path.refinement) {
        std::ostringstream s;
        s << "  seed refined: defect " << path.refinement->defect << " after " << path.refinement->iterations
          << " iterations";
        log.line(s.str());
    }
    for (const auto& st : path.steps) {
        std::ostringstream s;
        s << (st.accepted ? "  accept" : "  reject") << " t = " << st.t << " dt = " << st.dt;
        if (st.accepted) s << " iterations " << st.iterations << " residual " << st.residual;
        if (!st.note.empty()) s << " (" << st.note << ")";
        log.line(s.str());
    }
}

struct Outcome {
    int code = kExitSuccess;
    std::string status = "ok";
};

Outcome certification(bool passed) {
    return passed ? Outcome{} : Outcome{kExitCertification, "certification failed"};
}

Outcome cmd_solve(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    const int N = cfg.search.solver.N;
    DiscreteLoop guess;
    if (!cfg.solve.guess.empty()) {
        guess = load_loop(cfg.solve.guess, N);
        log.line("guess: " + cfg.solve.guess.string());
    } else {
        const double rho = cfg.solve.radius > 0.0 ? cfg.solve.radius : std::atan2(1.0, cfg.pair.k_inf);
        guess = circle_loop(cfg.solve.center, rho, N);
        log.line("guess: circle of radius " + fmt("%.17g", rho));
    }
    OrbitSolution sol = newton_solve(guess, cfg.pair, inner_solver(cfg));
    log.line("newton converged in " + std::to_string(sol.newton_iters) + " iterations, residual " +
             fmt("%.3e", sol.residual_norm));
    sol.report = verify_orbit(sol, cfg.verify);
    write_solution(out, "orbit", sol);
    write_report(out, "report.json", sol.report);
    log_report(log, "report", sol.report);
    return certification(sol.report.passed);
}

Outcome cmd_continue(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    const auto seeds = seed_circles(cfg.pair, cfg.search.seed_count, cfg.search.solver.N);
    const ContinuationPath path =
        continue_path(cfg.pair, seeds.at(cfg.cont.seed_index), inner_solver(cfg), cfg.search.continuation);
    log_steps(log, path);
    out.add("continuation.csv", continuation_csv(path));
    if (!path.reached()) {
        log.line("blocked at t = " + fmt("%.17g", path.blocked_at) + ": " + path.reason);
        write_solution(out, "orbit_partial", path.endpoint());
        return {kExitBlocked, "blocked at t = " + fmt("%.17g", path.blocked_at) + " (" + path.reason + ")"};
    }
    log.line("reached t = 1 after " + std::to_string(path.samples.size() - 1) + " accepted steps");
    OrbitSolution sol = path.endpoint();
    sol.report = verify_orbit(sol, cfg.verify);
    write_solution(out, "orbit", sol);
    write_report(out, "report.json", sol.report);
    log_report(log, "report", sol.report);
    return certification(sol.report.passed);
}

Outcome cmd_verify(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    if (cfg.check.orbit.empty()) throw ConfigError({"check.orbit: required by the verify command"});
    const OrbitRecord rec = read_orbit_csv(cfg.check.orbit);
    OrbitSolution sol;
    sol.loop = rec.loop();
    sol.pair = cfg.pair;
    if (cfg.check.energy > 0.0) {
        sol.energy = cfg.check.energy;
        sol.period = rec.period();
    }
    sol.residual_norm = solution_residual(sol);
    const VerificationReport rep = verify_orbit(sol, cfg.verify);
    write_report(out, "report.json", rep);
    log_report(log, cfg.check.orbit.filename().string(), rep);
    return certification(rep.passed);
}

Outcome cmd_find_two(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    const SearchResult res = search_orbits(cfg.pair, cfg.search);
    for (const auto& d : res.diagnostics) log.line(d);
    bool all_passed = true;
    double min_length = std::numeric_limits<double>::infinity();
    auto summary = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < res.orbits.size(); ++i) {
        OrbitSolution sol = res.orbits[i];
        sol.report = verify_orbit(sol, cfg.verify);
        const std::string stem = "orbit_" + std::to_string(i);
        write_solution(out, stem, sol);
        write_report(out, "report_" + std::to_string(i) + ".json", sol.report);
        log_report(log, stem, sol.report);
        all_passed = all_passed && sol.report.passed && sol.report.alexandrov.certified();
        min_length = std::min(min_length, sol.report.length);
        nlohmann::ordered_json distances = nlohmann::ordered_json::array();
        for (const auto& other : res.orbits) distances.push_back(shift_distance(sol.loop, other.loop).distance);
        summary.push_back({{"orbit", stem},
                           {"length", sol.report.length},
                           {"passed", sol.report.passed},
                           {"alexandrov", to_string(sol.report.alexandrov.kind)},
                           {"shift_distances", distances}});
    }
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["distinct_orbits"] = res.orbits.size();
    j["min_length"] = res.orbits.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(min_length);
    j["length_upper_bound"] = kTwoPi / cfg.pair.k_inf;
    j["orbits"] = summary;
    out.add("summary.json", dump_json(j));

    log.line("distinct certified orbits: " + std::to_string(res.orbits.size()));
    if (res.orbits.size() >= 2 && all_passed) return {};
    bool any_reached = false;
    for (const auto& p : res.paths) any_reached = any_reached || p.reached();
    if (!any_reached) return {kExitBlocked, "every continuation path blocked"};
    return {kExitCertification, "fewer than two certified orbits"};
}

Outcome cmd_sweep(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    if (cfg.sweep.energies.empty()) throw ConfigError({"sweep.energies: required by the sweep command"});
    const auto& energies = cfg.sweep.energies;
    const int n = static_cast<int>(energies.size());
    struct Job {
        ContinuationPath path;
        OrbitSolution orbit;
        std::string error;
    };
    std::vector<Job> jobs(n);
    const SolverOptions solver = inner_solver(cfg);

    // the prescribed problem for k / c rescales to the magnetic orbit on E_c
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            const double c = energies[i];
            const FieldPair scaled{cfg.pair.phi, cfg.pair.k * (1.0 / c), cfg.pair.k_inf / c};
            try {
                const auto seeds = seed_circles(scaled, cfg.search.seed_count, solver.N);
                jobs[i].path = continue_path(scaled, seeds.at(cfg.sweep.seed_index), solver, cfg.search.continuation);
                if (jobs[i].path.reached()) {
                    jobs[i].orbit = rescale_to_energy(jobs[i].path.endpoint(), c);
                    jobs[i].orbit.report = verify_orbit(jobs[i].orbit, cfg.verify);
                }
            } catch (const Error& e) {
                jobs[i].error = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min(n, cfg.search.threads > 0 ? cfg.search.threads : n));
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::string table = "energy,period,length,residual,passed,status\n";
    bool blocked = false, failed = false;
    for (int i = 0; i < n; ++i) {
        const Job& job = jobs[i];
        const std::string label = "energy " + fmt("%.17g", energies[i]);
        char buf[200];
        if (!job.error.empty() || !job.path.reached()) {
            const std::string why = job.error.empty() ? job.path.reason : job.error;
            log.line(label + ": blocked (" + why + ")");
            std::snprintf(buf, sizeof buf, "%.17g,,,,false,blocked\n", energies[i]);
            table += buf;
            blocked = true;
            continue;
        }
        const std::string stem = "orbit_e" + std::to_string(i);
        write_solution(out, stem, job.orbit);
        write_report(out, "report_e" + std::to_string(i) + ".json", job.orbit.report);
        log_report(log, label, job.orbit.report);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,reached\n", energies[i], job.orbit.period,
                      job.orbit.report.length, job.orbit.residual_norm, job.orbit.report.passed ? "true" : "false");
        table += buf;
        failed = failed || !job.orbit.report.passed;
    }
    out.add("sweep.csv", table);
    if (blocked) return {kExitBlocked, "some energy levels blocked"};
    return certification(!failed);
}

Outcome cmd_plot(const RunConfig& cfg, ArtifactWriter& out, RunLog& log) {
    if (cfg.plot.orbit.empty()) throw ConfigError({"plot.orbit: required by the plot command"});
    const DiscreteLoop loop = read_orbit_csv(cfg.plot.orbit).loop();
    out.add("orbit.svg", orbit_svg(loop, cfg.seed, cfg.plot.size));
    log.line("plotted " + cfg.plot.orbit.filename().string());
    return {};
}

const std::vector<std::pair<std::string, std::function<Outcome(const RunConfig&, ArtifactWriter&, RunLog&)>>>&
table() {
    static const std::vector<std::pair<std::string, std::function<Outcome(const RunConfig&, ArtifactWriter&, RunLog&)>>>
        t = {{"solve", cmd_solve},       {"continue", cmd_continue}, {"verify", cmd_verify},
             {"find-two", cmd_find_two}, {"sweep", cmd_sweep},       {"plot", cmd_plot}};
    return t;
}

// ---------------------------------------------------------------------------
// SVG

struct Canvas {
    std::string body;
    void polyline(const std::vector<Vec2d>& pts, bool closed, const char* style) {
        if (pts.size() < 2) return;
        body += closed ? "<polygon" : "<polyline";
        body += " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) body += ' ';
            body += fmt("%.2f", pts[i].x()) + "," + fmt("%.2f", pts[i].y());
        }
        body += "\" ";
        body += style;
        body += "/>\n";
    }
    void text(double x, double y, const std::string& s, const char* extra = "") {
        body += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", y) + "\" font-family=\"sans-serif\" " +
                "font-size=\"13\"" + extra + ">" + s + "</text>\n";
    }
};

}  // namespace

std::string orbit_svg(const DiscreteLoop& loop, std::uint64_t seed, int size) {
    const DiscreteLoop fine = loop.size() >= 512 ? loop : resample(loop, 512);
    const int n = fine.size();
    const double S = size, R = 0.42 * S, margin = 0.08 * S;
    Canvas c;

    // orthographic panel, looking at the loop's mean direction
    Vec3d view = fine.points().colwise().mean().transpose();
    view = view.norm() > 1e-6 ? view.normalized() : Vec3d::UnitZ();
    const auto [e1, e2] = chart_frame(view);
    const Vec2d o(0.5 * S, 0.5 * S);
    c.body += "<circle cx=\"" + fmt("%.2f", o.x()) + "\" cy=\"" + fmt("%.2f", o.y()) + "\" r=\"" + fmt("%.2f", R) +
              "\" fill=\"#f4f6fa\" stroke=\"#888\"/>\n";
    std::vector<Vec2d> run;
    bool front = fine.point(0).dot(view) >= 0.0;
    auto emit = [&] {
        c.polyline(run, false,
                   front ? "fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\""
                         : "fill=\"none\" stroke=\"#c0392b\" stroke-opacity=\"0.35\" stroke-dasharray=\"4 3\"");
    };
    for (int i = 0; i <= n; ++i) {
        const Vec3d p = fine.point(i);
        const Vec2d q(o.x() + R * p.dot(e1), o.y() - R * p.dot(e2));
        const bool f = p.dot(view) >= 0.0;
        if (f != front && !run.empty()) {
            run.push_back(q);
            emit();
            run.clear();
            front = f;
        }
        run.push_back(q);
    }
    emit();
    c.text(margin, S - 0.5 * margin,
           "orthographic, view (" + fmt("%.3f", view.x()) + ", " + fmt("%.3f", view.y()) + ", " + fmt("%.3f", view.z()) +
               ")");

    // stereographic panel
    const SpherePoint<double> pole = choose_pole(loop, seed);
    const int index = rotation_index(loop, pole).index;
    std::vector<Vec2d> plane(n);
    Vec2d lo(1e300, 1e300), hi(-1e300, -1e300);
    for (int i = 0; i < n; ++i) {
        plane[i] = stereographic(SpherePoint<double>(fine.point(i)), pole);
        lo = lo.cwiseMin(plane[i]);
        hi = hi.cwiseMax(plane[i]);
    }
    const double span = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
    const double scale = (S - 2 * margin) / span;
    const Vec2d mid = 0.5 * (lo + hi);
    std::vector<Vec2d> pix(n);
    for (int i = 0; i < n; ++i)
        pix[i] = Vec2d(S + 0.5 * S + scale * (plane[i].x() - mid.x()), 0.5 * S - scale * (plane[i].y() - mid.y()));
    c.polyline(pix, true, "fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\"");
    c.body += "<circle cx=\"" + fmt("%.2f", pix[0].x()) + "\" cy=\"" + fmt("%.2f", pix[0].y()) +
              "\" r=\"4\" fill=\"#1f5fa8\"/>\n";
    c.text(S + margin, 0.7 * margin, "stereographic, rotation index " + std::to_string(index), " font-weight=\"bold\"");
    c.text(S + margin, S - 0.5 * margin,
           "pole (" + fmt("%.3f", pole.vec().x()) + ", " + fmt("%.3f", pole.vec().y()) + ", " +
               fmt("%.3f", pole.vec().z()) + ")");

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(2 * size) + "\" height=\"" +
           std::to_string(size) + "\" viewBox=\"0 0 " + std::to_string(2 * size) + " " + std::to_string(size) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + std::to_string(size) + "\" y1=\"0\" x2=\"" + std::to_string(size) + "\" y2=\"" +
           std::to_string(size) + "\" stroke=\"#ccc\"/>\n";
    svg += c.body;
    svg += "</svg>\n";
    return svg;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : table()) v.push_back(name);
        return v;
    }();
    return names;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log_stream) {
    const auto& cmds = table();
    const auto it = std::find_if(cmds.begin(), cmds.end(), [&](const auto& e) { return e.first == command; });
    if (it == cmds.end()) {
        log_stream << "unknown command '" << command << "'\n";
        return kExitConfig;
    }

    ArtifactWriter out(cfg.output, command);
    RunLog log(log_stream, out);
    Outcome result;
    bool complete = false;
    auto abort = [&](int code, const std::string& what) {
        log.line("error: " + what);
        result = {code, what};
    };
    try {
        result = it->second(cfg, out, log);
        complete = result.code != kExitBlocked;
    } catch (const ConfigError& e) {
        abort(kExitConfig, e.what());
    } catch (const NonConvergence& e) {
        abort(kExitNonConvergence, e.what());
    } catch (const CollapseError& e) {
        abort(command == "continue" ? kExitBlocked : kExitNonConvergence, e.what());
    } catch (const LinearSolveError& e) {
        abort(kExitNonConvergence, e.what());
    } catch (const DegenerateCurve& e) {
        abort(kExitNonConvergence, e.what());
    } catch (const SectionDegeneracy& e) {
        abort(kExitNonConvergence, e.what());
    } catch (const ChartError& e) {
        abort(kExitCertification, e.what());
    } catch (const SearchFailure& e) {
        abort(kExitCertification, e.what());
    } catch (const std::exception& e) {
        abort(kExitFailure, e.what());
    }
    log.line("exit " + std::to_string(result.code) + " (" + result.status + ")");
    try {
        log.flush();
        out.finish(complete, result.status);
    } catch (const std::exception& e) {
        log_stream << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return result.code;
}

}  // namespace magloop
