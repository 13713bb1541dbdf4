#include "magloop/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace magloop {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, int line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw FormatError("line " + std::to_string(line) + ": cannot parse number '" + s + "'");
    return v;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

OrbitRecord OrbitRecord::from_loop(const DiscreteLoop& loop, double period) {
    OrbitRecord rec;
    const int N = loop.size();
    rec.t.resize(N);
    for (int i = 0; i < N; ++i) rec.t[i] = period * i / N;
    rec.points = loop.points();
    return rec;
}

OrbitRecord OrbitRecord::from_solution(const OrbitSolution& sol) { return from_loop(sol.loop, sol.period); }

DiscreteLoop OrbitRecord::loop() const { return DiscreteLoop(points); }

double OrbitRecord::period() const {
    const int N = static_cast<int>(t.size());
    if (N < 2) throw FormatError("orbit has fewer than two samples");
    return (t.back() - t.front()) * N / (N - 1);
}

std::string orbit_csv(const OrbitRecord& rec) {
    std::string out = "t,x,y,z\n";
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        out += g17(rec.t[i]);
        for (int c = 0; c < 3; ++c) out += "," + g17(rec.points(i, c));
        out += "\n";
    }
    return out;
}

OrbitRecord parse_orbit_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "t,x,y,z") throw FormatError("line 1: expected header 't,x,y,z'");
    std::vector<std::array<double, 4>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<double, 4> row{};
        std::size_t start = 0;
        for (int c = 0; c < 4; ++c) {
            const std::size_t end = c < 3 ? line.find(',', start) : line.size();
            if (end == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": expected 4 columns");
            row[c] = parse_double(line.substr(start, end - start), lineno);
            start = end + 1;
        }
        if (start <= line.size()) throw FormatError("line " + std::to_string(lineno) + ": expected 4 columns");
        rows.push_back(row);
    }
    OrbitRecord rec;
    rec.t.resize(rows.size());
    rec.points.resize(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rec.t[i] = rows[i][0];
        for (int c = 0; c < 3; ++c) rec.points(i, c) = rows[i][c + 1];
    }
    return rec;
}

OrbitRecord read_orbit_csv(const std::filesystem::path& path) { return parse_orbit_csv(read_file(path)); }

nlohmann::ordered_json field_json(const SphericalField& f) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& t : f.terms()) arr.push_back({t.degree, t.order, t.coeff});
    return arr;
}

nlohmann::ordered_json pair_json(const FieldPair& pair) {
    nlohmann::ordered_json j;
    j["phi"] = field_json(pair.phi);
    j["k"] = field_json(pair.k);
    j["k_inf"] = pair.k_inf;
    return j;
}

nlohmann::ordered_json report_json(const VerificationReport& rep) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["passed"] = rep.passed;
    j["residual_norm"] = rep.residual_norm;
    j["speed_variation"] = rep.speed_variation;
    j["curvature_mismatch"] = rep.curvature_mismatch;
    j["length"] = rep.length;
    j["length_upper_bound"] = rep.length_upper_bound;
    j["curvature_nonnegative"] = rep.curvature_nonnegative;
    j["simple"] = rep.simple;
    j["gauss_bonnet_residual"] = optional_json(rep.gauss_bonnet_residual);
    j["isoperimetric_slack"] = optional_json(rep.isoperimetric_slack);
    j["rotation_index"] = rep.rotation_idx;
    j["isotropy"] = rep.isotropy;
    j["isotropy_tolerance"] = rep.isotropy_tolerance;
    j["alexandrov"] = {{"class", to_string(rep.alexandrov.kind)}, {"reason", rep.alexandrov.reason}};
    j["failures"] = rep.failures;
    return j;
}

nlohmann::ordered_json orbit_json(const OrbitSolution& sol) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["form"] = sol.magnetic() ? "magnetic" : "prescribed";
    j["N"] = sol.loop.size();
    j["period"] = sol.period;
    j["energy"] = sol.energy;
    j["speed"] = sol.speed;
    j["residual_norm"] = sol.residual_norm;
    j["newton_iters"] = sol.newton_iters;
    j["pair"] = pair_json(sol.pair);
    auto pts = nlohmann::ordered_json::array();
    for (int i = 0; i < sol.loop.size(); ++i) {
        const Vec3d p = sol.loop.point(i);
        pts.push_back({p.x(), p.y(), p.z()});
    }
    j["points"] = std::move(pts);
    return j;
}

std::string dump_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir, std::string command)
    : dir_(std::move(dir)), command_(std::move(command)) {
    std::filesystem::create_directories(dir_);
    write_manifest("incomplete", "running");
}

void ArtifactWriter::add(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    Entry e{name, content.size(), fnv1a(content)};
    bool replaced = false;
    for (auto& old : entries_)
        if (old.name == name) {
            old = e;
            replaced = true;
        }
    if (!replaced) entries_.push_back(e);
    write_manifest("incomplete", "running");
}

void ArtifactWriter::finish(bool complete, const std::string& status) {
    write_manifest(complete ? "complete" : "incomplete", status);
}

void ArtifactWriter::write_manifest(const std::string& state, const std::string& status) const {
    std::string out = "# magloop manifest\n";
    out += "command " + command_ + "\n";
    out += "state " + state + "\n";
    out += "status " + status + "\n";
    out += "checksum fnv1a64\n";
    for (const auto& e : entries_) out += hex64(e.checksum) + " " + std::to_string(e.size) + " " + e.name + "\n";
    write_file(dir_ / "MANIFEST", out);
}

}  // namespace magloop
