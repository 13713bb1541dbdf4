#pragma once

#include "magloop/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace magloop {

/// Bumped whenever a field of the orbit or report JSON is renamed or removed.
inline constexpr int kSchemaVersion = 1;

/// Malformed artifact file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Samples as stored on disk. Reading keeps the parsed values verbatim, so
/// write -> read -> write reproduces the file byte for byte.
struct OrbitRecord {
    std::vector<double> t;
    PointMatrix points;

    static OrbitRecord from_solution(const OrbitSolution& sol);
    static OrbitRecord from_loop(const DiscreteLoop& loop, double period = 1.0);
    DiscreteLoop loop() const;
    double period() const;  ///< inferred from the uniform time grid
};

std::string orbit_csv(const OrbitRecord& rec);
OrbitRecord parse_orbit_csv(const std::string& text);
OrbitRecord read_orbit_csv(const std::filesystem::path& path);

nlohmann::ordered_json field_json(const SphericalField& f);
nlohmann::ordered_json pair_json(const FieldPair& pair);
nlohmann::ordered_json report_json(const VerificationReport& rep);
nlohmann::ordered_json orbit_json(const OrbitSolution& sol);

/// Two-space indented JSON followed by a newline.
std::string dump_json(const nlohmann::ordered_json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

/// Collects the files of one run and writes them with a checksummed MANIFEST.
///
/// Every artifact is written as soon as it is added, and the MANIFEST is rewritten
/// each time, so an interrupted run still leaves a MANIFEST describing what exists.
class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, std::string command);

    void add(const std::string& name, const std::string& content);
    /// Rewrites the MANIFEST with its final status line.
    void finish(bool complete, const std::string& status);

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    struct Entry {
        std::string name;
        std::uint64_t size;
        std::uint64_t checksum;
    };
    void write_manifest(const std::string& state, const std::string& status) const;

    std::filesystem::path dir_;
    std::string command_;
    std::vector<Entry> entries_;
};

/// Writes bytes exactly, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace magloop
