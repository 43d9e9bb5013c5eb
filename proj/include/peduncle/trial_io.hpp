#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peduncle/simulator.hpp"
#include "peduncle/solver.hpp"

namespace peduncle {

inline constexpr int kTrialSchemaVersion = 1;
inline constexpr int kCorpusSchemaVersion = 1;

using Json = nlohmann::json;

Json trial_to_json(const Trial& trial);

/// Validating decode. Quaternions off unit norm by more than 1e-6 are
/// renormalized (a warning is appended); past 1e-3 they are rejected.
Trial trial_from_json(const Json& j, std::vector<std::string>* warnings = nullptr);

Trial load_trial(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void save_trial(const Trial& trial, const std::filesystem::path& path);

Json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);
Json solver_config_to_json(const SolverConfig& config);
SolverConfig solver_config_from_json(const Json& j);

SimConfig load_sim_config(const std::filesystem::path& path);
SolverConfig load_solver_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
std::string config_digest(const Json& j);

struct ManifestEntry {
  std::string id;
  Label label = Label::Success;
  std::string file;  // relative to the corpus directory
};

struct Manifest {
  int schema_version = kCorpusSchemaVersion;
  std::uint64_t seed = 0;
  std::string config_digest;
  Json sim_config;  // echo of the generating configuration, null when unknown
  std::vector<ManifestEntry> trials;
};

/// A corpus member; `trial` is empty and `error` set when the file failed to load.
struct CorpusEntry {
  ManifestEntry info;
  std::optional<Trial> trial;
  std::string error;
  std::vector<std::string> warnings;
};

struct Corpus {
  std::filesystem::path directory;
  Manifest manifest;
  std::vector<CorpusEntry> entries;
};

inline constexpr const char* kManifestName = "manifest.json";

void save_corpus(const std::vector<Trial>& trials, const Manifest& manifest_template,
                 const std::filesystem::path& directory);

/// Throws IoError when the manifest is unreadable and ValidationError when it
/// lists no trials. Individual unreadable trial files are recorded per entry.
Corpus load_corpus(const std::filesystem::path& directory);

/// Writes through a temporary sibling and renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace peduncle
