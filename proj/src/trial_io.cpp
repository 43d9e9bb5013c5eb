#include "peduncle/trial_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace peduncle {

namespace fs = std::filesystem;

namespace {

Json vec_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing field '" + key + "'");
  return j.at(key);
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ValidationError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(where + ": value not finite");
  return v;
}

Vec3 vec_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(where + ": expected an array of 3 numbers");
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

Json trial_to_json(const Trial& trial) {
  Json j;
  j["schema_version"] = kTrialSchemaVersion;
  j["id"] = trial.id;
  j["label"] = to_string(trial.label);
  j["spring"] = {{"k", trial.spring.k}, {"l", trial.spring.l}};
  j["grasp_point"] = vec_to_json(trial.grasp_point);
  j["ground_truth"] = trial.ground_truth ? vec_to_json(*trial.ground_truth) : Json(nullptr);
  Json samples = Json::array();
  for (const auto& s : trial.samples) {
    const auto& q = s.pose.rotation;
    samples.push_back({
        {"t", s.t},
        {"pose", {{"translation", vec_to_json(s.pose.translation)}, {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}}}},
        {"wrench", {{"force", vec_to_json(s.wrench.force)}, {"torque", vec_to_json(s.wrench.torque)}}},
    });
  }
  j["samples"] = std::move(samples);
  return j;
}

Trial trial_from_json(const Json& j, std::vector<std::string>* warnings) {
  const std::string top = "trial";
  if (!j.is_object()) throw ValidationError("trial: expected a JSON object");
  const Json& version = require(j, "schema_version", top);
  if (!version.is_number_integer() || version.get<int>() != kTrialSchemaVersion) {
    throw ValidationError("trial: unsupported schema_version " + version.dump());
  }
  Trial trial;
  const Json& id = require(j, "id", top);
  if (!id.is_string()) throw ValidationError("trial: id must be a string");
  trial.id = id.get<std::string>();
  const std::string where = "trial '" + trial.id + "'";
  const Json& label = require(j, "label", where);
  if (!label.is_string()) throw ValidationError(where + ": label must be a string");
  trial.label = label_from_string(label.get<std::string>());
  const Json& spring = require(j, "spring", where);
  trial.spring.k = number(require(spring, "k", where + " spring"), where + " spring.k");
  trial.spring.l = number(require(spring, "l", where + " spring"), where + " spring.l");
  trial.grasp_point = vec_from_json(require(j, "grasp_point", where), where + " grasp_point");
  if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
    trial.ground_truth = vec_from_json(j.at("ground_truth"), where + " ground_truth");
  }
  const Json& samples = require(j, "samples", where);
  if (!samples.is_array()) throw ValidationError(where + ": samples must be an array");
  trial.samples.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string at = where + " sample " + std::to_string(i);
    const Json& s = samples[i];
    TrialSample sample;
    sample.t = number(require(s, "t", at), at + " t");
    const Json& pose = require(s, "pose", at);
    sample.pose.translation = vec_from_json(require(pose, "translation", at), at + " translation");
    const Json& rot = require(pose, "rotation_wxyz", at);
    if (!rot.is_array() || rot.size() != 4) throw ValidationError(at + ": rotation_wxyz must have 4 numbers");
    const double w = number(rot[0], at), x = number(rot[1], at), y = number(rot[2], at), z = number(rot[3], at);
    const double norm = std::sqrt(w * w + x * x + y * y + z * z);
    if (std::abs(norm - 1.0) > 1e-3) {
      throw ValidationError(at + ": rotation quaternion norm " + std::to_string(norm) + " is not unit");
    }
    if (std::abs(norm - 1.0) > 1e-6 && warnings) {
      warnings->push_back(at + ": rotation quaternion renormalized (norm " + std::to_string(norm) + ")");
    }
    // Already-unit input is kept bit-exact so save/load round-trips are lossless.
    sample.pose.rotation = std::abs(norm - 1.0) <= 1e-12 ? UnitQuaternion::from_normalized(w, x, y, z)
                                                         : UnitQuaternion(w, x, y, z);
    const Json& wrench = require(s, "wrench", at);
    sample.wrench.force = vec_from_json(require(wrench, "force", at), at + " force");
    sample.wrench.torque = vec_from_json(require(wrench, "torque", at), at + " torque");
    sample.wrench.frame = Frame::Sensor;
    trial.samples.push_back(sample);
  }
  trial.validate();
  return trial;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

Trial load_trial(const fs::path& path, std::vector<std::string>* warnings) {
  const Json j = read_json(path);
  try {
    return trial_from_json(j, warnings);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_trial(const Trial& trial, const fs::path& path) {
  write_file_atomic(path, trial_to_json(trial).dump(1) + "\n");
}

Json sim_config_to_json(const SimConfig& c) {
  Json compliance = Json::array();
  for (int r = 0; r < 3; ++r) compliance.push_back(vec_to_json(c.grasp_compliance.row(r).transpose()));
  return {
      {"k", c.k},
      {"l", c.l},
      {"pull_distance", c.pull_distance},
      {"pull_speed", c.pull_speed},
      {"sample_rate", c.sample_rate},
      {"force_cap", c.force_cap},
      {"noise_sigma", c.noise_sigma},
      {"grasp_compliance", compliance},
      {"compliance_range", {c.compliance_min, c.compliance_max}},
      {"grasp_point", vec_to_json(c.grasp_point)},
      {"off_axis_range_deg", {c.off_axis_min_deg, c.off_axis_max_deg}},
      {"attachment_region", {{"min", vec_to_json(c.attachment_region.min)}, {"max", vec_to_json(c.attachment_region.max)}}},
      {"seed", c.seed},
  };
}

SimConfig sim_config_from_json(const Json& j) {
  const std::string where = "simulation config";
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  reject_unknown(j,
                 {"k", "l", "pull_distance", "pull_speed", "sample_rate", "force_cap", "noise_sigma", "grasp_compliance",
                  "compliance_range", "grasp_point", "off_axis_range_deg", "attachment_region", "seed"},
                 where);
  SimConfig c;
  try {
    auto scalar = [&](const char* key, double& field) {
      if (j.contains(key)) field = number(j.at(key), where + " " + key);
    };
    scalar("k", c.k);
    scalar("l", c.l);
    scalar("pull_distance", c.pull_distance);
    scalar("pull_speed", c.pull_speed);
    scalar("sample_rate", c.sample_rate);
    scalar("force_cap", c.force_cap);
    scalar("noise_sigma", c.noise_sigma);
    if (j.contains("grasp_compliance")) {
      const Json& m = j.at("grasp_compliance");
      if (!m.is_array() || m.size() != 3) throw ConfigError(where + ": grasp_compliance must be 3x3");
      for (int r = 0; r < 3; ++r) c.grasp_compliance.row(r) = vec_from_json(m[r], where + " grasp_compliance").transpose();
    }
    if (j.contains("compliance_range")) {
      const Json& r = j.at("compliance_range");
      if (!r.is_array() || r.size() != 2) throw ConfigError(where + ": compliance_range must be [min, max]");
      c.compliance_min = number(r[0], where);
      c.compliance_max = number(r[1], where);
    }
    if (j.contains("grasp_point")) c.grasp_point = vec_from_json(j.at("grasp_point"), where + " grasp_point");
    if (j.contains("off_axis_range_deg")) {
      const Json& r = j.at("off_axis_range_deg");
      if (!r.is_array() || r.size() != 2) throw ConfigError(where + ": off_axis_range_deg must be [min, max]");
      c.off_axis_min_deg = number(r[0], where);
      c.off_axis_max_deg = number(r[1], where);
    }
    if (j.contains("attachment_region")) {
      const Json& box = j.at("attachment_region");
      c.attachment_region.min = vec_from_json(require(box, "min", where), where + " attachment_region.min");
      c.attachment_region.max = vec_from_json(require(box, "max", where), where + " attachment_region.max");
    }
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError(where + ": seed must be a non-negative integer");
      c.seed = j.at("seed").get<std::uint64_t>();
    }
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

Json solver_config_to_json(const SolverConfig& c) {
  return {
      {"mse_target", c.mse_target},
      {"max_restarts", c.max_restarts},
      {"max_iterations_per_run", c.max_iterations_per_run},
      {"relative_step_tolerance", c.relative_step_tolerance},
      {"relative_cost_tolerance", c.relative_cost_tolerance},
      {"constraint_tolerance", c.constraint_tolerance},
      {"kkt_tolerance", c.kkt_tolerance},
      {"initial_offset_magnitude", c.initial_offset_magnitude ? Json(*c.initial_offset_magnitude) : Json(nullptr)},
  };
}

SolverConfig solver_config_from_json(const Json& j) {
  const std::string where = "solver config";
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  reject_unknown(j,
                 {"mse_target", "max_restarts", "max_iterations_per_run", "relative_step_tolerance",
                  "relative_cost_tolerance", "constraint_tolerance", "kkt_tolerance", "initial_offset_magnitude"},
                 where);
  SolverConfig c;
  try {
    auto scalar = [&](const char* key, double& field) {
      if (j.contains(key)) field = number(j.at(key), where + " " + key);
    };
    auto integer = [&](const char* key, int& field) {
      if (!j.contains(key)) return;
      if (!j.at(key).is_number_integer()) throw ConfigError(where + ": " + key + " must be an integer");
      field = j.at(key).get<int>();
    };
    scalar("mse_target", c.mse_target);
    integer("max_restarts", c.max_restarts);
    integer("max_iterations_per_run", c.max_iterations_per_run);
    scalar("relative_step_tolerance", c.relative_step_tolerance);
    scalar("relative_cost_tolerance", c.relative_cost_tolerance);
    scalar("constraint_tolerance", c.constraint_tolerance);
    scalar("kkt_tolerance", c.kkt_tolerance);
    if (j.contains("initial_offset_magnitude") && !j.at("initial_offset_magnitude").is_null()) {
      c.initial_offset_magnitude = number(j.at("initial_offset_magnitude"), where + " initial_offset_magnitude");
    }
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

SimConfig load_sim_config(const fs::path& path) { return sim_config_from_json(read_json(path)); }
SolverConfig load_solver_config(const fs::path& path) { return solver_config_from_json(read_json(path)); }

std::string config_digest(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_corpus(const std::vector<Trial>& trials, const Manifest& manifest_template, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

  Json entries = Json::array();
  for (const auto& trial : trials) {
    const std::string file = trial.id + ".json";
    save_trial(trial, directory / file);
    entries.push_back({{"id", trial.id}, {"label", to_string(trial.label)}, {"file", file}});
  }
  Json manifest = {
      {"schema_version", kCorpusSchemaVersion},
      {"seed", manifest_template.seed},
      {"config_digest", manifest_template.config_digest},
      {"sim_config", manifest_template.sim_config},
      {"trials", entries},
  };
  write_file_atomic(directory / kManifestName, manifest.dump(2) + "\n");
}

Corpus load_corpus(const fs::path& directory) {
  const fs::path manifest_path = directory / kManifestName;
  if (!fs::exists(manifest_path)) throw IoError("no " + std::string(kManifestName) + " in " + directory.string());
  const Json j = read_json(manifest_path);

  Corpus corpus;
  corpus.directory = directory;
  Manifest& m = corpus.manifest;
  const std::string where = manifest_path.string();
  try {
    const Json& version = require(j, "schema_version", where);
    if (!version.is_number_integer() || version.get<int>() != kCorpusSchemaVersion) {
      throw ValidationError(where + ": unsupported schema_version " + version.dump());
    }
    m.schema_version = version.get<int>();
    if (j.contains("seed") && j.at("seed").is_number_unsigned()) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config_digest") && j.at("config_digest").is_string()) {
      m.config_digest = j.at("config_digest").get<std::string>();
    }
    if (j.contains("sim_config")) m.sim_config = j.at("sim_config");
    const Json& trials = require(j, "trials", where);
    if (!trials.is_array()) throw ValidationError(where + ": trials must be an array");
    for (std::size_t i = 0; i < trials.size(); ++i) {
      const std::string at = where + " trial " + std::to_string(i);
      ManifestEntry e;
      e.id = require(trials[i], "id", at).get<std::string>();
      e.label = label_from_string(require(trials[i], "label", at).get<std::string>());
      e.file = require(trials[i], "file", at).get<std::string>();
      m.trials.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  if (m.trials.empty()) throw ValidationError(where + ": manifest lists no trials");

  for (const auto& info : m.trials) {
    CorpusEntry entry;
    entry.info = info;
    try {
      entry.trial = load_trial(directory / info.file, &entry.warnings);
    } catch (const Error& e) {
      entry.error = e.what();
    }
    corpus.entries.push_back(std::move(entry));
  }
  return corpus;
}

}  // namespace peduncle
