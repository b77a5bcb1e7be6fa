#include "pipeline/stamp.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "arable/error.hpp"

namespace arable::pipeline {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 20);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a({buf.data(), static_cast<std::size_t>(f.gcount())}, h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"synth",     "features", "train", "eval",
                                                 "attribute", "project",  "report"};
  return names;
}

std::vector<std::string> upstream_of(const RunConfig& c, const std::string& stage) {
  if (stage == "synth") return {};
  if (stage == "features") return c.features.inputs.empty() ? std::vector<std::string>{"synth"}
                                                            : std::vector<std::string>{};
  if (stage == "train") return {"features"};
  if (stage == "eval" || stage == "attribute" || stage == "project") return {"train"};
  if (stage == "report") return {"project"};
  throw ConfigError("unknown stage '" + stage + "'");
}

std::string stage_hash(const RunConfig& c, const std::string& stage) {
  std::string text = stage + "|" + stage_inputs(c, stage).dump();
  if (stage == "features" && !c.features.inputs.empty()) text += "|inputs:" + c.features.inputs;
  for (const auto& up : upstream_of(c, stage)) text += "|" + up + ":" + stage_hash(c, up);
  return hex64(fnv1a(text));
}

std::filesystem::path stage_dir(const RunConfig& c, const std::string& stage) { return c.out / stage; }

void require_upstream(const RunConfig& c, const std::string& stage) {
  for (const auto& up : upstream_of(c, stage)) {
    const auto stamp = stage_dir(c, up) / "STAGE.json";
    if (!std::filesystem::exists(stamp))
      throw DataError("missing upstream artifact " + stamp.string() + ": run `arable " + up +
                      "` before `arable " + stage + "`");
    nlohmann::json j;
    try {
      std::ifstream f(stamp);
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(stamp.string() + " is unreadable (" + e.what() + "): rerun `arable " + up + "`");
    }
    const std::string expected = stage_hash(c, up);
    if (j.value("hash", std::string{}) != expected)
      throw DataError("stale artifact: " + up + " outputs in " + stage_dir(c, up).string() +
                      " were produced with a different configuration (hash " +
                      j.value("hash", std::string{"?"}) + ", expected " + expected +
                      "); rerun `arable " + up + "`");
  }
}

void write_stamp(const RunConfig& c, const std::string& stage) {
  const auto dir = stage_dir(c, stage);
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "STAGE.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["hash"] = stage_hash(c, stage);
  j["inputs"] = stage_inputs(c, stage);
  j["artifacts"] = nlohmann::ordered_json::object();
  for (const auto& p : files)
    j["artifacts"][p.lexically_relative(dir).generic_string()] = hex64(file_hash(p));
  std::ofstream f(dir / "STAGE.json", std::ios::binary);
  if (!f) throw DataError("cannot write stage stamp in " + dir.string());
  f << j.dump(2) << "\n";
}

}  // namespace arable::pipeline
