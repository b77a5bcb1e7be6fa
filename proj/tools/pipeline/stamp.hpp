#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pipeline/config.hpp"

namespace arable::pipeline {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t file_hash(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

// Stages in pipeline order.
const std::vector<std::string>& stage_names();
// Stages whose artifacts `stage` reads (required ones only).
std::vector<std::string> upstream_of(const RunConfig& c, const std::string& stage);

// Hash of everything that determines a stage's artifacts: its own config
// section chained with the hashes of its upstream stages.
std::string stage_hash(const RunConfig& c, const std::string& stage);

// Throws DataError naming the stage to run when an upstream stamp is missing
// or was written under a different configuration.
void require_upstream(const RunConfig& c, const std::string& stage);

// `<out>/<stage>/STAGE.json` with the stage hash and a hash of every file the
// stage wrote.
void write_stamp(const RunConfig& c, const std::string& stage);

std::filesystem::path stage_dir(const RunConfig& c, const std::string& stage);

}  // namespace arable::pipeline
