#pragma once

#include <string>

#include "pipeline/config.hpp"

namespace arable::pipeline {

// Each stage checks its upstream stamps, clears its own output directory,
// writes its artifacts and finally its STAGE.json.
void run_synth(const RunConfig& c);
void run_features(const RunConfig& c);
void run_train(const RunConfig& c);
void run_eval(const RunConfig& c);
void run_attribute(const RunConfig& c);
void run_project(const RunConfig& c);
void run_report(const RunConfig& c);

void run_stage(const RunConfig& c, const std::string& stage);

}  // namespace arable::pipeline
