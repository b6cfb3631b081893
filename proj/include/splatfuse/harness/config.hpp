#pragma once

#include <string>

#include "splatfuse/harness/pipeline.hpp"
#include "splatfuse/io/toml.hpp"

namespace splatfuse {

// Scene/sequence selection by name: "smoke", "corrupt", "loop".
SyntheticScene make_scene_by_name(const std::string& name);
SequenceSpec make_spec_by_name(const std::string& name, std::uint64_t seed);

struct RunOptions {
  std::string scene = "smoke";
  std::uint64_t seed = 7;
  PipelineConfig pipeline;
};

// One table per config type ([tracking], [fusion], [loop], [map_loss],
// [map_optim]) plus [harness] for scene selection and pipeline knobs.
// Missing keys keep their defaults; unknown tables or keys raise
// ConfigError.
RunOptions load_run_options(const TomlDoc& doc);

}  // namespace splatfuse
