#pragma once

#include <iosfwd>
#include <string>

#include "vseg/errors.hpp"
#include "vseg/segmenter.hpp"

namespace vseg::cli {

/// Process exit codes.
enum Exit : int { Ok = 0, Usage = 1, Input = 2, Numeric = 3 };

int exit_code(ErrorKind kind);

/// Overrides fields of `cfg` with the keys present in a flat JSON object.
/// Unknown keys and wrongly typed values raise Error(Argument).
void apply_config_json(SegmentationConfig& cfg, const std::string& json_text);

/// Flat JSON object with one key per configuration field; unset kernel
/// scales are written as null.
std::string config_json(const SegmentationConfig& cfg);

/// Entry point for the `vseg` tool: subcommands segment, gradfield, noise, flowgrid.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vseg::cli
