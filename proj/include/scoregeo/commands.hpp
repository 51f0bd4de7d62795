#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scoregeo/run_config.hpp"

namespace scoregeo {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitError = 2;

/// {"method": tag, "dimension": N, "frames": [[...], ...]}
std::string frames_to_json(const std::string& method, const std::vector<Vec>& frames);

/// Binary PGM (P5, maxval 255) of a k x k image; values in [0, 1] map linearly, others clamp.
/// Throws ArgumentError when the dimension is not a perfect square.
std::string frame_to_pgm(const Vec& frame);

int cmd_gen_sphere(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_score_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_interpolate(const RunConfig& cfg, long a, long b, const std::vector<std::string>& methods,
                    std::ostream& out, std::ostream& err);
int cmd_extrapolate(const RunConfig& cfg, long a, long b, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

/// Full command-line entry point; exceptions are reported on err and mapped to kExitError.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace scoregeo
