#pragma once

#include <iosfwd>
#include <string_view>

#include "run_config.hpp"

namespace cfish::cli {

enum class Command { communities, scale, compare, simulate };

Command parse_command(std::string_view name);
std::string_view to_string(Command command);

// Runs one command into config.out and always attempts to write
// manifest.json. Returns the process exit code: 0 on success, 1 for IO or
// config problems, 2 when a pipeline stage comes out empty, 3 when
// estimation fails. Progress goes to `log`, errors to `err`.
int run_command(Command command, const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace cfish::cli
