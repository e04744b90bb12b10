#ifndef PROTOVERB_CLI_HPP
#define PROTOVERB_CLI_HPP

#include <string>
#include <vector>

namespace protoverb {

inline constexpr const char* kToolVersion = "0.1.0";

// Entry point behind main(). Returns the process exit code; 0 only after
// the run manifest has been written.
int run_cli(const std::vector<std::string>& args);

}  // namespace protoverb

#endif
