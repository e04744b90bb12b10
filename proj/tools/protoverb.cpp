#include <vector>

#include "protoverb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return protoverb::run_cli(args);
}
