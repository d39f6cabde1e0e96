#include <string>
#include <vector>

#include "qamp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qamp::run_cli(args);
}
