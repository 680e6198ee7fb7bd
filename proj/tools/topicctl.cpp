#include <string>
#include <vector>

#include "topiclib/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return topiclib::run_cli(std::move(args));
}
