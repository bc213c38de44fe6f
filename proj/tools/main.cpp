#include <vector>

#include "pabi/cli.hpp"

int main(int argc, char** argv) {
  return pabi::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
