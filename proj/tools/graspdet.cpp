#include <vector>

#include "graspdet/cli.hpp"

int main(int argc, char** argv) {
  return graspdet::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
