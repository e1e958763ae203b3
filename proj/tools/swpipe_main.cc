#include "cli.h"

int main(int argc, char** argv) {
  return swpipe::cli::run("swpipe", std::vector<std::string>(argv + 1, argv + argc));
}
