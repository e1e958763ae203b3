#include "cli.h"

// Shorthand for `swpipe ensemble ...`.
int main(int argc, char** argv) {
  std::vector<std::string> args = {"ensemble"};
  args.insert(args.end(), argv + 1, argv + argc);
  return swpipe::cli::run("swpipe", args);
}
