#include "cli.h"

// Shorthand for `swpipe indicators ...`.
int main(int argc, char** argv) {
  std::vector<std::string> args = {"indicators"};
  args.insert(args.end(), argv + 1, argv + argc);
  return swpipe::cli::run("swpipe", args);
}
