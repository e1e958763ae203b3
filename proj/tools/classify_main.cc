#include "cli.h"

// Shorthand for `swpipe classify ...`.
int main(int argc, char** argv) {
  std::vector<std::string> args = {"classify"};
  args.insert(args.end(), argv + 1, argv + argc);
  return swpipe::cli::run("swpipe", args);
}
