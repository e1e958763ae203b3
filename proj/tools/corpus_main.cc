#include "cli.h"

// Shorthand for `swpipe corpus ...`.
int main(int argc, char** argv) {
  std::vector<std::string> args = {"corpus"};
  args.insert(args.end(), argv + 1, argv + argc);
  return swpipe::cli::run("swpipe", args);
}
