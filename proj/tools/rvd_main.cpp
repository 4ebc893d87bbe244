#include "rvd/cli.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  rvd::cli::Context ctx{std::cin, std::cout, std::cerr, std::nullopt, ""};
  if (const char* root = std::getenv("RVD_ROOT")) ctx.env_root = root;
  if (const char* user = std::getenv("USER")) ctx.default_author = user;
  return rvd::cli::run(args, ctx);
}
