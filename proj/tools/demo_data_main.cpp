#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "clad/demo.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the bundled synthetic demo corpus"};
  std::string out_dir = "demo-data";
  std::uint64_t seed = 20240601;
  app.add_option("--out", out_dir, "directory to generate into");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);
  try {
    clad::generate_demo_corpus(out_dir, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "demo corpus written to " << out_dir << "\n";
  return 0;
}
