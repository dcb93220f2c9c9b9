// Writes scripted job logs and transcripts for the command-line tests.

#include <fstream>
#include <iostream>

#include "fixtures.hpp"

using namespace copygen;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <out-dir>\n";
    return 2;
  }
  const std::filesystem::path out = argv[1];
  std::filesystem::remove_all(out);
  std::filesystem::create_directories(out);

  const auto ablation = fixtures::ablation_row();
  {
    EventStore store(out / ablation.name);
    const auto summary = fixtures::run(fixtures::build_row(ablation, ablation.name), store, 4);
    std::cout << ablation.name << ": " << summary.first_pass_rate << " -> " << summary.success_rate << "\n";
  }

  const auto scripted = fixtures::build_row(fixtures::scripted_row(), "cli-scripted");
  std::ofstream(out / "scripted.transcript.json") << Json(scripted.transcript).dump(2) << "\n";
  return 0;
}
