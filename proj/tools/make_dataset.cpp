// Writes the bundled synthetic datasets: make_dataset <count> <seed> <out.jsonl>

#include <cstdlib>
#include <iostream>

#include "crsim/dataset.hpp"
#include "crsim/harness.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: make_dataset <count> <seed> <out.jsonl>\n";
    return 1;
  }
  const auto count = std::strtoull(argv[1], nullptr, 10);
  const auto seed = std::strtoull(argv[2], nullptr, 10);
  crsim::write_text(argv[3], crsim::dataset_to_jsonl(crsim::make_synthetic_dataset(count, seed)));
  return 0;
}
