#include <cstdio>
#include <filesystem>
#include <string>

#include "peano/json_io.hpp"
#include "peano/spaces.hpp"

// Regenerates the reference space and map files under data/.
int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);
  using namespace peano;
  for (const auto& [name, g] : golden_spaces()) {
    std::string path = dir + "/" + name + ".json";
    save_json(path, graph_to_json(*g));
    std::printf("wrote %s\n", path.c_str());
  }
  auto u = unit_interval();
  save_json(dir + "/unit_interval.json", graph_to_json(*u));
  std::printf("wrote %s/unit_interval.json\n", dir.c_str());
  save_json(dir + "/tent.json", map_to_json(tent_map(u)));
  std::printf("wrote %s/tent.json\n", dir.c_str());
  return 0;
}
