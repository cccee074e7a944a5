// Generates the bundled desk-scale test signals (procedural, so the
// repository ships no third-party assets).

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "peps/procedural.hpp"
#include "peps/signals.hpp"

namespace fs = std::filesystem;
using namespace peps;

int main(int argc, char** argv) {
  const fs::path dir(argc > 1 ? argv[1] : "data");
  fs::create_directories(dir);

  save_image((dir / "natural256.ppm").string(), make_natural_image(2024, 256));
  save_image((dir / "natural64.ppm").string(), make_natural_image(2025, 64));

  SdfVolume torus = analytic_torus({0.5, 0.5, 0.5}, 0.3, 0.12, 64);
  for (double& v : torus.values) v = static_cast<float>(v);
  save_volume((dir / "torus64.sdfv").string(), torus);

  const fs::path tex = dir / "texset";
  fs::create_directories(tex);
  TextureSet set = make_test_texture_set(7, 32, 3);
  std::ofstream manifest(tex / "layers.txt");
  for (const auto& layer : set.layers) {
    save_image((tex / (layer.name + ".ppm")).string(), layer.image);
    manifest << layer.name << ".ppm\n";
  }
  manifest.close();

  std::printf("test signals written to %s\n", dir.string().c_str());
  return 0;
}
