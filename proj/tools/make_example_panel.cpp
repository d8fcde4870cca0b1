#include <filesystem>
#include <iostream>

#include "ramsel/synthetic.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data/example";
  std::filesystem::create_directories(dir);
  ramsel::SyntheticPanelConfig cfg;
  cfg.seed = 20240101;
  const ramsel::Panel panel = ramsel::make_synthetic_panel(cfg);
  ramsel::save_panel(panel, dir / "panel.csv", dir / "metadata.csv");
  std::cout << "wrote " << (dir / "panel.csv").string() << " and " << (dir / "metadata.csv").string() << '\n';
  return 0;
}
