#include "nucasim/geometry.hpp"

#include <string>

#include "nucasim/error.hpp"

namespace nucasim {

void MeshConfig::use_corner_anchors() {
  controller_anchors = {TileCoord{0, 0}, TileCoord{width - 1, 0}, TileCoord{0, height - 1},
                        TileCoord{width - 1, height - 1}};
}

void MeshConfig::validate() const {
  if (width <= 0 || height <= 0) {
    throw ConfigError("mesh width and height must be positive");
  }
  if (total_tiles() > kMaxTiles) {
    throw ConfigError("mesh has " + std::to_string(total_tiles()) + " tiles; at most " +
                      std::to_string(kMaxTiles) + " are supported");
  }
  if (usable_tiles <= 0 || usable_tiles > total_tiles()) {
    throw ConfigError("usable_tiles must be in [1, width*height], got " +
                      std::to_string(usable_tiles));
  }
  for (const auto& a : controller_anchors) {
    if (a.x < 0 || a.x >= width || a.y < 0 || a.y >= height) {
      throw ConfigError("controller anchor (" + std::to_string(a.x) + "," +
                        std::to_string(a.y) + ") lies outside the mesh");
    }
  }
}

TileCoord coords_of(TileId tile, const MeshConfig& mesh) {
  if (tile >= static_cast<TileId>(mesh.total_tiles())) {
    throw ConfigError("tile id " + std::to_string(tile) + " out of range for a " +
                      std::to_string(mesh.width) + "x" + std::to_string(mesh.height) + " mesh");
  }
  return {static_cast<int>(tile) % mesh.width, static_cast<int>(tile) / mesh.width};
}

TileId tile_at(TileCoord coord, const MeshConfig& mesh) {
  if (coord.x < 0 || coord.x >= mesh.width || coord.y < 0 || coord.y >= mesh.height) {
    throw ConfigError("coordinate (" + std::to_string(coord.x) + "," + std::to_string(coord.y) +
                      ") outside the mesh");
  }
  return static_cast<TileId>(coord.y * mesh.width + coord.x);
}

int nearest_controller(TileCoord tile, const MeshConfig& mesh) {
  int best = 0;
  int best_dist = hop_distance(tile, mesh.controller_anchors[0]);
  for (int c = 1; c < kNumControllers; ++c) {
    const int d = hop_distance(tile, mesh.controller_anchors[c]);
    if (d < best_dist) {
      best = c;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace nucasim
