#pragma once

#include <array>
#include <compare>
#include <cstdint>

namespace nucasim {

using TileId = std::uint32_t;

// Sharer sets are 64-bit masks, so a mesh may hold at most this many tiles.
inline constexpr int kMaxTiles = 64;
inline constexpr int kNumControllers = 4;

struct TileCoord {
  int x = 0;
  int y = 0;
  friend constexpr auto operator<=>(const TileCoord&, const TileCoord&) = default;
};

/// 2-D mesh of tiles. Tiles are numbered row-major, so tile 0..width-1 is
/// the top row. Memory controllers sit at fixed anchor tiles; by default
/// the four corners.
struct MeshConfig {
  int width = 8;
  int height = 8;
  int usable_tiles = 63;
  std::array<TileCoord, kNumControllers> controller_anchors{
      TileCoord{0, 0}, TileCoord{7, 0}, TileCoord{0, 7}, TileCoord{7, 7}};

  int total_tiles() const { return width * height; }

  // Resets the anchors to the corners of the current width x height grid.
  void use_corner_anchors();

  // Throws ConfigError when any invariant is broken.
  void validate() const;
};

TileCoord coords_of(TileId tile, const MeshConfig& mesh);
TileId tile_at(TileCoord coord, const MeshConfig& mesh);

constexpr int hop_distance(TileCoord a, TileCoord b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

// Closest controller by Manhattan distance; ties go to the lower id.
int nearest_controller(TileCoord tile, const MeshConfig& mesh);

}  // namespace nucasim
