#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace metasurf {

inline constexpr int kTileCount = 8;
inline constexpr int kTileSize = 8;         // cells per tile edge
inline constexpr int kGridSize = 4;         // tiles per unit-cell edge
inline constexpr int kSlotCount = kGridSize * kGridSize;
inline constexpr int kMatrixSize = kTileSize * kGridSize;  // 32
inline constexpr int kBitsPerSlot = 3;
inline constexpr int kCodeBits = kSlotCount * kBitsPerSlot;  // 48
inline constexpr double kCellPitchMm = 0.2;

// One of the eight annular tiles. The id doubles as the tile's 3-bit code.
class TileId {
 public:
  constexpr TileId() = default;
  explicit TileId(int value);

  constexpr int value() const noexcept { return value_; }
  friend constexpr bool operator==(TileId, TileId) = default;

 private:
  std::uint8_t value_ = 0;
};

// 8x8 copper map of a single tile, 1 = copper.
struct TilePattern {
  std::array<std::array<std::uint8_t, kTileSize>, kTileSize> cells{};

  int copper_count() const noexcept;
  friend bool operator==(const TilePattern&, const TilePattern&) = default;
};

// 4x4 arrangement of tiles, row-major.
struct UnitCell {
  std::array<TileId, kSlotCount> tiles{};

  TileId at(int row, int col) const { return tiles[row * kGridSize + col]; }
  void set(int row, int col, TileId id) { tiles[row * kGridSize + col] = id; }

  UnitCell transposed() const noexcept;
  std::string to_string() const;  // "a,b,...,p"

  friend bool operator==(const UnitCell&, const UnitCell&) = default;
};

// Full 32x32 copper map of a unit cell.
struct Matrix32 {
  std::array<std::uint8_t, kMatrixSize * kMatrixSize> cells{};

  std::uint8_t at(int row, int col) const { return cells[row * kMatrixSize + col]; }
  std::uint8_t& at(int row, int col) { return cells[row * kMatrixSize + col]; }
  int copper_count() const noexcept;

  friend bool operator==(const Matrix32&, const Matrix32&) = default;
};

// Confined output code: bits 3k..3k+2 are the big-endian id of slot k.
struct BitVector48 {
  std::array<std::uint8_t, kCodeBits> bits{};

  std::string to_string() const;
  static BitVector48 from_string(std::string_view text);

  friend bool operator==(const BitVector48&, const BitVector48&) = default;
};

/// Concentric-shell tile family. Shell index of cell (i, j) is
/// max(|i-3.5|, |j-3.5|) - 0.5; shell 0 is always copper and shell s > 0 is
/// copper iff bit (s-1) of the id is set.
TilePattern tile_pattern(TileId id);

Matrix32 compose(const UnitCell& cell);

BitVector48 encode_bits(const UnitCell& cell);

/// Throws DomainError unless `bits` holds exactly 48 entries, each 0 or 1.
UnitCell decode_bits(std::span<const std::uint8_t> bits);
UnitCell decode_bits(const BitVector48& bits);

/// Thresholds sigmoid activations at 0.5; a value of exactly 0.5 becomes 1.
BitVector48 decode_soft(std::span<const double> activations);

enum class RenderFormat { Ascii, Pgm };

RenderFormat parse_render_format(std::string_view name);

/// ascii: 32 lines of '#' (copper) / '.' (empty), each newline-terminated.
/// pgm: "P5 32 32 255\n" followed by 1024 bytes, copper = 0, empty = 255.
std::string render(const UnitCell& cell, RenderFormat format);

/// Parses "t0,t1,...,t15" (16 ids in 0..7).
UnitCell parse_tiles(std::string_view text);

}  // namespace metasurf
