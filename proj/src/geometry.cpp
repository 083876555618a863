#include "metasurf/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "metasurf/errors.hpp"

namespace metasurf {

TileId::TileId(int value) {
  if (value < 0 || value >= kTileCount) {
    throw DomainError("tile id " + std::to_string(value) + " outside [0, 7]");
  }
  value_ = static_cast<std::uint8_t>(value);
}

int TilePattern::copper_count() const noexcept {
  int n = 0;
  for (const auto& row : cells) {
    for (auto c : row) n += c;
  }
  return n;
}

UnitCell UnitCell::transposed() const noexcept {
  UnitCell out;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) out.set(c, r, at(r, c));
  }
  return out;
}

std::string UnitCell::to_string() const {
  std::string s;
  for (int k = 0; k < kSlotCount; ++k) {
    if (k) s += ',';
    s += static_cast<char>('0' + tiles[k].value());
  }
  return s;
}

int Matrix32::copper_count() const noexcept {
  return static_cast<int>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

std::string BitVector48::to_string() const {
  std::string s(kCodeBits, '0');
  for (int i = 0; i < kCodeBits; ++i) s[i] = bits[i] ? '1' : '0';
  return s;
}

BitVector48 BitVector48::from_string(std::string_view text) {
  if (text.size() != kCodeBits) {
    throw DomainError("bit string must have 48 characters, got " +
                      std::to_string(text.size()));
  }
  BitVector48 out;
  for (int i = 0; i < kCodeBits; ++i) {
    if (text[i] != '0' && text[i] != '1') {
      throw DomainError("bit string may contain only '0' and '1'");
    }
    out.bits[i] = text[i] == '1';
  }
  return out;
}

TilePattern tile_pattern(TileId id) {
  TilePattern p;
  for (int i = 0; i < kTileSize; ++i) {
    for (int j = 0; j < kTileSize; ++j) {
      const double di = std::abs(i - 3.5);
      const double dj = std::abs(j - 3.5);
      const int shell = static_cast<int>(std::max(di, dj) - 0.5);
      const bool copper = shell == 0 || ((id.value() >> (shell - 1)) & 1);
      p.cells[i][j] = copper ? 1 : 0;
    }
  }
  return p;
}

Matrix32 compose(const UnitCell& cell) {
  std::array<TilePattern, kTileCount> patterns;
  for (int t = 0; t < kTileCount; ++t) patterns[t] = tile_pattern(TileId(t));

  Matrix32 m;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const auto& p = patterns[cell.at(r, c).value()];
      for (int i = 0; i < kTileSize; ++i) {
        for (int j = 0; j < kTileSize; ++j) {
          m.at(r * kTileSize + i, c * kTileSize + j) = p.cells[i][j];
        }
      }
    }
  }
  return m;
}

BitVector48 encode_bits(const UnitCell& cell) {
  BitVector48 out;
  for (int k = 0; k < kSlotCount; ++k) {
    const int v = cell.tiles[k].value();
    out.bits[3 * k + 0] = (v >> 2) & 1;
    out.bits[3 * k + 1] = (v >> 1) & 1;
    out.bits[3 * k + 2] = v & 1;
  }
  return out;
}

UnitCell decode_bits(std::span<const std::uint8_t> bits) {
  if (bits.size() != kCodeBits) {
    throw DomainError("code must have 48 bits, got " + std::to_string(bits.size()));
  }
  UnitCell cell;
  for (int k = 0; k < kSlotCount; ++k) {
    int v = 0;
    for (int b = 0; b < kBitsPerSlot; ++b) {
      const auto bit = bits[3 * k + b];
      if (bit > 1) throw DomainError("code entries must be 0 or 1");
      v = (v << 1) | bit;
    }
    cell.tiles[k] = TileId(v);
  }
  return cell;
}

UnitCell decode_bits(const BitVector48& bits) { return decode_bits(std::span(bits.bits)); }

BitVector48 decode_soft(std::span<const double> activations) {
  if (activations.size() != kCodeBits) {
    throw DomainError("expected 48 activations, got " +
                      std::to_string(activations.size()));
  }
  BitVector48 out;
  for (int i = 0; i < kCodeBits; ++i) {
    const double a = activations[i];
    if (!(a >= 0.0 && a <= 1.0)) {
      throw DomainError("activation outside [0, 1] at index " + std::to_string(i));
    }
    out.bits[i] = a >= 0.5 ? 1 : 0;
  }
  return out;
}

RenderFormat parse_render_format(std::string_view name) {
  if (name == "ascii") return RenderFormat::Ascii;
  if (name == "pgm") return RenderFormat::Pgm;
  throw UsageError("unknown render format '" + std::string(name) + "' (expected ascii or pgm)");
}

std::string render(const UnitCell& cell, RenderFormat format) {
  const Matrix32 m = compose(cell);
  std::string out;
  switch (format) {
    case RenderFormat::Ascii:
      out.reserve(kMatrixSize * (kMatrixSize + 1));
      for (int r = 0; r < kMatrixSize; ++r) {
        for (int c = 0; c < kMatrixSize; ++c) out += m.at(r, c) ? '#' : '.';
        out += '\n';
      }
      break;
    case RenderFormat::Pgm:
      out = "P5 32 32 255\n";
      for (auto v : m.cells) out += static_cast<char>(v ? 0 : 255);
      break;
  }
  return out;
}

UnitCell parse_tiles(std::string_view text) {
  UnitCell cell;
  int k = 0;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const auto token = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    if (k >= kSlotCount) throw DomainError("expected 16 tile ids");
    int v = -1;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw DomainError("malformed tile id '" + std::string(token) + "'");
    }
    cell.tiles[k++] = TileId(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (k != kSlotCount) throw DomainError("expected 16 tile ids, got " + std::to_string(k));
  return cell;
}

}  // namespace metasurf
