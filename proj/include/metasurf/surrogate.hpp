#pragma once

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "metasurf/geometry.hpp"

namespace metasurf {

// Bumped whenever the forward model's numbers change; recorded in dataset headers.
inline constexpr int kSurrogateVersion = 1;

inline constexpr double kFreqStartGhz = 4.0;
inline constexpr double kFreqStopGhz = 45.0;
inline constexpr double kFreqStepGhz = 0.05;
inline constexpr int kSampleCount = 821;
inline constexpr double kFloorDb = -60.0;

enum class Polarization { TE, TM };

std::string_view to_string(Polarization pol);

// Frequency of grid sample i in GHz.
inline double grid_frequency(int i) { return kFreqStartGhz + kFreqStepGhz * i; }

struct NotchParams {
  double center = 0.0;     // GHz
  double depth = 0.0;      // dB, negative
  double halfwidth = 0.0;  // GHz

  friend bool operator==(const NotchParams&, const NotchParams&) = default;
};

struct ReflectionSpectrum {
  Polarization pol = Polarization::TE;
  std::vector<double> samples;  // dB, kSampleCount entries

  double frequency(int i) const { return grid_frequency(i); }
};

/// One Lorentzian notch per distinct tile id in the cell, ordered by id.
/// Tile t occurring n times with mean row (TE) or column (TM) index m:
///   center    = 6 + 5t + 0.5 (m - 1.5)
///   depth     = max(-40, -6 - 3n)
///   halfwidth = 0.15 + 0.05 n
std::vector<NotchParams> notch_params(const UnitCell& cell, Polarization pol);

/// Clamped dB-domain Lorentzian sum sampled on the 4-45 GHz grid.
ReflectionSpectrum spectrum_from_notches(std::span<const NotchParams> notches,
                                         Polarization pol);

ReflectionSpectrum reflection_spectrum(const UnitCell& cell, Polarization pol);

/// Writes `freq_ghz,te_db,tm_db` rows with 6 decimals.
void write_spectra_csv(std::ostream& out, const ReflectionSpectrum& te,
                       const ReflectionSpectrum& tm);

}  // namespace metasurf
