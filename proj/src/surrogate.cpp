#include "metasurf/surrogate.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "metasurf/errors.hpp"

namespace metasurf {

std::string_view to_string(Polarization pol) {
  return pol == Polarization::TE ? "TE" : "TM";
}

std::vector<NotchParams> notch_params(const UnitCell& cell, Polarization pol) {
  std::array<int, kTileCount> count{};
  std::array<int, kTileCount> index_sum{};
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const int t = cell.at(r, c).value();
      ++count[t];
      index_sum[t] += pol == Polarization::TE ? r : c;
    }
  }

  std::vector<NotchParams> out;
  for (int t = 0; t < kTileCount; ++t) {
    const int n = count[t];
    if (n == 0) continue;
    const double mean_index = static_cast<double>(index_sum[t]) / n;
    NotchParams p;
    p.center = std::clamp(6.0 + 5.0 * t + 0.5 * (mean_index - 1.5), kFreqStartGhz, kFreqStopGhz);
    p.depth = std::max(-40.0, -6.0 - 3.0 * n);
    p.halfwidth = 0.15 + 0.05 * n;
    out.push_back(p);
  }
  return out;
}

ReflectionSpectrum spectrum_from_notches(std::span<const NotchParams> notches,
                                         Polarization pol) {
  ReflectionSpectrum s;
  s.pol = pol;
  s.samples.resize(kSampleCount);
  for (int i = 0; i < kSampleCount; ++i) {
    const double f = grid_frequency(i);
    double r = 0.0;
    for (const auto& n : notches) {
      const double h2 = n.halfwidth * n.halfwidth;
      const double df = f - n.center;
      r += n.depth * h2 / (df * df + h2);
    }
    s.samples[i] = std::clamp(r, kFloorDb, 0.0);
  }
  return s;
}

ReflectionSpectrum reflection_spectrum(const UnitCell& cell, Polarization pol) {
  const auto notches = notch_params(cell, pol);
  return spectrum_from_notches(notches, pol);
}

void write_spectra_csv(std::ostream& out, const ReflectionSpectrum& te,
                       const ReflectionSpectrum& tm) {
  if (te.samples.size() != tm.samples.size()) {
    throw DomainError("TE and TM spectra differ in length");
  }
  out << "freq_ghz,te_db,tm_db\n";
  char line[96];
  for (std::size_t i = 0; i < te.samples.size(); ++i) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f\n", grid_frequency(static_cast<int>(i)),
                  te.samples[i], tm.samples[i]);
    out << line;
  }
}

}  // namespace metasurf
