#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "metasurf/geometry.hpp"
#include "metasurf/surrogate.hpp"

#ifndef METASURF_NOTCH_SLOTS
#define METASURF_NOTCH_SLOTS 4
#endif

namespace metasurf {

inline constexpr double kNotchThresholdDb = -10.0;
inline constexpr int kNotchSlots = METASURF_NOTCH_SLOTS;  // per polarization
inline constexpr int kFeaturesPerNotch = 3;
inline constexpr int kInputWidth = 2 * kNotchSlots * kFeaturesPerNotch;

// Normalization caps for the network input.
inline constexpr double kFreqSpanGhz = kFreqStopGhz - kFreqStartGhz;
inline constexpr double kDepthCapDb = 40.0;
inline constexpr double kBandwidthCapGhz = 2.0;

struct NotchFeature {
  double frequency = 0.0;  // GHz
  double depth = 0.0;      // dB
  double bandwidth = 0.0;  // GHz, width of the -10 dB interval

  friend bool operator==(const NotchFeature&, const NotchFeature&) = default;
};

struct DesignTarget {
  std::vector<NotchFeature> te;
  std::vector<NotchFeature> tm;

  const std::vector<NotchFeature>& of(Polarization pol) const {
    return pol == Polarization::TE ? te : tm;
  }
  friend bool operator==(const DesignTarget&, const DesignTarget&) = default;
};

// Layout: [TE slot 0..3, TM slot 0..3], each slot (f_norm, d_norm, b_norm).
using InputVector = std::array<double, kInputWidth>;

/// Finds notches at or below -10 dB. A notch is a local minimum sample
/// (a flat run of equal minima counts once, anchored at its leftmost sample);
/// frequency and depth come from a parabola through the anchor and its two
/// neighbours, bandwidth from linear interpolation of the -10 dB crossings
/// bounding the contiguous sub-threshold interval. Output is sorted by
/// frequency. Edge samples are never reported.
std::vector<NotchFeature> extract_notches(std::span<const double> samples);
std::vector<NotchFeature> extract_notches(const ReflectionSpectrum& spectrum);

/// Keeps the kNotchSlots deepest features, returned in ascending frequency.
std::vector<NotchFeature> truncate_features(std::vector<NotchFeature> features);

/// Throws DomainError for a feature outside [4, 45] GHz.
InputVector assemble_input(const DesignTarget& target);

/// Inverse of the normalization; empty slots (zero depth) are dropped.
DesignTarget disassemble_input(const InputVector& input);

/// Extracted (and truncated) features of the surrogate spectra of `cell`.
DesignTarget target_of_cell(const UnitCell& cell);

/// JSON document {"te": [{"freq_ghz", "depth_db", "bandwidth_ghz"}...], "tm": [...]}.
/// Throws FormatError on malformed input.
DesignTarget parse_target(const std::string& text);
std::string target_to_json(const DesignTarget& target, int indent = 2);

}  // namespace metasurf
