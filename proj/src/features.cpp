#include "metasurf/features.hpp"

#include <algorithm>

#include <json.hpp>

#include "metasurf/errors.hpp"

namespace metasurf {

namespace {

// Frequency where the line through (i, y_i) and (i+1, y_{i+1}) hits the threshold.
double crossing(std::span<const double> s, int i) {
  const double y0 = s[i];
  const double y1 = s[i + 1];
  const double t = (kNotchThresholdDb - y0) / (y1 - y0);
  return grid_frequency(i) + t * kFreqStepGhz;
}

}  // namespace

std::vector<NotchFeature> extract_notches(std::span<const double> s) {
  const int n = static_cast<int>(s.size());
  std::vector<NotchFeature> out;
  int i = 1;
  while (i < n - 1) {
    // Extend over a plateau of equal values.
    int j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;
    const bool minimum = s[i] < s[i - 1] && j + 1 < n && s[i] < s[j + 1];
    if (!minimum || s[i] > kNotchThresholdDb) {
      i = j + 1;
      continue;
    }

    NotchFeature f;
    if (j == i) {
      const double y0 = s[i - 1];
      const double y1 = s[i];
      const double y2 = s[i + 1];
      const double curvature = y0 - 2.0 * y1 + y2;
      const double offset = std::clamp(0.5 * (y0 - y2) / curvature, -0.5, 0.5);
      f.frequency = grid_frequency(i) + offset * kFreqStepGhz;
      f.depth = std::min(y1 - 0.25 * (y0 - y2) * offset, y1);
    } else {
      // Flat bottom (e.g. the -60 dB floor): no curvature to fit.
      f.frequency = grid_frequency(i);
      f.depth = s[i];
    }

    int left = i;
    while (left > 0 && s[left - 1] <= kNotchThresholdDb) --left;
    int right = j;
    while (right < n - 1 && s[right + 1] <= kNotchThresholdDb) ++right;
    const double lo = left > 0 ? crossing(s, left - 1) : grid_frequency(0);
    const double hi = right < n - 1 ? crossing(s, right) : grid_frequency(n - 1);
    f.bandwidth = hi - lo;

    out.push_back(f);
    i = j + 1;
  }
  return out;
}

std::vector<NotchFeature> extract_notches(const ReflectionSpectrum& spectrum) {
  return extract_notches(std::span<const double>(spectrum.samples));
}

std::vector<NotchFeature> truncate_features(std::vector<NotchFeature> features) {
  if (static_cast<int>(features.size()) > kNotchSlots) {
    std::stable_sort(features.begin(), features.end(),
                     [](const auto& a, const auto& b) { return a.depth < b.depth; });
    features.resize(kNotchSlots);
  }
  std::stable_sort(features.begin(), features.end(),
                   [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  return features;
}

InputVector assemble_input(const DesignTarget& target) {
  InputVector v{};
  int base = 0;
  for (const auto* list : {&target.te, &target.tm}) {
    const auto kept = truncate_features(*list);
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const auto& f = kept[k];
      if (!(f.frequency >= kFreqStartGhz && f.frequency <= kFreqStopGhz)) {
        throw DomainError("notch frequency " + std::to_string(f.frequency) +
                          " GHz outside [4, 45]");
      }
      const int at = base + static_cast<int>(k) * kFeaturesPerNotch;
      v[at + 0] = (f.frequency - kFreqStartGhz) / kFreqSpanGhz;
      v[at + 1] = std::clamp(-f.depth, 0.0, kDepthCapDb) / kDepthCapDb;
      v[at + 2] = std::clamp(f.bandwidth, 0.0, kBandwidthCapGhz) / kBandwidthCapGhz;
    }
    base += kNotchSlots * kFeaturesPerNotch;
  }
  return v;
}

DesignTarget disassemble_input(const InputVector& input) {
  DesignTarget t;
  for (int p = 0; p < 2; ++p) {
    auto& list = p == 0 ? t.te : t.tm;
    for (int k = 0; k < kNotchSlots; ++k) {
      const int at = (p * kNotchSlots + k) * kFeaturesPerNotch;
      if (input[at + 1] == 0.0) continue;
      list.push_back({kFreqStartGhz + input[at] * kFreqSpanGhz, -input[at + 1] * kDepthCapDb,
                      input[at + 2] * kBandwidthCapGhz});
    }
  }
  return t;
}

DesignTarget target_of_cell(const UnitCell& cell) {
  DesignTarget t;
  t.te = truncate_features(extract_notches(reflection_spectrum(cell, Polarization::TE)));
  t.tm = truncate_features(extract_notches(reflection_spectrum(cell, Polarization::TM)));
  return t;
}

namespace {

std::vector<NotchFeature> parse_list(const nlohmann::json& doc, const char* key) {
  std::vector<NotchFeature> out;
  if (!doc.contains(key)) return out;
  const auto& arr = doc.at(key);
  if (!arr.is_array()) throw FormatError(std::string("'") + key + "' must be an array", 0);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& item = arr[i];
    try {
      out.push_back({item.at("freq_ghz").get<double>(), item.at("depth_db").get<double>(),
                     item.at("bandwidth_ghz").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string(key) + "[" + std::to_string(i) + "]: " + e.what(), i);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  return out;
}

nlohmann::json list_to_json(const std::vector<NotchFeature>& list) {
  auto arr = nlohmann::json::array();
  for (const auto& f : list) {
    arr.push_back({{"freq_ghz", f.frequency}, {"depth_db", f.depth}, {"bandwidth_ghz", f.bandwidth}});
  }
  return arr;
}

}  // namespace

DesignTarget parse_target(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("target document is not valid JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw FormatError("target document must be a JSON object", 0);
  DesignTarget t;
  t.te = parse_list(doc, "te");
  t.tm = parse_list(doc, "tm");
  return t;
}

std::string target_to_json(const DesignTarget& target, int indent) {
  nlohmann::json doc{{"te", list_to_json(target.te)}, {"tm", list_to_json(target.tm)}};
  return doc.dump(indent);
}

}  // namespace metasurf
