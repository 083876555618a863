// Acceptance suite: runs every exit criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "grad_oracle.hpp"
#include "metasurf/checkpoint.hpp"
#include "metasurf/dataset_io.hpp"
#include "metasurf/io_util.hpp"
#include "metasurf/pipeline.hpp"

using namespace metasurf;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr int kCodecSamples = 10000;
constexpr double kCodecMaxSeconds = 1.0;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradAbsFloor = 1e-6;
constexpr double kGradMaxSeconds = 10.0;
constexpr int kSymmetryCells = 200;
constexpr int kFidelityCases = 500;
constexpr double kFidelityFreqTol = 0.05;
constexpr double kFidelityDepthTol = 0.2;
constexpr double kFidelityPassRate = 0.99;
constexpr std::size_t kDatasetSize = 2000;
constexpr std::uint64_t kSeed = 42;
constexpr double kMinPerBitAccuracy = 0.85;
constexpr double kMaxTrainingSeconds = 30.0 * 60.0;
constexpr int kLatencyCalls = 100;
constexpr double kMaxLatencySeconds = 0.1;
constexpr int kClosedLoopTargets = 50;
constexpr double kClosedLoopFreqTol = 0.5;
constexpr double kClosedLoopMinMatch = 0.70;
constexpr int kCheckpointInputs = 100;
constexpr std::uintmax_t kMaxCheckpointBytes = 6'000'000;
constexpr double kMseDropRatio = 0.10;
constexpr int kSmoothingWindow = 100;

int failures = 0;

void report(bool pass, const char* id, const char* name, const std::string& detail) {
  std::printf("[%s] %s %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

UnitCell rng_cell(std::mt19937_64& rng) {
  UnitCell c;
  for (auto& t : c.tiles) t = TileId(static_cast<int>(rng() % 8));
  return c;
}

void codec_bijection() {
  std::mt19937_64 rng(1);
  const auto start = Clock::now();
  int ok = 0;
  for (int i = 0; i < kCodecSamples; ++i) {
    const auto c = rng_cell(rng);
    ok += decode_bits(encode_bits(c)) == c;
  }
  const double secs = seconds_since(start);
  report(ok == kCodecSamples && secs < kCodecMaxSeconds, "A1", "codec bijection",
         fmt("%d/%d round-trips in %.3f s (need 100%%, < %.0f s)", ok, kCodecSamples, secs, kCodecMaxSeconds));
}

void gradient_correctness() {
  struct Case {
    const char* label;
    std::vector<Layer> layers;
    Eigen::Index batch;
  };
  std::vector<Case> cases;
  auto built = [](NetworkSpec spec, std::uint64_t seed) {
    auto layers = Network::build(spec, seed).layers();
    Rng rng(seed);
    metasurf::testing::randomize_biases(layers, rng);
    return layers;
  };
  cases.push_back({"24-8-48 relu/sigmoid, dropout 0.2", built({24, {8}, 48, 0.2}, 101), 3});
  cases.push_back({"24-8-8-48 dropout 0.5", built({24, {8, 8}, 48, 0.5}, 102), 2});
  cases.push_back({"6-5-3 no dropout", built({6, {5}, 3, 0.0}, 103), 5});
  cases.push_back({"10-12-7-4 dropout 0.3", built({10, {12, 7}, 4, 0.3}, 104), 4});
  {
    Rng rng(105);
    std::normal_distribution<double> n(0.0, 0.7);
    auto m = [&](Eigen::Index r, Eigen::Index c) {
      Matrix x(r, c);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
      return x;
    };
    std::vector<Layer> layers{DenseLayer{m(7, 5), m(7, 1), Activation::Relu}, DropoutLayer{0.25},
                              DenseLayer{m(6, 7), m(6, 1), Activation::Identity},
                              DenseLayer{m(4, 6), m(4, 1), Activation::Sigmoid}};
    cases.push_back({"5-7-6-4 relu/identity/sigmoid, dropout 0.25", layers, 3});
  }

  const auto start = Clock::now();
  bool all_ok = true;
  double worst = 0.0, worst_abs = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    Network net(cases[k].layers);
    Rng rng(200 + k);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(net.input_width(), cases[k].batch), t(net.output_width(), cases[k].batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng) < 0.5 ? 0.0 : 1.0;
    net.forward_train(x, rng);
    const auto res = metasurf::testing::check_gradients(net.layers(), net.backward(t), x, t, net.recorded_masks(),
                                                        kGradStep, kGradRelTol, kGradAbsFloor);
    all_ok = all_ok && res.failures == 0;
    worst = std::max(worst, res.max_rel_error);
    worst_abs = std::max(worst_abs, res.max_abs_diff);
    checked += res.checked;
  }
  const double secs = seconds_since(start);
  report(all_ok && secs < kGradMaxSeconds, "A2", "gradient correctness",
         fmt("%zu networks, %zu parameters, max |analytic - numeric| %.2e, max rel error above the %.0e floor "
             "%.2e, %.2f s (need rel <= %.0e, < %.0f s)",
             cases.size(), checked, worst_abs, kGradAbsFloor, worst, secs, kGradRelTol, kGradMaxSeconds));
}

void surrogate_symmetry() {
  std::mt19937_64 rng(3);
  int duality_ok = 0, perm_ok = 0, rect_ok = 0;
  for (int i = 0; i < kSymmetryCells; ++i) {
    const auto c = rng_cell(rng);
    const auto t = c.transposed();
    duality_ok += reflection_spectrum(c, Polarization::TE).samples ==
                      reflection_spectrum(t, Polarization::TM).samples &&
                  reflection_spectrum(c, Polarization::TM).samples ==
                      reflection_spectrum(t, Polarization::TE).samples;

    // Sixteen slots over eight ids: some id always occurs at least twice.
    UnitCell p = c;
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < 16; ++a)
      for (int b = a + 1; b < 16; ++b)
        if (p.tiles[a] == p.tiles[b]) pairs.emplace_back(a, b);
    const auto [a, b] = pairs[rng() % pairs.size()];
    std::swap(p.tiles[a], p.tiles[b]);
    perm_ok += reflection_spectrum(c, Polarization::TE).samples ==
                   reflection_spectrum(p, Polarization::TE).samples &&
               reflection_spectrum(c, Polarization::TM).samples ==
                   reflection_spectrum(p, Polarization::TM).samples;

    // Non-trivial rearrangement: ids x, y on the corners of a rectangle
    // (x on one diagonal, y on the other) swap places. The cell changes but
    // every id keeps its count, row sum and column sum.
    UnitCell q = c;
    const int r1 = static_cast<int>(rng() % 4), r2 = (r1 + 1 + static_cast<int>(rng() % 3)) % 4;
    const int c1 = static_cast<int>(rng() % 4), c2 = (c1 + 1 + static_cast<int>(rng() % 3)) % 4;
    const TileId x(static_cast<int>(rng() % 8)), y(static_cast<int>((x.value() + 1 + rng() % 7) % 8));
    q.set(r1, c1, x);
    q.set(r2, c2, x);
    q.set(r1, c2, y);
    q.set(r2, c1, y);
    UnitCell swapped = q;
    swapped.set(r1, c1, y);
    swapped.set(r2, c2, y);
    swapped.set(r1, c2, x);
    swapped.set(r2, c1, x);
    rect_ok += swapped != q &&
               reflection_spectrum(q, Polarization::TE).samples ==
                   reflection_spectrum(swapped, Polarization::TE).samples &&
               reflection_spectrum(q, Polarization::TM).samples ==
                   reflection_spectrum(swapped, Polarization::TM).samples;
  }
  report(duality_ok == kSymmetryCells && perm_ok == kSymmetryCells && rect_ok == kSymmetryCells, "A3",
         "surrogate symmetry",
         fmt("transposition duality %d/%d, same-tile swap %d/%d, sum-preserving rectangle swap %d/%d, "
             "all bit-exact (need 100%%)",
             duality_ok, kSymmetryCells, perm_ok, kSymmetryCells, rect_ok, kSymmetryCells));
}

void feature_fidelity() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> center(6.0, 43.0), depth(-40.0, -12.0), hw(0.2, 1.5);
  int ok = 0;
  double worst_f = 0.0, worst_d = 0.0;
  for (int i = 0; i < kFidelityCases; ++i) {
    const NotchParams n{center(rng), depth(rng), hw(rng)};
    const std::vector<NotchParams> one{n};
    const auto f = extract_notches(spectrum_from_notches(one, Polarization::TE));
    if (f.size() != 1) continue;
    const double df = std::abs(f[0].frequency - n.center);
    const double dd = std::abs(f[0].depth - n.depth);
    worst_f = std::max(worst_f, df);
    worst_d = std::max(worst_d, dd);
    ok += df <= kFidelityFreqTol && dd <= kFidelityDepthTol;
  }
  const double rate = static_cast<double>(ok) / kFidelityCases;
  report(rate >= kFidelityPassRate, "A4", "feature-extraction fidelity",
         fmt("%d/%d within (%.2f GHz, %.1f dB), worst (%.4f GHz, %.4f dB) (need >= %.0f%%)", ok, kFidelityCases,
             kFidelityFreqTol, kFidelityDepthTol, worst_f, worst_d, 100 * kFidelityPassRate));
}

struct TrainedRun {
  Split data;
  TrainResult result;
};

TrainedRun end_to_end_training() {
  TrainedRun run;
  const auto records = generate_dataset(kDatasetSize, kSeed);
  TrainConfig cfg;
  cfg.seed = kSeed;
  run.data = split(records, cfg.split_ratio, cfg.seed);
  std::printf("       training default network: %zu train / %zu test records, %d epochs ...\n",
              run.data.train.size(), run.data.test.size(), cfg.epochs);
  std::fflush(stdout);
  run.result = train(run.data.train, run.data.test, cfg);

  const Metrics m = evaluate(run.result.network, run.data.test);
  const double baseline = constant_baseline_accuracy(run.data.test);
  const double secs = run.result.report.seconds;
  const bool pass = m.per_bit_accuracy >= kMinPerBitAccuracy && m.per_bit_accuracy > baseline &&
                    secs <= kMaxTrainingSeconds;
  report(pass, "A5", "end-to-end training",
         fmt("per-bit test accuracy %.4f (per-slot %.4f, exact %.4f), constant baseline %.4f, best epoch %d, "
             "%.0f s (need >= %.2f and > baseline, <= %.0f s)",
             m.per_bit_accuracy, m.per_slot_accuracy, m.exact_cell_rate, baseline, run.result.report.best_epoch,
             secs, kMinPerBitAccuracy, kMaxTrainingSeconds));
  return run;
}

void inference_latency(const TrainedRun& run) {
  std::vector<double> times;
  for (int i = 0; i < kLatencyCalls; ++i) {
    const auto& cell = run.data.test[static_cast<std::size_t>(i) % run.data.test.size()].cell;
    const auto target = target_of_cell(cell);
    const auto start = Clock::now();
    design(run.result.network, target);
    times.push_back(seconds_since(start));
  }
  std::nth_element(times.begin(), times.begin() + kLatencyCalls / 2, times.end());
  const double median = times[kLatencyCalls / 2];
  report(median < kMaxLatencySeconds, "A6", "inference latency",
         fmt("median design() over %d calls %.6f s (need < %.1f s)", kLatencyCalls, median, kMaxLatencySeconds));
}

void closed_loop(const TrainedRun& run) {
  double sum = 0.0;
  int requested = 0, matched = 0;
  const int n = std::min<int>(kClosedLoopTargets, static_cast<int>(run.data.test.size()));
  for (int i = 0; i < n; ++i) {
    const auto target = target_of_cell(run.data.test[static_cast<std::size_t>(i)].cell);
    const auto designed = design(run.result.network, target);
    const auto rep = verify_design(designed.cell, target, {kClosedLoopFreqTol});
    sum += rep.overall_fraction;
    requested += rep.te_requested + rep.tm_requested;
    matched += rep.te_matched + rep.tm_matched;
  }
  const double mean = sum / n;
  report(mean >= kClosedLoopMinMatch, "A7", "closed-loop design",
         fmt("mean notch-match fraction %.4f over %d held-out targets (%d/%d notches pooled) within +-%.1f GHz "
             "(need >= %.2f)",
             mean, n, matched, requested, kClosedLoopFreqTol, kClosedLoopMinMatch));
}

void checkpoint_round_trip(const TrainedRun& run) {
  const auto path = std::filesystem::temp_directory_path() / "metasurf_acceptance.mcnn";
  write_checkpoint_file(path, run.result.network, run.result.adam, kSeed);
  const auto size = std::filesystem::file_size(path);
  const auto loaded = read_checkpoint_file(path);
  std::filesystem::remove(path);

  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix x(kInputWidth, kCheckpointInputs);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
  const Matrix a = run.result.network.infer(x);
  const Matrix b = loaded.network.infer(x);
  int identical = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) identical += a.col(c) == b.col(c);
  report(identical == kCheckpointInputs && size < kMaxCheckpointBytes, "A8", "checkpoint round-trip",
         fmt("%d/%d outputs bit-identical, file %ju bytes (need 100%%, < %ju bytes)", identical, kCheckpointInputs,
             static_cast<std::uintmax_t>(size), kMaxCheckpointBytes));
}

void training_curve_shape(const TrainedRun& run) {
  const auto& rep = run.result.report;
  const double first = rep.train_mse.front();
  const double last = rep.train_mse.back();
  const double ratio = last / first;

  // Means of consecutive non-overlapping 100-epoch windows must never decrease.
  std::vector<double> windows;
  for (std::size_t s = 0; s + kSmoothingWindow <= rep.per_bit_accuracy.size(); s += kSmoothingWindow) {
    double sum = 0.0;
    for (int k = 0; k < kSmoothingWindow; ++k) sum += rep.per_bit_accuracy[s + k];
    windows.push_back(sum / kSmoothingWindow);
  }
  int decreases = 0;
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i] < windows[i - 1]) {
      ++decreases;
      worst_drop = std::max(worst_drop, windows[i - 1] - windows[i]);
    }
  }
  const bool epochs_ok = static_cast<int>(rep.train_mse.size()) == 5000;
  report(epochs_ok && ratio < kMseDropRatio && decreases == 0, "A9", "training-curve shape",
         fmt("train MSE epoch %zu / epoch 1 = %.4f / %.4f = %.3f (need < %.2f); %d of %zu smoothed accuracy "
             "windows decrease, worst drop %.4f (need 0)",
             rep.train_mse.size(), last, first, ratio, kMseDropRatio, decreases, windows.size() - 1, worst_drop));
}

}  // namespace

int main() {
  codec_bijection();
  gradient_correctness();
  surrogate_symmetry();
  feature_fidelity();
  const auto run = end_to_end_training();
  inference_latency(run);
  closed_loop(run);
  checkpoint_round_trip(run);
  training_curve_shape(run);
  std::printf("%d criteria failed\n", failures);
  return failures;
}
