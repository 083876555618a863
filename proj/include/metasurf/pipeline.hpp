#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "metasurf/features.hpp"
#include "metasurf/geometry.hpp"
#include "metasurf/neural.hpp"

namespace metasurf {

struct DatasetRecord {
  InputVector input{};
  BitVector48 label;
  UnitCell cell;
  std::uint64_t seed_index = 0;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// SplitMix64 finalizer; also used to derive per-record sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

/// Unit cell whose 16 tile ids are the low 48 bits of the record's sub-seed.
UnitCell random_cell(std::uint64_t sub_seed) noexcept;

DatasetRecord make_record(const UnitCell& cell, std::uint64_t seed_index);

/// Record i depends only on (master_seed, i).
std::vector<DatasetRecord> generate_dataset(std::size_t n, std::uint64_t master_seed);

struct Split {
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> test;
};

/// Seeded shuffle, then floor(n * ratio) records go to train.
Split split(const std::vector<DatasetRecord>& records, double ratio, std::uint64_t seed);

struct TrainConfig {
  int epochs = 5000;
  double learning_rate = 1e-3;
  double dropout = 0.2;
  double split_ratio = 0.7;
  std::size_t batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 42;
  std::optional<int> patience;  // early stop on stalled test MSE
  std::vector<int> hidden_widths{64, 128, 256, 256, 128};
};

struct TrainReport {
  std::vector<double> train_mse;  // train-mode (dropout active) loss, averaged over batches
  std::vector<double> test_mse;
  std::vector<double> per_bit_accuracy;  // on the test set
  double seconds = 0.0;
  int best_epoch = 0;  // 1-based
};

struct TrainResult {
  Network network;  // best-test-accuracy snapshot
  AdamState adam;
  TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double train_mse, double test_mse, double acc)>;

/// Throws DivergenceError on a non-finite loss.
TrainResult train(const std::vector<DatasetRecord>& train_set,
                  const std::vector<DatasetRecord>& test_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct Metrics {
  double per_bit_accuracy = 0.0;
  double per_slot_accuracy = 0.0;
  double exact_cell_rate = 0.0;
  double mse = 0.0;
};

Matrix inputs_matrix(std::span<const DatasetRecord> records);
Matrix labels_matrix(std::span<const DatasetRecord> records);

/// Metrics for precomputed outputs (one 48-wide column per record).
Metrics evaluate_outputs(const Matrix& outputs, std::span<const DatasetRecord> records);
Metrics evaluate(const Network& net, std::span<const DatasetRecord> records);

/// Accuracy of the best constant predictor on `records`: per-bit majority vote.
double constant_baseline_accuracy(std::span<const DatasetRecord> records);

struct DesignResult {
  UnitCell cell;
  BitVector48 code;
  double seconds = 0.0;
};

DesignResult design(const Network& net, const DesignTarget& target);

struct Tolerances {
  double frequency_ghz = 0.5;
};

struct VerificationReport {
  int te_requested = 0, te_matched = 0;
  int tm_requested = 0, tm_matched = 0;
  double te_fraction = 1.0;
  double tm_fraction = 1.0;
  double overall_fraction = 1.0;  // pooled over both polarizations
  DesignTarget achieved;
};

/// A requested notch matches when the cell's forward spectrum has a qualifying
/// notch within the frequency tolerance. Empty requests match vacuously.
VerificationReport verify_design(const UnitCell& cell, const DesignTarget& target,
                                 const Tolerances& tol = {});

}  // namespace metasurf
