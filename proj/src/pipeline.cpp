#include "metasurf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "metasurf/errors.hpp"

namespace metasurf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream constants so that init, shuffling and dropout draw from unrelated generators.
constexpr std::uint64_t kInitStream = 0x1d1;
constexpr std::uint64_t kDropoutStream = 0xd0d;
constexpr std::uint64_t kBatchStream = 0xba7;

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t record_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return mix64(mix64(master_seed) ^ index);
}

UnitCell random_cell(std::uint64_t sub_seed) noexcept {
  UnitCell cell;
  for (int k = 0; k < kSlotCount; ++k) {
    cell.tiles[k] = TileId(static_cast<int>((sub_seed >> (3 * k)) & 7));
  }
  return cell;
}

DatasetRecord make_record(const UnitCell& cell, std::uint64_t seed_index) {
  DatasetRecord r;
  r.cell = cell;
  r.label = encode_bits(cell);
  r.input = assemble_input(target_of_cell(cell));
  r.seed_index = seed_index;
  return r;
}

std::vector<DatasetRecord> generate_dataset(std::size_t n, std::uint64_t master_seed) {
  if (n == 0) throw DomainError("dataset size must be at least 1");
  std::vector<DatasetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(make_record(random_cell(record_seed(master_seed, i)), i));
  }
  return out;
}

Split split(const std::vector<DatasetRecord>& records, double ratio, std::uint64_t seed) {
  if (records.empty()) throw DomainError("cannot split an empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must lie in (0, 1)");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(seed));
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::floor(records.size() * ratio));
  Split s;
  s.train.reserve(n_train);
  s.test.reserve(records.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? s.train : s.test).push_back(records[order[i]]);
  }
  return s;
}

Matrix inputs_matrix(std::span<const DatasetRecord> records) {
  Matrix m(kInputWidth, static_cast<Eigen::Index>(records.size()));
  for (std::size_t c = 0; c < records.size(); ++c) {
    for (int r = 0; r < kInputWidth; ++r) m(r, static_cast<Eigen::Index>(c)) = records[c].input[r];
  }
  return m;
}

Matrix labels_matrix(std::span<const DatasetRecord> records) {
  Matrix m(kCodeBits, static_cast<Eigen::Index>(records.size()));
  for (std::size_t c = 0; c < records.size(); ++c) {
    for (int r = 0; r < kCodeBits; ++r) m(r, static_cast<Eigen::Index>(c)) = records[c].label.bits[r];
  }
  return m;
}

Metrics evaluate_outputs(const Matrix& outputs, std::span<const DatasetRecord> records) {
  if (outputs.rows() != kCodeBits) {
    throw DomainError("expected 48 outputs per record, got " + std::to_string(outputs.rows()));
  }
  if (outputs.cols() != static_cast<Eigen::Index>(records.size())) {
    throw DomainError("output count does not match record count");
  }
  if (records.empty()) throw DomainError("cannot evaluate an empty set");

  std::size_t bits_ok = 0, slots_ok = 0, cells_ok = 0;
  for (std::size_t c = 0; c < records.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const auto bits = decode_soft(std::span<const double>(outputs.col(col).data(), kCodeBits));
    bool cell_ok = true;
    for (int k = 0; k < kSlotCount; ++k) {
      bool slot_ok = true;
      for (int b = 0; b < kBitsPerSlot; ++b) {
        const int i = k * kBitsPerSlot + b;
        const bool ok = bits.bits[i] == records[c].label.bits[i];
        bits_ok += ok;
        slot_ok = slot_ok && ok;
      }
      slots_ok += slot_ok;
      cell_ok = cell_ok && slot_ok;
    }
    cells_ok += cell_ok;
  }
  const double n = static_cast<double>(records.size());
  Metrics m;
  m.per_bit_accuracy = bits_ok / (n * kCodeBits);
  m.per_slot_accuracy = slots_ok / (n * kSlotCount);
  m.exact_cell_rate = cells_ok / n;
  m.mse = mse(outputs, labels_matrix(records));
  return m;
}

Metrics evaluate(const Network& net, std::span<const DatasetRecord> records) {
  if (net.input_width() != kInputWidth) {
    throw DomainError("network input width " + std::to_string(net.input_width()) +
                      " does not match feature width " + std::to_string(kInputWidth));
  }
  return evaluate_outputs(net.infer(inputs_matrix(records)), records);
}

double constant_baseline_accuracy(std::span<const DatasetRecord> records) {
  if (records.empty()) throw DomainError("cannot compute a baseline on an empty set");
  std::size_t correct = 0;
  for (int i = 0; i < kCodeBits; ++i) {
    std::size_t ones = 0;
    for (const auto& r : records) ones += r.label.bits[i];
    correct += std::max(ones, records.size() - ones);
  }
  return static_cast<double>(correct) / (static_cast<double>(records.size()) * kCodeBits);
}

TrainResult train(const std::vector<DatasetRecord>& train_set,
                  const std::vector<DatasetRecord>& test_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.empty() || test_set.empty()) throw DomainError("train and test sets must be non-empty");
  if (config.epochs < 1) throw DomainError("epochs must be at least 1");

  const auto start = Clock::now();
  NetworkSpec spec;
  spec.input_width = kInputWidth;
  spec.output_width = kCodeBits;
  spec.hidden_widths = config.hidden_widths;
  spec.dropout_rate = config.dropout;

  TrainResult result;
  Network net = Network::build(spec, record_seed(config.seed, kInitStream));
  AdamHyper hyper;
  hyper.learning_rate = config.learning_rate;
  AdamState adam = make_adam_state(net, hyper);
  Rng dropout_rng(record_seed(config.seed, kDropoutStream));
  Rng batch_rng(record_seed(config.seed, kBatchStream));

  const Matrix x_train = inputs_matrix(train_set);
  const Matrix y_train = labels_matrix(train_set);
  const Matrix x_test = inputs_matrix(test_set);
  const auto n_train = static_cast<Eigen::Index>(train_set.size());
  const Eigen::Index batch =
      config.batch_size == 0 ? n_train
                             : std::min<Eigen::Index>(n_train, static_cast<Eigen::Index>(config.batch_size));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);

  double best_acc = -1.0;
  double best_test_mse = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    int batches = 0;
    if (batch == n_train) {
      const Matrix out = net.forward_train(x_train, dropout_rng);
      loss_sum = mse(out, y_train);
      batches = 1;
      adam_step(net, net.backward(y_train), adam);
    } else {
      std::shuffle(order.begin(), order.end(), batch_rng);
      for (Eigen::Index b0 = 0; b0 < n_train; b0 += batch) {
        const Eigen::Index len = std::min(batch, n_train - b0);
        Matrix xb(kInputWidth, len), yb(kCodeBits, len);
        for (Eigen::Index j = 0; j < len; ++j) {
          xb.col(j) = x_train.col(order[static_cast<std::size_t>(b0 + j)]);
          yb.col(j) = y_train.col(order[static_cast<std::size_t>(b0 + j)]);
        }
        const Matrix out = net.forward_train(xb, dropout_rng);
        loss_sum += mse(out, yb);
        ++batches;
        adam_step(net, net.backward(yb), adam);
      }
    }
    const double train_loss = loss_sum / batches;
    if (!std::isfinite(train_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            ": non-finite loss (learning rate " +
                            std::to_string(config.learning_rate) + ")");
    }

    const Matrix test_out = net.infer(x_test);
    if (!test_out.allFinite()) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            ": non-finite network outputs");
    }
    const Metrics m = evaluate_outputs(test_out, test_set);
    result.report.train_mse.push_back(train_loss);
    result.report.test_mse.push_back(m.mse);
    result.report.per_bit_accuracy.push_back(m.per_bit_accuracy);
    if (on_epoch) on_epoch(epoch, train_loss, m.mse, m.per_bit_accuracy);

    if (m.per_bit_accuracy > best_acc) {
      best_acc = m.per_bit_accuracy;
      result.network = net;
      result.report.best_epoch = epoch;
    }
    if (config.patience) {
      if (m.mse < best_test_mse - 1e-6) {
        best_test_mse = m.mse;
        stalled = 0;
      } else if (++stalled >= *config.patience) {
        break;
      }
    }
  }
  net.clear_trace();
  result.network.clear_trace();
  result.adam = std::move(adam);
  result.report.seconds = seconds_since(start);
  return result;
}

DesignResult design(const Network& net, const DesignTarget& target) {
  const auto start = Clock::now();
  const InputVector input = assemble_input(target);
  if (net.input_width() != kInputWidth || net.output_width() != kCodeBits) {
    throw DomainError("network shape does not match the 24 -> 48 design interface");
  }
  const Vector out = net.infer(Vector(Eigen::Map<const Vector>(input.data(), kInputWidth)));
  DesignResult r;
  r.code = decode_soft(std::span<const double>(out.data(), kCodeBits));
  r.cell = decode_bits(r.code);
  r.seconds = seconds_since(start);
  return r;
}

VerificationReport verify_design(const UnitCell& cell, const DesignTarget& target,
                                 const Tolerances& tol) {
  VerificationReport rep;
  rep.achieved = target_of_cell(cell);
  // Match against every extracted notch, not just the truncated set.
  const auto te_all = extract_notches(reflection_spectrum(cell, Polarization::TE));
  const auto tm_all = extract_notches(reflection_spectrum(cell, Polarization::TM));

  auto count_matches = [&](const std::vector<NotchFeature>& requested,
                           const std::vector<NotchFeature>& available) {
    int matched = 0;
    for (const auto& want : requested) {
      const bool hit = std::any_of(available.begin(), available.end(), [&](const NotchFeature& got) {
        return std::abs(got.frequency - want.frequency) <= tol.frequency_ghz &&
               got.depth <= kNotchThresholdDb;
      });
      matched += hit;
    }
    return matched;
  };

  rep.te_requested = static_cast<int>(target.te.size());
  rep.tm_requested = static_cast<int>(target.tm.size());
  rep.te_matched = count_matches(target.te, te_all);
  rep.tm_matched = count_matches(target.tm, tm_all);
  if (rep.te_requested) rep.te_fraction = static_cast<double>(rep.te_matched) / rep.te_requested;
  if (rep.tm_requested) rep.tm_fraction = static_cast<double>(rep.tm_matched) / rep.tm_requested;
  const int requested = rep.te_requested + rep.tm_requested;
  if (requested) rep.overall_fraction = static_cast<double>(rep.te_matched + rep.tm_matched) / requested;
  return rep;
}

}  // namespace metasurf
