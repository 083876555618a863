#include "metasurf/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "metasurf/errors.hpp"
#include "metasurf/io_util.hpp"

namespace metasurf {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'N', 'N'};
constexpr std::uint8_t kKindDense = 0;
constexpr std::uint8_t kKindDropout = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void block(const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) f64(p[i]);
  }
  void matrix(const Matrix& m) {
    // Eigen is column-major; the file stores row-major.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::span<const char> data) : data_(data) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(data_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(data_[pos_++])} << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  void block(double* p, Eigen::Index n, const char* what) {
    need(static_cast<std::size_t>(n) * 8, what);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = f64(what);
  }
  Matrix matrix(Eigen::Index rows, Eigen::Index cols, const char* what) {
    need(static_cast<std::size_t>(rows * cols) * 8, what);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = f64(what);
    }
    return m;
  }

 private:
  std::span<const char> data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(p), chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string save_checkpoint(const Network& net, const AdamState& adam, std::uint64_t seed) {
  if (adam.moments.size() != net.dense_count()) {
    throw DomainError("Adam state does not match the network's dense layers");
  }
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(seed);
  w.u32(static_cast<std::uint32_t>(net.layers().size()));
  Eigen::Index width = net.input_width();
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.u8(kKindDense);
      w.u32(static_cast<std::uint32_t>(d->in_width()));
      w.u32(static_cast<std::uint32_t>(d->out_width()));
      w.u8(static_cast<std::uint8_t>(d->activation));
      w.f64(0.0);
      width = d->out_width();
    } else {
      const auto& p = std::get<DropoutLayer>(layer);
      w.u8(kKindDropout);
      w.u32(static_cast<std::uint32_t>(width));
      w.u32(static_cast<std::uint32_t>(width));
      w.u8(static_cast<std::uint8_t>(Activation::Identity));
      w.f64(p.rate);
    }
  }
  for (const auto& layer : net.layers()) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.matrix(d->weights);
      w.block(d->biases.data(), d->biases.size());
    }
  }
  w.f64(adam.hyper.learning_rate);
  w.f64(adam.hyper.beta1);
  w.f64(adam.hyper.beta2);
  w.f64(adam.hyper.epsilon);
  w.u64(adam.step);
  for (const auto& m : adam.moments) {
    w.matrix(m.m_weights);
    w.matrix(m.v_weights);
    w.block(m.m_biases.data(), m.m_biases.size());
    w.block(m.v_biases.data(), m.v_biases.size());
  }
  const std::uint32_t crc = crc_of(w.str().data(), w.str().size());
  w.u32(crc);
  return std::move(w.str());
}

Checkpoint load_checkpoint(std::span<const char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint: bad magic", 0);
  }
  if (bytes.size() < 8) throw FormatError("checkpoint truncated while reading version", 4);
  if (bytes.size() < 12) throw FormatError("checkpoint truncated", bytes.size());
  {
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) {
      stored |= std::uint32_t{static_cast<std::uint8_t>(bytes[body + i])} << (8 * i);
    }
    Reader version_reader(bytes);
    version_reader.u32("magic");
    const auto version = version_reader.u32("version");
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    }
    if (crc_of(bytes.data(), body) != stored) {
      throw FormatError("checkpoint checksum mismatch (file corrupted or truncated)", body);
    }
  }

  Reader r(bytes.first(bytes.size() - 4));
  r.u32("magic");
  r.u32("version");
  Checkpoint cp;
  cp.seed = r.u64("seed");
  const auto layer_count = r.u32("layer count");

  struct Header {
    std::uint8_t kind;
    std::uint32_t in, out;
    std::uint8_t activation;
    double rate;
  };
  std::vector<Header> headers;
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    const std::size_t at = r.offset();
    Header h{r.u8("layer kind"), r.u32("layer width"), r.u32("layer width"), r.u8("activation"),
             r.f64("dropout rate")};
    if (h.kind > kKindDropout) throw FormatError("unknown layer kind", at);
    if (h.activation > static_cast<std::uint8_t>(Activation::Sigmoid)) {
      throw FormatError("unknown activation", at);
    }
    if (h.kind == kKindDense && (h.in == 0 || h.out == 0)) throw FormatError("zero-width layer", at);
    if (h.kind == kKindDropout && !(h.rate >= 0.0 && h.rate < 1.0)) {
      throw FormatError("dropout rate outside [0, 1)", at);
    }
    headers.push_back(h);
  }

  std::vector<Layer> layers;
  for (const auto& h : headers) {
    if (h.kind == kKindDense) {
      DenseLayer d;
      d.activation = static_cast<Activation>(h.activation);
      d.weights = r.matrix(h.out, h.in, "weights");
      d.biases.resize(h.out);
      r.block(d.biases.data(), h.out, "biases");
      layers.emplace_back(std::move(d));
    } else {
      layers.emplace_back(DropoutLayer{h.rate});
    }
  }
  try {
    cp.network = Network(std::move(layers));
  } catch (const DomainError& e) {
    throw FormatError(std::string("inconsistent topology: ") + e.what(), r.offset());
  }

  cp.adam.hyper.learning_rate = r.f64("adam hyperparameters");
  cp.adam.hyper.beta1 = r.f64("adam hyperparameters");
  cp.adam.hyper.beta2 = r.f64("adam hyperparameters");
  cp.adam.hyper.epsilon = r.f64("adam hyperparameters");
  cp.adam.step = r.u64("adam step");
  for (const auto& h : headers) {
    if (h.kind != kKindDense) continue;
    AdamMoments m;
    m.m_weights = r.matrix(h.out, h.in, "adam moments");
    m.v_weights = r.matrix(h.out, h.in, "adam moments");
    m.m_biases.resize(h.out);
    m.v_biases.resize(h.out);
    r.block(m.m_biases.data(), h.out, "adam moments");
    r.block(m.v_biases.data(), h.out, "adam moments");
    cp.adam.moments.push_back(std::move(m));
  }
  if (r.offset() != bytes.size() - 4) {
    throw FormatError("trailing bytes after checkpoint payload", r.offset());
  }
  return cp;
}

Checkpoint load_checkpoint(const std::string& bytes) {
  return load_checkpoint(std::span<const char>(bytes.data(), bytes.size()));
}

void write_checkpoint_file(const std::filesystem::path& path, const Network& net,
                           const AdamState& adam, std::uint64_t seed) {
  write_file_atomic(path, save_checkpoint(net, adam, seed));
}

Checkpoint read_checkpoint_file(const std::filesystem::path& path) {
  return load_checkpoint(read_file(path));
}

}  // namespace metasurf
