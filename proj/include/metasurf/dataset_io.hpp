#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "metasurf/pipeline.hpp"

namespace metasurf {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetFile {
  std::uint64_t master_seed = 0;
  int surrogate_version = kSurrogateVersion;
  std::vector<DatasetRecord> records;
};

/// JSON lines. First line is the header
///   {"format":"metasurf-dataset","version":1,"master_seed":S,"surrogate_version":V,"count":N}
/// then one record per line:
///   {"seed_index":i,"tiles":[16 ints],"input":[24 reals],"label":"<48 chars of 0/1>"}
std::string dataset_to_jsonl(const DatasetFile& file);

/// Throws FormatError (offset = 1-based line number) on malformed content,
/// version mismatch or records inconsistent with their tiles.
DatasetFile dataset_from_jsonl(const std::string& text);

void write_dataset_file(const std::filesystem::path& path, const DatasetFile& file);
DatasetFile read_dataset_file(const std::filesystem::path& path);

/// CSV with header `epoch,train_mse,test_mse,per_bit_acc`.
std::string report_to_csv(const TrainReport& report);

}  // namespace metasurf
