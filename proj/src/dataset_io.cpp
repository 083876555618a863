#include "metasurf/dataset_io.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "metasurf/errors.hpp"
#include "metasurf/io_util.hpp"

namespace metasurf {

using nlohmann::json;

std::string dataset_to_jsonl(const DatasetFile& file) {
  std::string out;
  json header{{"format", "metasurf-dataset"},
              {"version", kDatasetFormatVersion},
              {"master_seed", file.master_seed},
              {"surrogate_version", file.surrogate_version},
              {"count", file.records.size()}};
  out += header.dump();
  out += '\n';
  for (const auto& r : file.records) {
    json tiles = json::array();
    for (auto t : r.cell.tiles) tiles.push_back(t.value());
    json line{{"seed_index", r.seed_index},
              {"tiles", std::move(tiles)},
              {"input", r.input},
              {"label", r.label.to_string()}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

DatasetFile dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DatasetFile file;

  if (!std::getline(in, line)) throw FormatError("dataset is empty", 0);
  ++line_no;
  std::size_t expected = 0;
  try {
    const auto header = json::parse(line);
    if (header.at("format") != "metasurf-dataset") throw FormatError("not a metasurf dataset", 1);
    const int version = header.at("version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw FormatError("unsupported dataset version " + std::to_string(version), 1);
    }
    file.master_seed = header.at("master_seed").get<std::uint64_t>();
    file.surrogate_version = header.at("surrogate_version").get<int>();
    expected = header.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad dataset header: ") + e.what(), 1);
  }
  if (file.surrogate_version != kSurrogateVersion) {
    throw FormatError("dataset was generated with surrogate version " +
                          std::to_string(file.surrogate_version) + ", this build uses " +
                          std::to_string(kSurrogateVersion),
                      1);
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    DatasetRecord r;
    try {
      const auto doc = json::parse(line);
      r.seed_index = doc.at("seed_index").get<std::uint64_t>();
      const auto& tiles = doc.at("tiles");
      const auto& input = doc.at("input");
      if (!tiles.is_array() || tiles.size() != kSlotCount) throw FormatError("expected 16 tiles", line_no);
      if (!input.is_array() || input.size() != kInputWidth) {
        throw FormatError("expected " + std::to_string(kInputWidth) + " input values, got " +
                              std::to_string(input.size()),
                          line_no);
      }
      for (int k = 0; k < kSlotCount; ++k) r.cell.tiles[k] = TileId(tiles[k].get<int>());
      for (int k = 0; k < kInputWidth; ++k) r.input[k] = input[k].get<double>();
      r.label = BitVector48::from_string(doc.at("label").get<std::string>());
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad dataset record: ") + e.what(), line_no);
    } catch (const DomainError& e) {
      throw FormatError(std::string("bad dataset record: ") + e.what(), line_no);
    }
    if (r.label != encode_bits(r.cell)) throw FormatError("label does not encode tiles", line_no);
    file.records.push_back(std::move(r));
  }
  if (file.records.size() != expected) {
    throw FormatError("header announces " + std::to_string(expected) + " records, found " +
                          std::to_string(file.records.size()),
                      line_no);
  }
  return file;
}

void write_dataset_file(const std::filesystem::path& path, const DatasetFile& file) {
  write_file_atomic(path, dataset_to_jsonl(file));
}

DatasetFile read_dataset_file(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_file(path));
}

std::string report_to_csv(const TrainReport& report) {
  std::string out = "epoch,train_mse,test_mse,per_bit_acc\n";
  char line[128];
  for (std::size_t i = 0; i < report.train_mse.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g\n", i + 1, report.train_mse[i],
                  report.test_mse[i], report.per_bit_accuracy[i]);
    out += line;
  }
  return out;
}

}  // namespace metasurf
