#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metasurf/checkpoint.hpp"
#include "metasurf/dataset_io.hpp"
#include "metasurf/errors.hpp"
#include "metasurf/io_util.hpp"
#include "metasurf/pipeline.hpp"

namespace metasurf::cli {

namespace fs = std::filesystem;

namespace {

struct GenOptions {
  std::size_t count = 2000;
  std::uint64_t seed = 42;
  std::string out;
};

struct TrainOptions {
  std::string dataset;
  std::string model_out = "model.mcnn";
  std::string report_out = "report.csv";
  TrainConfig config;
  int patience = 0;
  bool quiet = false;
};

struct EvalOptions {
  std::string model;
  std::string dataset;
  std::string subset = "all";
  double split = 0.7;
  std::uint64_t seed = 42;
  bool oracle_stub = false;
};

struct InferOptions {
  std::string model;
  std::string target;
  std::string out_prefix = "design";
  double tolerance = 0.5;
};

struct ForwardOptions {
  std::string tiles;
  std::string bits;
  std::string out;
};

struct RenderOptions {
  std::string tiles;
  std::string bits;
  std::string format = "ascii";
  std::string out;
};

void require_readable(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " '" + path + "' does not exist");
}

void require_writable_parent(const std::string& path) {
  const auto parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) {
    throw UsageError("output directory '" + parent.string() + "' does not exist");
  }
}

UnitCell cell_from_flags(const std::string& tiles, const std::string& bits) {
  if (tiles.empty() == bits.empty()) throw UsageError("give exactly one of --tiles or --bits");
  try {
    return tiles.empty() ? decode_bits(BitVector48::from_string(bits)) : parse_tiles(tiles);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

std::string format_features(const std::vector<NotchFeature>& list) {
  std::string s;
  char buf[96];
  for (const auto& f : list) {
    std::snprintf(buf, sizeof buf, "  %.4f GHz  %.3f dB  bw %.4f GHz\n", f.frequency, f.depth,
                  f.bandwidth);
    s += buf;
  }
  return s.empty() ? "  (none)\n" : s;
}

int cmd_gen(const GenOptions& o, std::ostream& out) {
  require_writable_parent(o.out);
  const auto start = std::chrono::steady_clock::now();
  DatasetFile file;
  file.master_seed = o.seed;
  file.records = generate_dataset(o.count, o.seed);
  write_dataset_file(o.out, file);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << "records=" << file.records.size() << "\nelapsed_s=" << secs << "\n";
  return kExitOk;
}

int cmd_train(TrainOptions o, std::ostream& out) {
  require_readable(o.dataset, "dataset");
  require_writable_parent(o.model_out);
  require_writable_parent(o.report_out);
  if (o.patience > 0) o.config.patience = o.patience;

  const auto file = read_dataset_file(o.dataset);
  const auto parts = split(file.records, o.config.split_ratio, o.config.seed);
  if (parts.train.empty() || parts.test.empty()) {
    throw UsageError("split leaves an empty train or test set; use more records");
  }
  EpochCallback progress;
  if (!o.quiet) {
    progress = [&out, total = o.config.epochs](int epoch, double tr, double te, double acc) {
      if (epoch == 1 || epoch % 250 == 0 || epoch == total) {
        out << "epoch " << epoch << " train_mse=" << tr << " test_mse=" << te
            << " per_bit_acc=" << acc << std::endl;
      }
    };
  }
  const auto result = train(parts.train, parts.test, o.config, progress);
  write_checkpoint_file(o.model_out, result.network, result.adam, o.config.seed);
  write_file_atomic(o.report_out, report_to_csv(result.report));

  const Metrics m = evaluate(result.network, parts.test);
  out << "epochs_run=" << result.report.train_mse.size() << "\n"
      << "best_epoch=" << result.report.best_epoch << "\n"
      << "per_bit=" << m.per_bit_accuracy << "\n"
      << "per_slot=" << m.per_slot_accuracy << "\n"
      << "exact_cell=" << m.exact_cell_rate << "\n"
      << "mse=" << m.mse << "\n"
      << "baseline_per_bit=" << constant_baseline_accuracy(parts.test) << "\n"
      << "training_s=" << result.report.seconds << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  require_readable(o.dataset, "dataset");
  if (!o.oracle_stub) require_readable(o.model, "model");
  const auto file = read_dataset_file(o.dataset);
  std::vector<DatasetRecord> records;
  if (o.subset == "all") {
    records = file.records;
  } else {
    auto parts = split(file.records, o.split, o.seed);
    records = o.subset == "test" ? std::move(parts.test) : std::move(parts.train);
  }

  Metrics m;
  if (o.oracle_stub) {
    m = evaluate_outputs(labels_matrix(records), records);
  } else {
    const auto cp = read_checkpoint_file(o.model);
    if (cp.network.input_width() != kInputWidth || cp.network.output_width() != kCodeBits) {
      throw DomainError("model expects " + std::to_string(cp.network.input_width()) + " inputs and " +
                        std::to_string(cp.network.output_width()) + " outputs; this build uses " +
                        std::to_string(kInputWidth) + " -> " + std::to_string(kCodeBits));
    }
    m = evaluate(cp.network, records);
  }
  out << "records=" << records.size() << "\n"
      << "per_bit=" << m.per_bit_accuracy << "\n"
      << "per_slot=" << m.per_slot_accuracy << "\n"
      << "exact_cell=" << m.exact_cell_rate << "\n"
      << "mse=" << m.mse << "\n";
  return kExitOk;
}

int cmd_infer(const InferOptions& o, std::ostream& out) {
  require_readable(o.model, "model");
  require_readable(o.target, "target");
  require_writable_parent(o.out_prefix + ".code.txt");

  DesignTarget target;
  try {
    target = parse_target(read_file(o.target));
    assemble_input(target);
  } catch (const DomainError& e) {
    throw UsageError(std::string("malformed target: ") + e.what());
  } catch (const FormatError& e) {
    throw UsageError(std::string("malformed target: ") + e.what());
  }
  const auto cp = read_checkpoint_file(o.model);
  const auto result = design(cp.network, target);
  const auto report = verify_design(result.cell, target, {o.tolerance});

  const auto te = reflection_spectrum(result.cell, Polarization::TE);
  const auto tm = reflection_spectrum(result.cell, Polarization::TM);
  std::ostringstream csv;
  write_spectra_csv(csv, te, tm);

  nlohmann::json verification{{"te_requested", report.te_requested},
                              {"te_matched", report.te_matched},
                              {"tm_requested", report.tm_requested},
                              {"tm_matched", report.tm_matched},
                              {"te_fraction", report.te_fraction},
                              {"tm_fraction", report.tm_fraction},
                              {"overall_fraction", report.overall_fraction},
                              {"tolerance_ghz", o.tolerance},
                              {"achieved", nlohmann::json::parse(target_to_json(report.achieved))}};

  write_file_atomic(o.out_prefix + ".code.txt", result.code.to_string() + "\n");
  write_file_atomic(o.out_prefix + ".tiles.txt", result.cell.to_string() + "\n");
  write_file_atomic(o.out_prefix + ".ascii.txt", render(result.cell, RenderFormat::Ascii));
  write_file_atomic(o.out_prefix + ".pgm", render(result.cell, RenderFormat::Pgm));
  write_file_atomic(o.out_prefix + ".spectra.csv", csv.str());
  write_file_atomic(o.out_prefix + ".verify.json", verification.dump(2) + "\n");

  out << "code=" << result.code.to_string() << "\n"
      << "tiles=" << result.cell.to_string() << "\n"
      << "te_match=" << report.te_matched << "/" << report.te_requested << "\n"
      << "tm_match=" << report.tm_matched << "/" << report.tm_requested << "\n"
      << "overall_fraction=" << report.overall_fraction << "\n"
      << "inference_s=" << result.seconds << "\n";
  return kExitOk;
}

int cmd_forward(const ForwardOptions& o, std::ostream& out) {
  const UnitCell cell = cell_from_flags(o.tiles, o.bits);
  if (!o.out.empty()) require_writable_parent(o.out);
  const auto te = reflection_spectrum(cell, Polarization::TE);
  const auto tm = reflection_spectrum(cell, Polarization::TM);
  std::ostringstream csv;
  write_spectra_csv(csv, te, tm);
  if (o.out.empty()) {
    out << csv.str();
  } else {
    write_file_atomic(o.out, csv.str());
  }
  out << "# tiles=" << cell.to_string() << "\n# TE notches\n"
      << format_features(extract_notches(te)) << "# TM notches\n"
      << format_features(extract_notches(tm));
  return kExitOk;
}

int cmd_render(const RenderOptions& o, std::ostream& out) {
  const UnitCell cell = cell_from_flags(o.tiles, o.bits);
  const auto format = parse_render_format(o.format);
  const auto bytes = render(cell, format);
  if (o.out.empty()) {
    if (format == RenderFormat::Pgm) throw UsageError("pgm output needs --out");
    out << bytes;
  } else {
    require_writable_parent(o.out);
    write_file_atomic(o.out, bytes);
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Confined-output inverse metasurface designer"};
  app.name("metasurf");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled dataset with the surrogate model");
  gen_cmd->add_option("--count", gen.count, "Number of records")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Master seed");
  gen_cmd->add_option("--out", gen.out, "Output dataset (.jsonl)")->required();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the network on a dataset");
  train_cmd->add_option("--dataset", tr.dataset, "Dataset file")->required();
  train_cmd->add_option("--epochs", tr.config.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.config.learning_rate, "Adam learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--dropout", tr.config.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.999));
  train_cmd->add_option("--split", tr.config.split_ratio, "Training fraction")->check(CLI::Range(0.01, 0.99));
  train_cmd->add_option("--batch-size", tr.config.batch_size, "Mini-batch size (0 = full batch)");
  train_cmd->add_option("--patience", tr.patience, "Early-stop patience in epochs (0 = off)");
  train_cmd->add_option("--seed", tr.config.seed, "Master seed");
  train_cmd->add_option("--model-out", tr.model_out, "Checkpoint output");
  train_cmd->add_option("--report-out", tr.report_out, "Per-epoch CSV report");
  train_cmd->add_flag("--quiet", tr.quiet, "Suppress per-epoch progress");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a dataset");
  eval_cmd->add_option("--model", ev.model, "Checkpoint");
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset file")->required();
  eval_cmd->add_option("--subset", ev.subset, "all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  eval_cmd->add_option("--split", ev.split, "Training fraction used for --subset");
  eval_cmd->add_option("--seed", ev.seed, "Split seed used for --subset");
  eval_cmd->add_flag("--oracle-stub", ev.oracle_stub, "Score the labels themselves (test hook)");

  InferOptions inf;
  auto* infer_cmd = app.add_subcommand("infer", "Design a unit cell for a target document");
  infer_cmd->add_option("--model", inf.model, "Checkpoint")->required();
  infer_cmd->add_option("--target", inf.target, "Target JSON document")->required();
  infer_cmd->add_option("--out-prefix", inf.out_prefix, "Prefix for output artifacts");
  infer_cmd->add_option("--tolerance", inf.tolerance, "Frequency match tolerance (GHz)");

  ForwardOptions fw;
  auto* fwd_cmd = app.add_subcommand("forward", "Simulate the surrogate spectra of a cell");
  fwd_cmd->add_option("--tiles", fw.tiles, "16 comma-separated tile ids");
  fwd_cmd->add_option("--bits", fw.bits, "48-character bit string");
  fwd_cmd->add_option("--out", fw.out, "Spectra CSV output (default: stdout)");

  RenderOptions rd;
  auto* render_cmd = app.add_subcommand("render", "Render a cell as ASCII or PGM");
  render_cmd->add_option("--tiles", rd.tiles, "16 comma-separated tile ids");
  render_cmd->add_option("--bits", rd.bits, "48-character bit string");
  render_cmd->add_option("--format", rd.format, "ascii or pgm");
  render_cmd->add_option("--out", rd.out, "Output file (default: stdout, ascii only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*eval_cmd) {
      if (!ev.oracle_stub && ev.model.empty()) throw UsageError("eval needs --model or --oracle-stub");
      return cmd_eval(ev, out);
    }
    if (*infer_cmd) return cmd_infer(inf, out);
    if (*fwd_cmd) return cmd_forward(fw, out);
    if (*render_cmd) return cmd_render(rd, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace metasurf::cli
