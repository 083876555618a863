#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "metasurf/checkpoint.hpp"
#include "metasurf/errors.hpp"
#include "metasurf/pipeline.hpp"

namespace py = pybind11;
using namespace metasurf;

namespace {

UnitCell to_cell(const std::vector<int>& tiles) {
  if (tiles.size() != kSlotCount) throw DomainError("expected 16 tile ids");
  UnitCell c;
  for (int k = 0; k < kSlotCount; ++k) c.tiles[k] = TileId(tiles[k]);
  return c;
}

std::vector<int> from_cell(const UnitCell& c) {
  std::vector<int> out;
  for (auto t : c.tiles) out.push_back(t.value());
  return out;
}

Polarization to_pol(const std::string& name) {
  if (name == "TE") return Polarization::TE;
  if (name == "TM") return Polarization::TM;
  throw DomainError("polarization must be 'TE' or 'TM'");
}

py::list features_to_py(const std::vector<NotchFeature>& list) {
  py::list out;
  for (const auto& f : list) {
    py::dict d;
    d["freq_ghz"] = f.frequency;
    d["depth_db"] = f.depth;
    d["bandwidth_ghz"] = f.bandwidth;
    out.append(d);
  }
  return out;
}

py::dict target_to_py(const DesignTarget& t) {
  py::dict d;
  d["te"] = features_to_py(t.te);
  d["tm"] = features_to_py(t.tm);
  return d;
}

DesignTarget target_from_py(const py::dict& d) {
  DesignTarget t;
  for (const char* key : {"te", "tm"}) {
    if (!d.contains(key)) continue;
    auto& list = std::string(key) == "te" ? t.te : t.tm;
    for (const auto& item : d[key]) {
      const auto f = item.cast<py::dict>();
      list.push_back({f["freq_ghz"].cast<double>(), f["depth_db"].cast<double>(),
                      f["bandwidth_ghz"].cast<double>()});
    }
    std::stable_sort(list.begin(), list.end(),
                     [](const auto& a, const auto& b) { return a.frequency < b.frequency; });
  }
  return t;
}

// Trained network plus optimizer state, as handed to Python.
struct Model {
  Network network;
  AdamState adam;
  std::uint64_t seed = 0;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Confined-output inverse metasurface designer";

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.attr("INPUT_WIDTH") = kInputWidth;
  m.attr("CODE_BITS") = kCodeBits;

  m.def("tile_pattern", [](int id) {
    const auto p = tile_pattern(TileId(id));
    py::array_t<std::uint8_t> out({kTileSize, kTileSize});
    auto v = out.mutable_unchecked<2>();
    for (int i = 0; i < kTileSize; ++i)
      for (int j = 0; j < kTileSize; ++j) v(i, j) = p.cells[i][j];
    return out;
  }, py::arg("id"));

  m.def("compose", [](const std::vector<int>& tiles) {
    const auto mat = compose(to_cell(tiles));
    py::array_t<std::uint8_t> out({kMatrixSize, kMatrixSize});
    auto v = out.mutable_unchecked<2>();
    for (int i = 0; i < kMatrixSize; ++i)
      for (int j = 0; j < kMatrixSize; ++j) v(i, j) = mat.at(i, j);
    return out;
  }, py::arg("tiles"));

  m.def("encode_bits", [](const std::vector<int>& tiles) { return encode_bits(to_cell(tiles)).to_string(); },
        py::arg("tiles"));
  m.def("decode_bits", [](const std::string& bits) { return from_cell(decode_bits(BitVector48::from_string(bits))); },
        py::arg("bits"));
  m.def("decode_soft", [](const std::vector<double>& a) { return decode_soft(a).to_string(); },
        py::arg("activations"));
  m.def("render", [](const std::vector<int>& tiles, const std::string& format) {
    return py::bytes(render(to_cell(tiles), parse_render_format(format)));
  }, py::arg("tiles"), py::arg("format") = "ascii");

  m.def("frequencies", [] {
    Eigen::VectorXd f(kSampleCount);
    for (int i = 0; i < kSampleCount; ++i) f(i) = grid_frequency(i);
    return f;
  });
  m.def("notch_params", [](const std::vector<int>& tiles, const std::string& pol) {
    std::vector<std::tuple<double, double, double>> out;
    for (const auto& n : notch_params(to_cell(tiles), to_pol(pol))) out.emplace_back(n.center, n.depth, n.halfwidth);
    return out;
  }, py::arg("tiles"), py::arg("pol"));
  m.def("reflection_spectrum", [](const std::vector<int>& tiles, const std::string& pol) {
    const auto s = reflection_spectrum(to_cell(tiles), to_pol(pol));
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(s.samples.data(), kSampleCount));
  }, py::arg("tiles"), py::arg("pol"));
  m.def("extract_notches", [](const std::vector<double>& samples) { return features_to_py(extract_notches(samples)); },
        py::arg("samples"));
  m.def("target_of_cell", [](const std::vector<int>& tiles) { return target_to_py(target_of_cell(to_cell(tiles))); },
        py::arg("tiles"));
  m.def("assemble_input", [](const py::dict& target) {
    const auto v = assemble_input(target_from_py(target));
    return std::vector<double>(v.begin(), v.end());
  }, py::arg("target"));

  m.def("generate_dataset", [](std::size_t n, std::uint64_t seed) {
    const auto records = generate_dataset(n, seed);
    Eigen::MatrixXi tiles(static_cast<Eigen::Index>(n), kSlotCount);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < kSlotCount; ++k) tiles(static_cast<Eigen::Index>(i), k) = records[i].cell.tiles[k].value();
    Eigen::MatrixXd inputs = inputs_matrix(records).transpose();
    Eigen::MatrixXd labels = labels_matrix(records).transpose();
    return py::make_tuple(inputs, labels, tiles);
  }, py::arg("n"), py::arg("seed"), "Returns (inputs [n,24], labels [n,48], tiles [n,16]).");

  m.def("verify_design", [](const std::vector<int>& tiles, const py::dict& target, double tol) {
    const auto r = verify_design(to_cell(tiles), target_from_py(target), {tol});
    py::dict d;
    d["te_requested"] = r.te_requested;
    d["te_matched"] = r.te_matched;
    d["tm_requested"] = r.tm_requested;
    d["tm_matched"] = r.tm_matched;
    d["overall_fraction"] = r.overall_fraction;
    d["achieved"] = target_to_py(r.achieved);
    return d;
  }, py::arg("tiles"), py::arg("target"), py::arg("tolerance_ghz") = 0.5);

  py::class_<Model>(m, "Model")
      .def_static("load", [](const std::string& path) {
        auto cp = read_checkpoint_file(path);
        return Model{std::move(cp.network), std::move(cp.adam), cp.seed};
      }, py::arg("path"))
      .def("save", [](const Model& self, const std::string& path) {
        write_checkpoint_file(path, self.network, self.adam, self.seed);
      }, py::arg("path"))
      .def_property_readonly("parameter_count", [](const Model& self) { return self.network.parameter_count(); })
      .def_property_readonly("layer_count", [](const Model& self) { return self.network.layers().size(); })
      .def("infer", [](const Model& self, const Eigen::MatrixXd& inputs) {
        if (inputs.cols() != self.network.input_width()) throw DomainError("input width mismatch");
        return Eigen::MatrixXd(self.network.infer(Eigen::MatrixXd(inputs.transpose())).transpose());
      }, py::arg("inputs"), "Row-per-sample inference.")
      .def("design", [](const Model& self, const py::dict& target) {
        const auto r = design(self.network, target_from_py(target));
        py::dict d;
        d["tiles"] = from_cell(r.cell);
        d["code"] = r.code.to_string();
        d["seconds"] = r.seconds;
        return d;
      }, py::arg("target"));

  m.def("train", [](std::size_t n, std::uint64_t seed, int epochs, double lr, double dropout, double ratio,
                    std::vector<int> hidden) {
    const auto records = generate_dataset(n, seed);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    cfg.learning_rate = lr;
    cfg.dropout = dropout;
    cfg.split_ratio = ratio;
    cfg.hidden_widths = std::move(hidden);
    const auto parts = split(records, ratio, seed);
    TrainResult result;
    {
      py::gil_scoped_release release;
      result = train(parts.train, parts.test, cfg);
    }
    const auto metrics = evaluate(result.network, parts.test);
    py::dict rep;
    rep["train_mse"] = result.report.train_mse;
    rep["test_mse"] = result.report.test_mse;
    rep["per_bit_acc"] = result.report.per_bit_accuracy;
    rep["best_epoch"] = result.report.best_epoch;
    rep["seconds"] = result.report.seconds;
    rep["test_per_bit"] = metrics.per_bit_accuracy;
    rep["test_per_slot"] = metrics.per_slot_accuracy;
    rep["test_exact_cell"] = metrics.exact_cell_rate;
    return py::make_tuple(Model{std::move(result.network), std::move(result.adam), seed}, rep);
  }, py::arg("n") = 2000, py::arg("seed") = 42, py::arg("epochs") = 5000, py::arg("lr") = 1e-3,
     py::arg("dropout") = 0.2, py::arg("split") = 0.7,
     py::arg("hidden") = std::vector<int>{64, 128, 256, 256, 128},
     "Generate a dataset, split it and train; returns (Model, report).");
}
