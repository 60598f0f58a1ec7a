#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pbpa/attention.hpp"
#include "pbpa/geometry.hpp"
#include "pbpa/gradcheck.hpp"
#include "pbpa/metrics.hpp"
#include "pbpa/model.hpp"
#include "pbpa/pooling.hpp"
#include "pbpa/synthdata.hpp"
#include "pbpa/tensor.hpp"

namespace py = pybind11;
using namespace pbpa;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  std::vector<int> shape(arr.ndim());
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape[static_cast<size_t>(i)] = static_cast<int>(arr.shape(i));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data(), t.data() + t.size(), out.mutable_data());
  return out;
}

BoundingBox box_from_tuple(const py::tuple& tup) {
  if (tup.size() != 4) throw ContractError("box: expected (r, c, h, w)");
  return BoundingBox{tup[0].cast<double>(), tup[1].cast<double>(), tup[2].cast<double>(), tup[3].cast<double>()};
}

}  // namespace

PYBIND11_MODULE(_pbpa, m) {
  m.doc() = "pairwise body-part attention layers: pooling, selection, training";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);

  // geometry
  m.def("enumerate_pairs", &enumerate_pairs, py::arg("n"));
  m.def("pair_index", [](int i, int j) { return pair_index(i, j); }, py::arg("i"), py::arg("j"));
  m.def("pair_name", &pair_name, py::arg("pair_index"));
  m.def("part_names", [] { return std::vector<std::string>(part_names().begin(), part_names().end()); });
  m.def(
      "union_box",
      [](const py::tuple& a, const py::tuple& b) {
        const BoundingBox u = union_box(box_from_tuple(a), box_from_tuple(b));
        return py::make_tuple(u.r, u.c, u.h, u.w);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "project_to_feature",
      [](const py::tuple& box, int stride, int fmap_h, int fmap_w) -> py::object {
        const BoundingBox p = project_to_feature(box_from_tuple(box), stride, fmap_h, fmap_w);
        if (p.empty) return py::none();
        return py::make_tuple(p.r, p.c, p.h, p.w);
      },
      py::arg("box"), py::arg("stride"), py::arg("fmap_h"), py::arg("fmap_w"));

  // pooling
  m.def(
      "roi_max_pool",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& fmap, const py::tuple& box, int h,
         int w) {
        const Tensor f = tensor_from_array(fmap);
        const PooledFeature pf = roi_max_pool(f, box_from_tuple(box), h, w);
        return py::make_tuple(array_from_tensor(pf.data), pf.argmax);
      },
      py::arg("fmap"), py::arg("box"), py::arg("h"), py::arg("w"),
      "Max-pool a [C,Hf,Wf] map over a (r,c,h,w) box into an h x w grid; returns (data, argmax).");
  m.def(
      "roi_pairwise_pool",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& fmap, const py::tuple& box1,
         const py::tuple& box2, int h, int w) {
        const Tensor f = tensor_from_array(fmap);
        const PooledFeature pf = roi_pairwise_pool(f, box_from_tuple(box1), box_from_tuple(box2), h, w);
        return py::make_tuple(array_from_tensor(pf.data), pf.argmax);
      },
      py::arg("fmap"), py::arg("box1"), py::arg("box2"), py::arg("h"), py::arg("w"),
      "Union-box pooling of two part boxes; activations outside both boxes count as zero.");

  // attention
  m.def(
      "select_top_k",
      [](const std::vector<double>& scores, int k) {
        return select_top_k(Tensor({static_cast<int>(scores.size())}, std::vector<double>(scores)), k);
      },
      py::arg("scores"), py::arg("k"));

  // autograd sanity hook
  m.def("gradcheck_suite", [](const std::string& corrupt) {
    std::vector<py::tuple> rows;
    for (const auto& e : run_gradcheck_suite(corrupt)) rows.push_back(py::make_tuple(e.op, e.err, e.tol, e.pass));
    return rows;
  }, py::arg("corrupt") = std::string());

  // synthetic data
  py::class_<GenConfig>(m, "GenConfig")
      .def(py::init<>())
      .def_readwrite("classes", &GenConfig::classes)
      .def_readwrite("canvas", &GenConfig::canvas)
      .def_readwrite("min_persons", &GenConfig::min_persons)
      .def_readwrite("max_persons", &GenConfig::max_persons)
      .def_readwrite("max_objects", &GenConfig::max_objects)
      .def_readwrite("distractor_max", &GenConfig::distractor_max)
      .def_readwrite("part_ratio", &GenConfig::part_ratio)
      .def_readwrite("contact_ratio", &GenConfig::contact_ratio)
      .def_readwrite("act_prob", &GenConfig::act_prob)
      .def_readwrite("second_act_prob", &GenConfig::second_act_prob)
      .def("digest", &GenConfig::digest);

  py::class_<Scene>(m, "Scene")
      .def_property_readonly("image", [](const Scene& s) { return array_from_tensor(s.image); })
      .def_property_readonly("labels",
                             [](const Scene& s) { return std::vector<int>(s.labels.begin(), s.labels.end()); })
      .def_property_readonly("planted",
                             [](const Scene& s) {
                               std::vector<py::tuple> out;
                               for (const auto& p : s.planted) out.push_back(py::make_tuple(p.cls, p.person, p.pair));
                               return out;
                             })
      .def_property_readonly("num_persons", [](const Scene& s) { return s.persons.size(); })
      .def_property_readonly("objects", [](const Scene& s) {
        std::vector<py::tuple> out;
        for (const auto& b : s.objects) out.push_back(py::make_tuple(b.r, b.c, b.h, b.w));
        return out;
      });

  m.def("generate_scene", &generate_scene, py::arg("seed"), py::arg("cfg"));
  m.def("generate_dataset", &generate_dataset, py::arg("seed"), py::arg("n"), py::arg("cfg"), py::arg("path"));
  m.def("read_dataset", [](const std::string& path) {
    Dataset ds = read_dataset(path);
    py::dict out;
    out["classes"] = ds.classes;
    out["canvas"] = ds.canvas;
    out["digest"] = ds.digest;
    out["class_pairs"] = ds.class_pairs;
    out["num_scenes"] = ds.scenes.size();
    return out;
  });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("num_scenes", [](const Dataset& d) { return d.scenes.size(); })
      .def_property_readonly("digest", [](const Dataset& d) { return d.digest; });

  // model
  py::class_<ModelConfig> mc(m, "ModelConfig");
  mc.def(py::init<>())
      .def_readwrite("k", &ModelConfig::k)
      .def_readwrite("max_humans", &ModelConfig::max_humans)
      .def_readwrite("max_objects", &ModelConfig::max_objects)
      .def_readwrite("pair_pool", &ModelConfig::pair_pool)
      .def_readwrite("roi_pool", &ModelConfig::roi_pool)
      .def_readwrite("part_ratio", &ModelConfig::part_ratio)
      .def_readwrite("w_p", &ModelConfig::w_p)
      .def_readwrite("w_n", &ModelConfig::w_n)
      .def_readwrite("classes", &ModelConfig::classes)
      .def_readwrite("canvas", &ModelConfig::canvas)
      .def_readwrite("branch_width", &ModelConfig::branch_width)
      .def_readwrite("head_width", &ModelConfig::head_width)
      .def_readwrite("lr", &ModelConfig::lr)
      .def_readwrite("steps", &ModelConfig::steps)
      .def_readwrite("batch", &ModelConfig::batch)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_property(
          "object_mode",
          [](const ModelConfig& c) { return c.object_mode == ModelConfig::ObjectMode::kUnion ? "union" : "tight"; },
          [](ModelConfig& c, const std::string& v) {
            if (v == "union")
              c.object_mode = ModelConfig::ObjectMode::kUnion;
            else if (v == "tight")
              c.object_mode = ModelConfig::ObjectMode::kTight;
            else
              throw ContractError("object_mode: expected union|tight");
          })
      .def_property(
          "attention_mode",
          [](const ModelConfig& c) {
            switch (c.attention_mode) {
              case ModelConfig::AttentionMode::kPairs: return "pairs";
              case ModelConfig::AttentionMode::kPairsParts: return "pairs_parts";
              case ModelConfig::AttentionMode::kOff: return "off";
            }
            return "pairs";
          },
          [](ModelConfig& c, const std::string& v) {
            if (v == "pairs")
              c.attention_mode = ModelConfig::AttentionMode::kPairs;
            else if (v == "pairs_parts")
              c.attention_mode = ModelConfig::AttentionMode::kPairsParts;
            else if (v == "off")
              c.attention_mode = ModelConfig::AttentionMode::kOff;
            else
              throw ContractError("attention_mode: expected pairs|pairs_parts|off");
          });

  py::class_<Model>(m, "Model")
      .def(py::init<ModelConfig, std::uint64_t>(), py::arg("cfg"), py::arg("init_seed"))
      .def(
          "train_step",
          [](Model& model, Dataset& ds, const std::vector<int>& indices, int step) {
            std::vector<Model::BatchItem> batch;
            for (int i : indices) batch.push_back({&ds.scenes.at(static_cast<size_t>(i)), i});
            return model.train_step(batch, step);
          },
          py::arg("dataset"), py::arg("indices"), py::arg("step"))
      .def(
          "predict",
          [](const Model& model, const Scene& scene) {
            const auto pred = model.predict(scene);
            py::dict out;
            out["image_scores"] = pred.image_scores;
            std::vector<py::dict> persons;
            for (const auto& p : pred.persons) {
              py::dict d;
              d["scores"] = p.scores;
              d["phi"] = p.phi;
              d["pair_scores"] = p.pair_scores;
              persons.push_back(d);
            }
            out["persons"] = persons;
            return out;
          },
          py::arg("scene"))
      .def("save", &Model::save, py::arg("path"), py::arg("gen_digest"), py::arg("step"))
      .def("load",
           [](Model& model, const std::string& path) {
             const auto info = model.load(path);
             return py::make_tuple(info.gen_digest, info.step);
           })
      .def("evaluate", [](const Model& model, const Dataset& ds, int jobs) {
        const EvalResult res = evaluate_model(model, ds.scenes, jobs);
        py::dict out;
        out["map"] = res.map;
        out["per_class_ap"] = res.per_class_ap;
        out["positives"] = res.positives;
        return out;
      }, py::arg("dataset"), py::arg("jobs") = 1);

  m.def("load_dataset", &read_dataset, py::arg("path"), py::return_value_policy::move);
}
