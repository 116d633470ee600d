#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "hcsbc/bundle.hpp"
#include "hcsbc/corpus.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/evalkit.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/segmenter.hpp"
#include "hcsbc/service.hpp"
#include "hcsbc/synth.hpp"
#include "hcsbc/textprep.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace hcsbc;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  if (o.is_none()) return json::object();
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

LabeledPart part_from(const py::dict& d) {
  LabeledPart p;
  p.report_id = d.contains("report_id") ? py::str(d["report_id"]).cast<std::string>() : "";
  p.part_id = d.contains("part_id") ? py::str(d["part_id"]).cast<std::string>() : "1";
  p.text = d["text"].cast<std::string>();
  if (d.contains("labels")) p.gold_diagnoses = d["labels"].cast<std::vector<std::string>>();
  return p;
}

py::dict part_to(const LabeledPart& p) {
  py::dict d;
  d["report_id"] = p.report_id;
  d["part_id"] = p.part_id;
  d["text"] = p.text;
  d["labels"] = p.gold_diagnoses;
  return d;
}

std::vector<LabeledPart> corpus_from(const py::iterable& rows, const Ontology& ont) {
  std::vector<LabeledPart> out;
  for (const auto& r : rows) {
    LabeledPart p = part_from(r.cast<py::dict>());
    for (auto& l : p.gold_diagnoses) l = canonical_label(l);
    for (const auto& l : p.gold_diagnoses) {
      if (!ont.has_diagnosis(l)) throw InputError("unknown label '" + l + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

py::list corpus_to(const std::vector<LabeledPart>& parts) {
  py::list out;
  for (const auto& p : parts) out.append(part_to(p));
  return out;
}

// Python-side model handle: a trained or loaded pipeline plus its bundle id.
struct Model {
  std::shared_ptr<PipelineModel> model;
  std::string bundle_id;

  const Ontology& ontology() const { return model->ontology(); }
};

Model train(const py::iterable& rows, const Ontology& ont, const std::string& kind,
            const py::object& config, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> trees, std::optional<std::string> learner) {
  HierarchyConfig cfg = config.is_none() ? HierarchyConfig{} : HierarchyConfig::from_json(from_py(config));
  if (seed) cfg.seed = *seed;
  if (trees) cfg.stage1_learner.forest.n_trees = cfg.branch_learner.forest.n_trees = *trees;
  if (learner) cfg.stage1_learner.kind = cfg.branch_learner.kind = *learner;
  const auto corpus = corpus_from(rows, ont);
  py::gil_scoped_release release;
  Model m;
  if (kind == "hierarchical") {
    m.model = std::make_shared<HierarchicalModel>(train_hierarchical(corpus, ont, cfg));
  } else if (kind == "flat") {
    m.model = std::make_shared<FlatModel>(train_flat(corpus, ont, cfg));
  } else {
    throw InputError("kind must be 'hierarchical' or 'flat'");
  }
  return m;
}

}  // namespace

PYBIND11_MODULE(_hcsbc, m) {
  m.doc() = "Hierarchical severity and diagnosis classification of breast pathology reports";
  m.attr("engine_version") = std::string(kEngineVersion);

  auto base = py::register_exception<Error>(m, "HcsbcError");
  py::register_exception<OntologyError>(m, "OntologyError", base.ptr());
  py::register_exception<SegmentError>(m, "SegmentError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
  py::register_exception<CorpusError>(m, "CorpusError", base.ptr());
  py::register_exception<BundleError>(m, "BundleError", base.ptr());
  py::register_exception<ProviderError>(m, "ProviderError", base.ptr());

  py::class_<Ontology>(m, "Ontology")
      .def_static("default", &Ontology::default_ontology)
      .def_static("load", [](const std::string& doc) { return Ontology::load(doc); })
      .def_static("load_file", [](const std::filesystem::path& p) { return Ontology::load_file(p); })
      .def_property_readonly("version", &Ontology::version)
      .def_property_readonly("checksum", &Ontology::checksum)
      .def_property_readonly("severities",
                             [](const Ontology& o) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& s : o.severities()) out.emplace_back(s.code, s.display_name);
                               return out;
                             })
      .def_property_readonly("diagnoses",
                             [](const Ontology& o) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& d : o.diagnoses()) out.emplace_back(d.name, d.severity);
                               return out;
                             })
      .def("branch_codes", &Ontology::branch_codes)
      .def("branch_labels",
           [](const Ontology& o, const std::string& code) {
             std::vector<std::string> out;
             for (const auto& d : o.branch_labels(code)) out.push_back(d.name);
             return out;
           })
      .def("severity_of", [](const Ontology& o, const std::string& d) { return o.severity_of(d); })
      .def("serialize", &Ontology::serialize)
      .def("with_synthetic_fillers", &Ontology::with_synthetic_fillers, py::arg("total_labels"))
      .def("__len__", [](const Ontology& o) { return o.diagnoses().size(); });

  m.def(
      "segment",
      [](const std::string& text, const std::string& styles, const std::string& report_id) {
        const auto seg = segment({report_id, text, std::nullopt}, MarkerStyleSet::parse(styles));
        py::list out;
        for (const auto& p : seg.parts) {
          py::dict d;
          d["part_id"] = p.part_id;
          d["text"] = p.text;
          d["span"] = std::make_pair(p.span.begin, p.span.end);
          d["marker_span"] = std::make_pair(p.marker_span.begin, p.marker_span.end);
          out.append(d);
        }
        return out;
      },
      py::arg("text"), py::arg("styles") = "ALL", py::arg("report_id") = "report");
  m.def(
      "final_diagnosis",
      [](const std::string& text) {
        return extract_final_diagnosis({"report", text, std::nullopt}).report.text;
      },
      py::arg("text"));
  m.def(
      "normalize",
      [](const std::string& text, const py::object& prep) {
        return normalize(text, prep.is_none() ? PrepConfig{} : PrepConfig::from_json(from_py(prep)));
      },
      py::arg("text"), py::arg("prep") = py::none());
  m.def(
      "tokenize",
      [](const std::string& text, const py::object& prep) {
        const PrepConfig c = prep.is_none() ? PrepConfig{} : PrepConfig::from_json(from_py(prep));
        return tokenize(normalize(text, c), c).tokens;
      },
      py::arg("text"), py::arg("prep") = py::none());

  m.def(
      "synth",
      [](const Ontology& ont, std::size_t n, std::uint64_t seed, double noise, double co_occurrence,
         double neg_rate, const std::string& profile) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.n_parts = n;
        cfg.noise_rate = noise;
        cfg.co_occurrence_rate = co_occurrence;
        cfg.neg_rate = neg_rate;
        if (profile == "clinical") {
          cfg.priors = priors_from_profile(ont, clinical_severity_profile());
        } else if (profile == "uniform") {
          for (const auto& d : ont.diagnoses()) cfg.priors[d.name] = 1.0;
        } else {
          throw InputError("profile must be 'clinical' or 'uniform'");
        }
        return corpus_to(generate_synth(cfg, ont).parts);
      },
      py::arg("ontology"), py::arg("n") = 1000, py::arg("seed") = 1, py::arg("noise") = 0.0,
      py::arg("co_occurrence") = 0.15, py::arg("neg_rate") = 0.2, py::arg("profile") = "clinical");

  m.def(
      "split",
      [](const py::iterable& rows, std::uint64_t seed, double train, double val, double test) {
        std::vector<LabeledPart> corpus;
        for (const auto& r : rows) corpus.push_back(part_from(r.cast<py::dict>()));
        const auto s = split(corpus, {train, val, test, seed});
        return py::make_tuple(corpus_to(s.train), corpus_to(s.val), corpus_to(s.test));
      },
      py::arg("corpus"), py::arg("seed") = 42, py::arg("train") = 0.6, py::arg("val") = 0.2,
      py::arg("test") = 0.2);

  m.def("read_corpus", [](const std::filesystem::path& p, const Ontology& ont) {
    return corpus_to(read_corpus(p, ont));
  });
  m.def(
      "write_corpus",
      [](const std::filesystem::path& p, const py::iterable& rows, const std::string& format) {
        std::vector<LabeledPart> parts;
        for (const auto& r : rows) parts.push_back(part_from(r.cast<py::dict>()));
        write_corpus(p, parts, format == "jsonl" ? CorpusFormat::Jsonl : CorpusFormat::Csv);
      },
      py::arg("path"), py::arg("corpus"), py::arg("format") = "csv");

  m.def(
      "mcnemar",
      [](std::size_t b, std::size_t c) { return to_py(mcnemar_from_counts(b, c).to_json()); },
      py::arg("b"), py::arg("c"));

  py::class_<Model>(m, "Model")
      .def_property_readonly("kind", [](const Model& x) { return x.model->kind(); })
      .def_property_readonly("bundle_id", [](const Model& x) { return x.bundle_id; })
      .def_property_readonly("ontology", &Model::ontology, py::return_value_policy::reference_internal)
      .def_property_readonly("config", [](const Model& x) { return to_py(x.model->config().to_json()); })
      .def("training_report", [](const Model& x) { return to_py(x.model->training_report().to_json()); })
      .def(
          "predict",
          [](const Model& x, const std::string& text, const std::string& report_id) {
            json j;
            {
              py::gil_scoped_release release;
              j = predict_text(*x.model, text, x.bundle_id, report_id);
            }
            return to_py(j);
          },
          py::arg("text"), py::arg("report_id") = "input")
      .def(
          "predict_labels",
          [](const Model& x, const std::vector<std::string>& texts) {
            std::vector<SpecimenPart> parts;
            for (std::size_t i = 0; i < texts.size(); ++i) {
              parts.push_back({std::to_string(i + 1), "1", texts[i], {}, {}});
            }
            std::vector<std::vector<std::string>> out;
            for (const auto& p : x.model->predict(parts)) out.push_back(p.label_set());
            return out;
          },
          py::arg("texts"))
      .def(
          "set_threshold",
          [](Model& x, double t, const std::map<std::string, double>& overrides) {
            x.model->set_threshold(t, overrides);
          },
          py::arg("threshold"), py::arg("overrides") = std::map<std::string, double>{})
      .def(
          "evaluate",
          [](const Model& x, const py::iterable& rows, bool macro_include_zero) {
            const auto corpus = corpus_from(rows, x.ontology());
            MetricsOptions opts;
            opts.macro_include_zero_support = macro_include_zero;
            json j;
            {
              py::gil_scoped_release release;
              const auto ev = evaluate(*x.model, corpus, opts);
              j = ev.report.to_json();
              j["errors"] = categorize_errors(corpus, ev.predictions, x.ontology()).to_json();
            }
            return to_py(j);
          },
          py::arg("corpus"), py::arg("macro_include_zero") = false)
      .def(
          "save",
          [](const Model& x, const std::filesystem::path& dir, std::optional<std::string> created) {
            BundleOptions opts;
            opts.created = created;
            save_bundle(*x.model, dir, opts);
          },
          py::arg("path"), py::arg("created") = py::none())
      .def_static(
          "load",
          [](const std::filesystem::path& dir) {
            auto b = load_bundle(dir);
            return Model{b.model, b.bundle_id};
          },
          py::arg("path"));

  m.def("train", &train, py::arg("corpus"), py::arg("ontology"), py::arg("kind") = "hierarchical",
        py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("trees") = py::none(),
        py::arg("learner") = py::none());

  m.def(
      "compare",
      [](const Model& a, const Model& b, const py::iterable& rows) {
        const auto corpus = corpus_from(rows, a.ontology());
        const auto ea = evaluate(*a.model, corpus);
        const auto eb = evaluate(*b.model, corpus);
        json j = mcnemar(ea.pred, eb.pred, ea.gold).to_json();
        j["a_micro_f1"] = ea.report.micro_f1;
        j["b_micro_f1"] = eb.report.micro_f1;
        j["a_macro_f1"] = ea.report.macro_f1;
        j["b_macro_f1"] = eb.report.macro_f1;
        return to_py(j);
      },
      py::arg("a"), py::arg("b"), py::arg("corpus"));
}
