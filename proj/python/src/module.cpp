#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "polsynth/cli.hpp"
#include "polsynth/corpus.hpp"
#include "polsynth/ddt.hpp"
#include "polsynth/dsl.hpp"
#include "polsynth/error.hpp"
#include "polsynth/explain.hpp"
#include "polsynth/policy.hpp"
#include "polsynth/ppo.hpp"
#include "polsynth/serialize.hpp"
#include "polsynth/stats.hpp"

namespace py = pybind11;
using namespace polsynth;

// Trees and DDT parameters cross the boundary as their JSON documents.

namespace {

const PredicateDictionary& dict_for(const LexicalTree& tree, const std::string& domain) {
  if (!domain.empty()) return PredicateDictionary::for_domain(parse_domain(domain));
  const auto d = infer_domain(tree);
  if (!d) throw std::invalid_argument("cannot infer the domain of this tree; pass domain=");
  return PredicateDictionary::for_domain(*d);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lexical decision trees, differentiable decision tree policies and PPO";
  m.attr("__version__") = POLSYNTH_VERSION;

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<DictionaryMismatch>(m, "DictionaryMismatch", PyExc_ValueError);

  m.def("parse_dsl", [](const std::string& text, const std::string& domain) {
    return serialize(parse_dsl(text, PredicateDictionary::for_domain(parse_domain(domain))));
  }, py::arg("text"), py::arg("domain"));

  m.def("validate", [](const std::string& tree_json, const std::string& domain) {
    const auto tree = deserialize(tree_json);
    std::vector<std::string> out;
    for (const auto& v : validate(tree, dict_for(tree, domain)).violations) {
      out.push_back(v.path + ": " + v.message);
    }
    return out;
  }, py::arg("tree"), py::arg("domain") = "");

  m.def("render", [](const std::string& tree_json, const std::string& style,
                     const std::string& domain) {
    const auto tree = deserialize(tree_json);
    return render(tree, parse_style(style), dict_for(tree, domain));
  }, py::arg("tree"), py::arg("style") = "text", py::arg("domain") = "");

  m.def("tokenize", [](const std::string& tree_json) { return tokenize(deserialize(tree_json)); });
  m.def("detokenize", [](const std::vector<std::string>& tokens, const std::string& domain) {
    return serialize(detokenize(tokens, PredicateDictionary::for_domain(parse_domain(domain))));
  }, py::arg("tokens"), py::arg("domain"));

  m.def("compare_trees", [](const std::string& predicted, const std::string& target) {
    const auto r = compare_trees(deserialize(predicted), deserialize(target));
    return py::make_tuple(r.exact_match, r.token_accuracy);
  });

  m.def("init_ddt", [](const std::string& tree_json, const std::string& domain,
                       double leaf_concentration, double alpha) {
    const auto tree = deserialize(tree_json);
    InitConfig config;
    config.leaf_concentration = leaf_concentration;
    config.alpha = alpha;
    return ddt_to_json(init_from_lexical(tree, dict_for(tree, domain), config)).dump();
  }, py::arg("tree"), py::arg("domain") = "", py::arg("leaf_concentration") = 0.9,
     py::arg("alpha") = 1.0);

  m.def("random_ddt", [](const std::string& domain, std::size_t leaves, std::uint64_t seed) {
    return ddt_to_json(random_ddt(parse_domain(domain), leaves, seed)).dump();
  }, py::arg("domain"), py::arg("leaves") = 8, py::arg("seed") = 0);

  m.def("ddt_forward", [](const std::string& params_json, const std::vector<double>& x) {
    const auto pi = forward(ddt_from_json(nlohmann::json::parse(params_json)), x);
    return std::vector<double>(pi.begin(), pi.end());
  }, py::arg("params"), py::arg("x"));

  m.def("discretize", [](const std::string& params_json, const std::string& domain) {
    const auto d = discretize(ddt_from_json(nlohmann::json::parse(params_json)),
                              PredicateDictionary::for_domain(parse_domain(domain)));
    return serialize(d.tree);
  }, py::arg("params"), py::arg("domain"));

  m.def("train_ddt", [](const std::string& params_json, const std::string& domain,
                        std::size_t episodes, std::uint64_t seed) {
    DdtPolicy policy(ddt_from_json(nlohmann::json::parse(params_json)));
    PpoConfig config;
    config.total_episodes = episodes;
    config.seed = seed;
    TrainingLog log;
    {
      py::gil_scoped_release release;
      log = train(policy, EnvConfig::defaults(parse_domain(domain), seed), config);
    }
    return py::make_tuple(log.episode_returns, ddt_to_json(policy.params()).dump());
  }, py::arg("params"), py::arg("domain"), py::arg("episodes"), py::arg("seed") = 0);

  m.def("rolling_reward", &rolling_reward, py::arg("returns"), py::arg("window") = 100);

  m.def("build_corpus", [](const std::string& domain, std::size_t n_base, std::uint64_t seed) {
    CorpusConfig config;
    config.n_base = n_base;
    config.seed = seed;
    const auto corpus = build_corpus(PredicateDictionary::for_domain(parse_domain(domain)), config);
    std::ostringstream out;
    write_corpus(out, corpus.examples);
    return py::make_tuple(out.str(), corpus.vocabulary);
  }, py::arg("domain"), py::arg("n_base") = 500, py::arg("seed") = 0);

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const std::string& domain, std::uint64_t seed) {
             return Environment(EnvConfig::defaults(parse_domain(domain), seed));
           }), py::arg("domain"), py::arg("seed") = 0)
      .def("reset", [](Environment& e) { return e.reset(); })
      .def("step", [](Environment& e, std::size_t action) {
        const auto t = e.step(action);
        return py::make_tuple(e.observation(), t.reward, t.done);
      })
      .def_property_readonly("observation", [](const Environment& e) { return e.observation(); })
      .def_property_readonly("action_count", &Environment::action_count)
      .def_property_readonly("observation_dim", &Environment::observation_dim);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}
