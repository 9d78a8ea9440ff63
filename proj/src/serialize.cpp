#include "polsynth/serialize.hpp"

#include "polsynth/error.hpp"

namespace polsynth {

namespace {

using nlohmann::json;

json node_to_json(const Node& node) {
  if (node.is_leaf()) return json{{"leaf", node.token}};
  if (!node.on_true || !node.on_false) {
    throw std::invalid_argument("cannot serialize decision '" + node.token +
                                "' with a missing branch");
  }
  json out{{"decision", node.token},
           {"true", node_to_json(*node.on_true)},
           {"false", node_to_json(*node.on_false)}};
  if (node.threshold) {
    out["threshold"] = node.threshold->value;
    out["direction"] = std::string(to_string(node.threshold->direction));
  }
  return out;
}

const std::string& string_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) {
    throw SchemaError(std::string("tree node is missing string field \"") + key + "\"");
  }
  return it->get_ref<const std::string&>();
}

NodePtr node_from_json(const json& doc, std::size_t depth) {
  if (!doc.is_object()) throw SchemaError("tree node must be an object");
  if (depth > 64) throw SchemaError("tree document nests too deeply");
  if (doc.contains("leaf")) {
    for (const char* key : {"decision", "true", "false", "threshold"}) {
      if (doc.contains(key)) {
        throw SchemaError(std::string("leaf node must not carry \"") + key + "\"");
      }
    }
    return make_leaf(string_field(doc, "leaf"));
  }
  const std::string& predicate = string_field(doc, "decision");
  for (const char* key : {"true", "false"}) {
    if (!doc.contains(key)) {
      throw SchemaError("decision '" + predicate + "' is missing its \"" + key + "\" branch");
    }
  }
  std::optional<Threshold> threshold;
  if (doc.contains("threshold")) {
    if (!doc["threshold"].is_number()) throw SchemaError("threshold must be a number");
    const std::string& dir = string_field(doc, "direction");
    if (dir != ">" && dir != "<") throw SchemaError("direction must be \">\" or \"<\"");
    threshold = Threshold{dir == ">" ? Direction::greater : Direction::less,
                          doc["threshold"].get<double>()};
  }
  return make_decision(predicate, node_from_json(doc["true"], depth + 1),
                       node_from_json(doc["false"], depth + 1), threshold);
}

}  // namespace

nlohmann::json tree_to_json(const LexicalTree& tree) {
  json doc = node_to_json(tree.root());
  doc["v"] = kTreeSchemaVersion;
  return doc;
}

LexicalTree tree_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("tree document must be an object");
  const auto version = doc.find("v");
  if (version == doc.end() || !version->is_number_integer()) {
    throw SchemaError("tree document has no schema version");
  }
  if (version->get<int>() != kTreeSchemaVersion) {
    throw SchemaError("tree schema version " + std::to_string(version->get<int>()) +
                      " is not supported (expected " + std::to_string(kTreeSchemaVersion) +
                      ")");
  }
  return LexicalTree(node_from_json(doc, 0));
}

std::string serialize(const LexicalTree& tree) { return tree_to_json(tree).dump(); }

LexicalTree deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed tree document: ") + e.what());
  }
  return tree_from_json(doc);
}

}  // namespace polsynth
