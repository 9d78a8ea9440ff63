#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "polsynth/tree.hpp"

namespace polsynth {

inline constexpr int kTreeSchemaVersion = 1;

/// Tree document: nested objects with keys "decision"/"true"/"false" or
/// "leaf", plus "threshold"/"direction" on learned decisions. The root
/// carries the schema version under "v".
nlohmann::json tree_to_json(const LexicalTree& tree);
LexicalTree tree_from_json(const nlohmann::json& doc);

/// Compact, key-sorted text of tree_to_json.
std::string serialize(const LexicalTree& tree);
/// Throws SchemaError on malformed documents or version mismatch.
LexicalTree deserialize(std::string_view text);

}  // namespace polsynth
