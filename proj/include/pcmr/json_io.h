#pragma once

#include <string>

#include <json.hpp>

#include "pcmr/gen_eq.h"
#include "pcmr/process_tree.h"
#include "pcmr/reduction.h"

namespace pcmr {

// Versioned JSON readers and writers for the documented file formats.

inline constexpr const char* kSchemaGraph = "pcmr/graph/1";
inline constexpr const char* kSchemaGe = "pcmr/ge/1";
inline constexpr const char* kSchemaSolution = "pcmr/solution/1";
inline constexpr const char* kSchemaSystem = "pcmr/system/1";
inline constexpr const char* kSchemaTree = "pcmr/tree/1";

nlohmann::json graph_to_json(const CommutationGraph& g);
CommutationGraph graph_from_json(const nlohmann::json& j);

nlohmann::json ge_to_json(const GeneralisedEquation& ge);
GeneralisedEquation ge_from_json(const nlohmann::json& j);

nlohmann::json solution_to_json(const CommutationGraph& g, const SolutionTuple& h);
SolutionTuple solution_from_json(const CommutationGraph& g, const nlohmann::json& j);

nlohmann::json system_to_json(const EquationSystem& sys);
EquationSystem system_from_json(const nlohmann::json& j);

nlohmann::json word_map_to_json(const GeneralisedEquation& target, const WordMap& map);

nlohmann::json tree_to_json(const ProcessTree& tree);
std::string tree_to_dot(const ProcessTree& tree);

std::string item_word_text(const ItemWord& w);

}  // namespace pcmr
