#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "ibart/pan.hpp"
#include "ibart/sim.hpp"

namespace ibart {

using Json = nlohmann::ordered_json;

// Replaces leaves x<k> in a canonical string by names[k-1].
std::string rename_leaves(const std::string& canonical, const std::vector<std::string>& names);

// Configuration documents mirror the struct field names. Keys absent from
// the document keep the value in base; unknown keys are rejected.
Json json_of(const BartConfig& c);
Json json_of(const GseOptions& o);
Json json_of(const PanConfig& c);
BartConfig bart_config_from_json(const Json& j, BartConfig base = {});
GseOptions gse_options_from_json(const Json& j, GseOptions base = {});
PanConfig pan_config_from_json(const Json& j, PanConfig base = {});

// Results. Wall-clock timings are deliberately left out so that reruns
// produce identical documents.
Json json_of(const GseResult& r, const std::vector<std::string>& names = {});
Json json_of(const LassoResult& r);
Json json_of(const SubsetSweep& s);
Json json_of(const PanResult& r, const std::vector<std::string>& names = {});
Json json_of(const MethodSummary& s);
Json json_of(const RmseSummary& s);

}  // namespace ibart
