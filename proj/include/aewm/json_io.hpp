#pragma once

#include "aewm/dataset.hpp"
#include "aewm/inference.hpp"
#include "aewm/nuisance.hpp"
#include "aewm/optimize.hpp"
#include "aewm/policy.hpp"

#include <json.hpp>

// JSON bindings for the persisted and reported types. Policies round-trip;
// the result types serialize one way for output artifacts.
namespace aewm {

void to_json(nlohmann::json& j, const FeatureTransform& t);
void from_json(const nlohmann::json& j, FeatureTransform& t);

void to_json(nlohmann::json& j, const PolicyRule& p);
void from_json(const nlohmann::json& j, PolicyRule& p);

void to_json(nlohmann::json& j, const PolicyClassSpec& s);
void from_json(const nlohmann::json& j, PolicyClassSpec& s);

void to_json(nlohmann::json& j, const NuisanceConfig& c);
void from_json(const nlohmann::json& j, NuisanceConfig& c);

void to_json(nlohmann::json& j, const SaConfig& c);
void from_json(const nlohmann::json& j, SaConfig& c);

void to_json(nlohmann::json& j, const CsvSchema& s);
void from_json(const nlohmann::json& j, CsvSchema& s);

void to_json(nlohmann::json& j, const BootstrapConfig& c);
void from_json(const nlohmann::json& j, BootstrapConfig& c);

void to_json(nlohmann::json& j, const WaldInterval& w);
void to_json(nlohmann::json& j, const SaDiagnostics& d);
void to_json(nlohmann::json& j, const LearnResult& r);
void to_json(nlohmann::json& j, const WelfareReport& r);
void to_json(nlohmann::json& j, const BootstrapResult& r);
void to_json(nlohmann::json& j, const SimulationMetrics& m);

} // namespace aewm
