#ifndef DCVACONF_TOOLS_RUN_CONFIG_HPP
#define DCVACONF_TOOLS_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dcvaconf/dcvaconf.hpp"

namespace dcvaconf::cli {

enum class Method { None, Proposed, Unified, ConfRcva, DeepMagnitude };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

std::string_view to_string(ExtractorKind k);
ExtractorKind parse_extractor_kind(std::string_view name);

std::string_view to_string(Aggregate a);
Aggregate parse_aggregate(std::string_view name);

/// Everything needed to reproduce one detection run. The extractor and noise
/// seeds inside `f1`, `f2` and `smoothing` are always derived from `seed`
/// by `apply_seed`; values stored elsewhere are ignored.
struct RunConfig {
    Method method = Method::Proposed;
    std::filesystem::path t1;
    std::filesystem::path t2;
    std::optional<std::filesystem::path> reference;
    std::uint64_t seed = 0;
    ExtractorSpec f1 = default_primary_spec(0);
    ExtractorSpec f2 = default_secondary_spec(0);
    SmoothingConfig smoothing;
    RcvaConfig rcva;
    Aggregate aggregate = Aggregate::Pooled;
};

/// Fills the derived seeds: f1, f2 and the noise master seed.
void apply_seed(RunConfig& cfg);

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Throws Error(InvalidArgument) on unknown enum names or wrong value types.
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const ExtractorSpec& spec);
ExtractorSpec extractor_from_json(const nlohmann::json& j, ExtractorSpec base);

}  // namespace dcvaconf::cli

#endif
