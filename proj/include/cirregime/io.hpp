#ifndef CIRREGIME_IO_HPP
#define CIRREGIME_IO_HPP

#include <optional>
#include <string>

#include <json.hpp>

#include "cirregime/analyze.hpp"
#include "cirregime/classify.hpp"
#include "cirregime/model.hpp"
#include "cirregime/simulate.hpp"
#include "cirregime/spectral.hpp"

namespace cirregime::io {

using nlohmann::json;

struct LoadedModel {
    ModelSpec spec;
    std::optional<StateDepModel> state_dep;  ///< set when rates depend on r

    bool is_state_dependent() const { return state_dep.has_value(); }
};

/// Parse the model configuration object:
///   {"regimes": N, "a": [...], "b": [...], "sigma": [...], "Q": [[...]],
///    "state_dependent": {"ij": {"kind": ...}}}   (last key optional)
/// Keys are fixed; unknown keys are rejected with StructuralError.
/// "state_dependent" keys name 1-based regime pairs ("12" or "1,2"); pairs
/// not listed keep the constant rate from Q.
LoadedModel parse_model(const json& j);
LoadedModel load_model_file(const std::string& path);

json to_json(const ValidationReport& report);
json to_json(const SpectralCurve& curve);
json to_json(const RecurrenceVerdict& verdict);
json to_json(const TailVerdict& verdict);
json to_json(const MomentProbe& probe);
json to_json(const ExpMomentProbe& probe);
json to_json(const TailReport& report);
json to_json(const BesselCheckResult& result);
json to_json(const SandwichTable& table);

/// 17-significant-digit decimal form (round-trips doubles).
std::string format_double(double x);

void write_spectral_csv(const std::string& path, const SpectralCurve& curve);
void write_paths_csv(const std::string& path, const PathBundle& bundle);
void write_skeleton_csv(const std::string& path, const RegimeSkeleton& skeleton);
void write_moment_csv(const std::string& path, const MomentProbe& probe);
void write_sandwich_csv(const std::string& path, const SandwichTable& table);
void write_hill_sweep_csv(const std::string& path, const HillSweep& sweep);

/// FNV-1a 64-bit content hash, hex encoded.
std::string fnv1a_hex(const std::string& content);

} // namespace cirregime::io

#endif
