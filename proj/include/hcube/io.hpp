#pragma once

// JSON forms of maps, ledgers, profiles and reports. Output keeps insertion order
// and prints doubles in shortest round-trip form, so reruns are byte-identical.

#include "hcube/concentration.hpp"
#include "hcube/extraction.hpp"
#include "hcube/rigidity.hpp"
#include "hcube/tree.hpp"
#include "hcube/type_stats.hpp"

#include <json.hpp>

#include <string>

namespace hcube {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

Json space_to_json(const Space& s);
Space space_from_json(const Json& j);

/// {"n", "space", "images": [[...], ...]} with images in mask order.
Json map_to_json(const MapOnCube& f);
MapOnCube map_from_json(const Json& j);

Json to_json(const TypeStatistic& s);
Json to_json(const FlatConstant& fc);
Json to_json(const SharpEmbeddingReport& r);
Json to_json(const RigidityCertificate& c);
Json to_json(const BmwEstimate& e);
Json to_json(const ParameterLedger& g);
Json to_json(const ExtractionCertificate& c);
Json to_json(const ConcentrationReport& r);

/// {"branching", "p", "nodes": [{"lo", "hi", "level", "r", "s"}]}.
Json profile_to_json(const TreeProfile& pr);

/// Ledger inputs: p, lambda, Theta, vartheta, D, l, mode, and optional overrides
/// b, nu, a, mu, M, Delta, eta, Phi, m, d, bmw_trials, seed.
ParameterLedger ledger_from_json(const Json& j);

/// Reads a whole file; throws Error on failure.
std::string read_text(const std::string& path);
/// Writes text plus a trailing newline; "-" means stdout.
void write_text(const std::string& path, const std::string& text);

}  // namespace hcube
