#pragma once

// Built-in (F, f) families used by the command-line tool and the tests.

#include "hcube/spaces.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hcube {

struct CatalogEntry {
    std::string name;
    std::string summary;
    std::string details;
};

const std::vector<CatalogEntry>& catalog_entries();
/// Throws Error listing the valid names when `name` is unknown.
const CatalogEntry& catalog_entry(const std::string& name);

struct CatalogOptions {
    double q = 2.0;             // rademacher-lq exponent; also the random target exponent
    std::uint64_t seed = 1;     // random only
    int m = 0;                  // random target dimension, 0 means n
    double box = 1.0;           // random coordinates lie in [-box, box]
};

struct CatalogPair {
    std::string name;
    LipschitzMap F;
    MapOnCube f;
};

CatalogPair catalog_pair(const std::string& name, int n, const CatalogOptions& opts = {});

}  // namespace hcube
