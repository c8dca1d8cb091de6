#pragma once

// Median and tail reports for functions on the cube, density selection of an
// orbit avoiding a small set, and extraction through concentration.

#include "hcube/extraction.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hcube {

struct TailPoint {
    double t = 0.0;
    double prob = 0.0;  // P(|Phi - median| > t lambda_1)
};

struct ConcentrationReport {
    std::string id;
    int n = 0;
    double median = 0.0;  // lower median
    double mean = 0.0;
    double lambda1 = 0.0;
    double observed_lip = 0.0;  // n * max edge difference
    std::vector<TailPoint> tails;
    /// Least-squares fit of log P = log alpha - beta t n over nonzero tails, with beta > 0.
    double alpha = 0.0;
    double beta = 0.0;
    int fit_points = 0;
    bool fit_ok = false;  // at least two points and an unconstrained slope giving beta > 0
};

/// Default grid t_j = j / (2n), j = 1..2n.
std::vector<double> default_tail_grid(int n);

/// Exact report for a tabulated Phi on 2^n. Throws when lambda1 is below the observed Lipschitz constant.
ConcentrationReport median_tail_report(const std::vector<double>& Phi, double lambda1, std::string id = {},
                                       std::optional<std::vector<double>> grid = std::nullopt);

/// Lower median of a table.
double lower_median(std::vector<double> values);

/// Phi_I(eps) = rho_Y(eps, I eps) with rho_Y pulled back through F o f.
std::vector<double> interval_displacement(const LipschitzMap& F, const MapOnCube& f, Mask interval_mask);

struct DensityResult {
    std::optional<Mask> eps;
    double prob = 0.0;          // P(Omega)
    bool guaranteed = false;    // P(Omega) < 2^{-l}
    bool bijection_checked = false;
    bool alarm = false;         // guaranteed yet no orbit avoids Omega
};

using OrbitMap = std::function<Mask(Mask eps, Mask delta)>;

/// First eps (in mask order) whose orbit {g(eps, delta)} avoids Omega. `omega` has 2^L entries.
DensityResult density_select(int L, int l, const OrbitMap& g, const std::vector<char>& omega);

/// Block-product orbits over a partition into l blocks.
DensityResult density_select(const BlockPartition& blocks, const std::vector<char>& omega);

struct ConcentrationParams {
    int l = 2;
    int k = 3;
    double Theta = 1.0;
    double D = 2.0;
    double a = 0.2;
    double mu = 0.2;
    double eta = 0.05;
    double t = 0.03;
    double vartheta = 0.25;
};

/// Extraction through medians of interval displacements on the (l, k) tree. Stages: parameters,
/// near_extremality, medians, events, density, subcube.
ExtractionCertificate extract_via_concentration(const LipschitzMap& F, const MapOnCube& f,
                                                const ConcentrationParams& params, const ExpectOptions& opts = {});

}  // namespace hcube
