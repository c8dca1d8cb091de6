#pragma once

// Parameter ledger, witness functions, witness search and subcube extraction
// through a nearly additive tree node.

#include "hcube/rigidity.hpp"
#include "hcube/tree.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hcube {

enum class LedgerMode { PaperFaithful, Empirical };

std::string to_string(LedgerMode m);
LedgerMode ledger_mode_from_string(const std::string& s);

struct LedgerOverrides {
    std::optional<double> b, nu, a, mu, M, Delta, eta, Phi;
    std::optional<long long> m, d;
    int bmw_trials = 300;
    std::uint64_t seed = 1;
};

/// One inequality of the chain with both sides.
struct LedgerCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    /// Depends on the cube size; empirical ledgers record these as gaps instead of failing.
    bool size_dependent = false;
};

struct ParameterLedger {
    LedgerMode mode = LedgerMode::Empirical;
    double p = 2.0, lambda = 1.0, Theta = 1.0, vartheta = 0.5, D = 2.0;
    int l = 2;
    double b = 0.0, nu = 0.0, a = 0.0, mu = 0.0, M = 0.0, Delta = 0.0;
    long long m = 0, d = 0;
    std::string a_source;  // "user", "estimate" or "default"
    double Phi = 1.0;
    /// log N with N = l^d, the flat-vector length bound.
    double log_N = 0.0;
    /// log(1 - phi); phi itself rounds to 1 for large N.
    double log_flat_gap = 0.0;
    double phi = 0.0;
    double log_eta = 0.0;
    double eta = 0.0;
    std::vector<LedgerCheck> checks;

    bool constant_chain_holds() const;
    bool all_hold() const;
    /// Names of failing size-dependent checks.
    std::vector<std::string> gaps() const;
};

/// Builds and checks the parameter chain. The faithful mode picks every constant at half its
/// admissible bound and throws on any failing check; empirical mode throws only on failures of
/// size-independent checks.
ParameterLedger build_ledger(double p, double lambda, double Theta, double vartheta, double D, int l, LedgerMode mode,
                             const LedgerOverrides& overrides = {});

/// Tables over 2^L of D_Y, E_Y, D_X, E_X for one node I and its children.
struct WitnessFunctions {
    int L = 0;
    int l = 0;
    double p = 2.0;
    std::vector<double> DY, EY, DX, EX;
    double mean_DY = 0.0, mean_EY = 0.0, mean_DX = 0.0, mean_EX = 0.0;
    /// r_I^p, l^{p-1} sum r_J^p, s_I^p, l^{p-1} sum s_J^p computed directly.
    double target_DY = 0.0, target_EY = 0.0, target_DX = 0.0, target_EX = 0.0;
    double lambda = 0.0;
    /// Largest relative mismatch of the four expectation identities.
    double identity_error = 0.0;
    bool pointwise_ok = false;  // D <= E and D_Y <= lambda^p D_X, E_Y <= lambda^p E_X (1e-9)
    bool identities_hold(double tol = 1e-9) const { return identity_error <= tol; }
};

WitnessFunctions build_witness_functions(const LipschitzMap& F, const MapOnCube& f, const SignedInterval& I,
                                         const std::vector<SignedInterval>& children, double p,
                                         const ExpectOptions& opts = {});

/// Synthetic tables for property tests; targets are set to the means.
WitnessFunctions witness_functions_from_tables(double p, std::vector<double> DY, std::vector<double> EY,
                                               std::vector<double> DX, std::vector<double> EX);

struct WitnessParams {
    double a = 0.5, b = 0.5, Theta = 1.0, p = 2.0;
    double nu = 0.1, mu = 0.1, lambda = 1.0;
};

struct WitnessResult {
    std::optional<Mask> witness;  // lowest index meeting all three inequalities
    std::size_t witness_count = 0;
    bool h_pointwise = false;     // (i)
    bool h_means = false;         // (ii)
    bool h_constants = false;     // (iii)
    bool hypotheses_hold() const { return h_pointwise && h_means && h_constants; }
    bool alarm = false;           // hypotheses hold and no witness
};

WitnessResult witness_search(const WitnessFunctions& W, const WitnessParams& q);

/// One pipeline stage: what was checked and what came out.
struct StageRecord {
    std::string name;
    bool ok = false;
    std::string note;
    std::vector<std::pair<std::string, double>> values;
};

struct ExtractionCertificate {
    std::string route;  // "tree" or "concentration"
    bool pass = false;
    std::string failed_stage;
    std::vector<StageRecord> stages;
    std::optional<Mask> witness;
    int L = 0;
    int l = 0;
    std::optional<MapOnCube> h;
    double r = 0.0;
    double s = 0.0;
    double distortion_h = kInf;
    double distortion_Fh = kInf;
    double scale_ratio = 0.0;  // r / s
    int alarms = 0;

    const StageRecord* stage(const std::string& name) const;
};

/// Extraction through the tree profile. Stages: near_extremality, profile, profile_checks, select,
/// witness_functions, witness, subcube.
ExtractionCertificate extract_subcube(const LipschitzMap& F, const MapOnCube& f, const ParameterLedger& ledger,
                                      const IntervalTree& tree, const ExpectOptions& opts = {});

}  // namespace hcube
