// hcube: command-line front end for the cube statistics, extraction pipelines and reports.
//
// Exit codes: 0 pass or plain report, 2 fail certificate, 1 usage or validation error.

#include "hcube/catalog.hpp"
#include "hcube/concentration.hpp"
#include "hcube/extraction.hpp"
#include "hcube/io.hpp"
#include "hcube/rigidity.hpp"
#include "hcube/tree.hpp"
#include "hcube/type_stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace hcube;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFail = 2;

struct SourceOptions {
    std::string catalog;
    std::string map_path;
    double q = 2.0;
    std::uint64_t seed = 1;
    int m = 0;
    double box = 1.0;
};

struct CapOptions {
    int cap = kDefaultCap;
    bool override_cap = false;
    ExpectOptions expect() const { return {cap, override_cap}; }
};

void add_source_flags(CLI::App* cmd, SourceOptions& s) {
    cmd->add_option("--catalog", s.catalog, "Built-in family (see `catalog list`)");
    cmd->add_option("--map", s.map_path, "Map JSON file (F is the identity)");
    cmd->add_option("--q", s.q, "Exponent for rademacher-lq and random");
    cmd->add_option("--m", s.m, "Target dimension for random (0 means n)");
    cmd->add_option("--box", s.box, "Coordinate range for random");
}

void add_cap_flags(CLI::App* cmd, CapOptions& c) {
    cmd->add_option("--cap", c.cap, "Enumeration cap on the cube dimension");
    cmd->add_flag("--override-cap", c.override_cap, "Allow dimensions beyond the cap");
}

Json source_json(const SourceOptions& s) {
    Json j = Json::object();
    if (!s.catalog.empty()) {
        j["catalog"] = s.catalog;
        j["q"] = s.q;
        j["m"] = s.m;
        j["box"] = s.box;
    } else {
        j["map"] = s.map_path;
    }
    return j;
}

CatalogPair load_source(const SourceOptions& s, std::optional<int> n) {
    if (s.catalog.empty() == s.map_path.empty()) throw Error("give exactly one of --catalog and --map");
    if (!s.map_path.empty()) {
        MapOnCube f = map_from_json(Json::parse(read_text(s.map_path)));
        if (n && *n != f.n()) throw Error("map file has n = " + std::to_string(f.n()) + ", expected " + std::to_string(*n));
        return {"file", LipschitzMap::identity(), std::move(f)};
    }
    if (!n) throw Error("--catalog needs a dimension");
    CatalogOptions o;
    o.q = s.q;
    o.seed = s.seed;
    o.m = s.m;
    o.box = s.box;
    return catalog_pair(s.catalog, *n, o);
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dots = item.find("..");
        try {
            if (dots == std::string::npos) {
                out.push_back(std::stoi(item));
            } else {
                const int lo = std::stoi(item.substr(0, dots));
                const int hi = std::stoi(item.substr(dots + 2));
                if (hi < lo) throw Error("empty range '" + item + "'");
                for (int v = lo; v <= hi; ++v) out.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw Error("cannot parse integer list '" + text + "'");
        }
    }
    if (out.empty()) throw Error("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(item == "inf" ? kInf : std::stod(item));
        } catch (const std::logic_error&) {
            throw Error("cannot parse number list '" + text + "'");
        }
    }
    if (out.empty()) throw Error("empty number list");
    return out;
}

Json envelope(const std::string& command, std::uint64_t seed, Json config, Json result) {
    return Json{{"tool", "hcube"},
                {"version", kVersion},
                {"command", command},
                {"seed", seed},
                {"config", std::move(config)},
                {"result", std::move(result)}};
}

std::string csv_number(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return Json(x).dump();
}

// ratio

struct RatioOptions {
    SourceOptions src;
    CapOptions caps;
    std::string n = "2..8";
    std::string p = "2";
    std::string kind = "b";
    std::string format = "csv";
    std::string out = "-";
};

int cmd_ratio(const RatioOptions& o) {
    std::vector<StatKind> kinds;
    if (o.kind == "a") kinds = {StatKind::A};
    else if (o.kind == "b") kinds = {StatKind::B};
    else if (o.kind == "e") kinds = {StatKind::E};
    else if (o.kind == "all") kinds = {StatKind::A, StatKind::B, StatKind::E};
    else throw Error("unknown statistic kind '" + o.kind + "' (valid: a, b, e, all)");
    if (o.format != "csv" && o.format != "json") throw Error("unknown format '" + o.format + "' (valid: csv, json)");

    std::vector<int> ns;
    if (!o.src.map_path.empty()) ns = {load_source(o.src, std::nullopt).f.n()};
    else ns = parse_int_list(o.n);
    const auto ps = parse_double_list(o.p);
    const auto opts = o.caps.expect();

    std::vector<TypeStatistic> rows;
    for (int n : ns) {
        const auto pair = load_source(o.src, n);
        for (double p : ps)
            for (StatKind k : kinds) {
                if (k == StatKind::A) {
                    if (p != ps.front()) continue;
                    rows.push_back(a_statistic(pair.F, pair.f, opts));
                } else if (k == StatKind::B) {
                    rows.push_back(b_statistic(pair.F, pair.f, p, opts));
                } else {
                    rows.push_back(e_statistic(pair.F, pair.f, p, opts));
                }
            }
    }

    Json config = source_json(o.src);
    config["n"] = ns;
    config["p"] = ps;
    config["kind"] = o.kind;
    config["cap"] = o.caps.cap;
    config["override_cap"] = o.caps.override_cap;

    if (o.format == "json") {
        Json arr = Json::array();
        for (const auto& r : rows) arr.push_back(to_json(r));
        write_text(o.out, envelope("ratio", o.src.seed, std::move(config), std::move(arr)).dump(2));
        return kExitPass;
    }
    std::ostringstream os;
    os << "# tool=hcube version=" << kVersion << " command=ratio seed=" << o.src.seed << '\n';
    os << "# config=" << config.dump() << '\n';
    os << "kind,p,n,lhs,rhs,ratio";
    for (const auto& r : rows)
        os << '\n'
           << to_string(r.kind) << ',' << csv_number(r.p) << ',' << r.n << ',' << csv_number(r.lhs) << ','
           << csv_number(r.rhs) << ',' << csv_number(r.ratio);
    write_text(o.out, os.str());
    return kExitPass;
}

// catalog

int cmd_catalog(const std::string& action, const std::string& name) {
    if (action == "list") {
        for (const auto& e : catalog_entries()) std::cout << e.name << "  " << e.summary << '\n';
        return kExitPass;
    }
    if (action == "describe") {
        if (name.empty()) throw Error("catalog describe needs a family name");
        const auto& e = catalog_entry(name);
        std::cout << e.name << "\n  " << e.summary << "\n  " << e.details << '\n';
        return kExitPass;
    }
    throw Error("unknown catalog action '" + action + "' (valid: list, describe)");
}

// extract

struct LedgerFlags {
    std::optional<double> a, b, nu, mu, M, Delta, eta, Phi;
    std::optional<long long> m, d;
    int bmw_trials = 300;
};

struct ExtractOptions {
    SourceOptions src;
    CapOptions caps;
    std::string tree = "2,2,2";
    double p = 2.0;
    double D = 2.0;
    double Theta = 1.0;
    std::optional<double> lambda;
    std::optional<double> vartheta;
    double theta_frac = 0.5;
    std::string mode = "empirical";
    std::string ledger_path;
    LedgerFlags lf;
    std::string out = "-";
};

int cmd_extract(const ExtractOptions& o) {
    const auto branching = parse_int_list(o.tree);
    const IntervalTree tree(branching);
    const auto pair = load_source(o.src, tree.length());

    ParameterLedger ledger;
    Json ledger_cfg;
    if (!o.ledger_path.empty()) {
        ledger_cfg = Json::parse(read_text(o.ledger_path));
        ledger = ledger_from_json(ledger_cfg);
    } else {
        const double lambda = o.lambda.value_or(pair.F.lipschitz_bound(pair.f.space()));
        const double vartheta = o.vartheta.value_or(o.theta_frac * o.Theta);
        const int l = *std::max_element(branching.begin(), branching.end());
        LedgerOverrides ov;
        ov.a = o.lf.a;
        ov.b = o.lf.b;
        ov.nu = o.lf.nu;
        ov.mu = o.lf.mu;
        ov.M = o.lf.M;
        ov.Delta = o.lf.Delta;
        ov.eta = o.lf.eta;
        ov.Phi = o.lf.Phi;
        ov.m = o.lf.m;
        ov.d = o.lf.d;
        ov.bmw_trials = o.lf.bmw_trials;
        ov.seed = o.src.seed;
        ledger = build_ledger(o.p, lambda, o.Theta, vartheta, o.D, l, ledger_mode_from_string(o.mode), ov);
    }

    const auto cert = extract_subcube(pair.F, pair.f, ledger, tree, o.caps.expect());

    Json config = source_json(o.src);
    config["F"] = pair.F.describe();
    config["tree"] = branching;
    config["cap"] = o.caps.cap;
    config["override_cap"] = o.caps.override_cap;
    if (!o.ledger_path.empty()) config["ledger_file"] = ledger_cfg;
    config["ledger"] = to_json(ledger);
    write_text(o.out, envelope("extract", o.src.seed, std::move(config), to_json(cert)).dump(2));
    return cert.pass ? kExitPass : kExitFail;
}

// extract5

struct Extract5Options {
    SourceOptions src;
    CapOptions caps;
    ConcentrationParams params;
    std::string out = "-";
};

int cmd_extract5(const Extract5Options& o) {
    const auto& q = o.params;
    if (q.l < 1 || q.k < 1) throw Error("need l >= 1 and k >= 1");
    const auto pair = load_source(o.src, q.l * q.k);
    const auto cert = extract_via_concentration(pair.F, pair.f, q, o.caps.expect());

    Json config = source_json(o.src);
    config["F"] = pair.F.describe();
    config["l"] = q.l;
    config["k"] = q.k;
    config["Theta"] = q.Theta;
    config["D"] = q.D;
    config["a"] = q.a;
    config["mu"] = q.mu;
    config["eta"] = q.eta;
    config["t"] = q.t;
    config["vartheta"] = q.vartheta;
    config["cap"] = o.caps.cap;
    config["override_cap"] = o.caps.override_cap;
    write_text(o.out, envelope("extract5", o.src.seed, std::move(config), to_json(cert)).dump(2));
    return cert.pass ? kExitPass : kExitFail;
}

// flat

struct FlatOptions {
    double p = 2.0;
    int n = 3;
    double Phi = 2.0;
    std::string method = "opt";
    std::uint64_t seed = 1;
    std::uint64_t samples = 1000000;
    std::string out = "-";
};

int cmd_flat(const FlatOptions& o) {
    FlatMethod m;
    if (o.method == "opt") m = FlatMethod::ConstrainedOpt;
    else if (o.method == "grid") m = FlatMethod::Grid;
    else if (o.method == "sample") m = FlatMethod::SampleCheck;
    else throw Error("unknown method '" + o.method + "' (valid: opt, grid, sample)");
    const auto fc = flat_phi(o.p, o.n, o.Phi, m, o.seed, o.samples);
    Json config{{"p", o.p}, {"n", o.n}, {"Phi", o.Phi}, {"method", o.method}, {"samples", o.samples}};
    write_text(o.out, envelope("flat", o.seed, std::move(config), to_json(fc)).dump(2));
    return kExitPass;
}

// rigidity

struct RigidityOptions {
    SourceOptions src;
    double p = 2.0;
    int l = 4;
    double a = 0.1;
    double D = 2.0;
    bool estimate = false;
    int trials = 300;
    std::string out = "-";
};

int cmd_rigidity(const RigidityOptions& o) {
    Json config{{"p", o.p}, {"l", o.l}, {"D", o.D}};
    if (o.estimate) {
        const auto est = estimate_bmw_constant(o.p, o.l, o.D, o.trials, o.src.seed);
        config["trials"] = o.trials;
        write_text(o.out, envelope("rigidity", o.src.seed, std::move(config), to_json(est)).dump(2));
        return kExitPass;
    }
    const auto pair = load_source(o.src, o.l);
    const MapOnCube h = compose(pair.F, pair.f);
    const auto cert = bmw_rigidity_check(h, o.p, o.a, o.D);
    Json result{{"verdict", !cert.hypothesis_holds ? "hypothesis_fail" : cert.pass ? "pass" : "fail"},
                {"certificate", to_json(cert)}};
    if (o.a > 0.0 && o.a * o.l < 1.0 && 1.0 - o.a * o.l > 1.0 / o.D)
        result["sharp_embedding"] = to_json(sharp_embedding_check(h, o.a, o.D));
    Json src = source_json(o.src);
    for (auto& [k, v] : src.items()) config[k] = v;
    config["a"] = o.a;
    write_text(o.out, envelope("rigidity", o.src.seed, std::move(config), std::move(result)).dump(2));
    return cert.hypothesis_holds && cert.pass ? kExitPass : kExitFail;
}

// concentrate

struct ConcentrateOptions {
    SourceOptions src;
    CapOptions caps;
    int n = 8;
    std::string interval;
    std::optional<double> lambda1;
    std::string out = "-";
};

int cmd_concentrate(const ConcentrateOptions& o) {
    const auto pair = load_source(o.src, o.src.map_path.empty() ? std::optional<int>(o.n) : std::nullopt);
    const int n = pair.f.n();
    check_cap(n, o.caps.expect());
    SignedInterval I(1, n);
    if (!o.interval.empty()) {
        const auto v = parse_int_list(o.interval);
        if (v.size() != 2) throw Error("--interval takes lo,hi");
        I = SignedInterval(v[0], v[1]);
        if (I.hi > n) throw Error("interval lies outside the cube");
    }
    const auto Phi = interval_displacement(pair.F, pair.f, I.mask());
    double observed = 0.0;
    for (Mask v = 0; v < Phi.size(); ++v)
        for (int i = 0; i < n; ++i) observed = std::max(observed, std::abs(Phi[v] - Phi[v ^ (Mask{1} << i)]));
    observed *= n;
    const double lambda1 = o.lambda1.value_or(observed);
    const std::string id = "[" + std::to_string(I.lo) + "," + std::to_string(I.hi) + "]";
    const auto rep = median_tail_report(Phi, lambda1, id);

    Json config = source_json(o.src);
    config["F"] = pair.F.describe();
    config["n"] = n;
    config["interval"] = {I.lo, I.hi};
    config["lambda1"] = lambda1;
    write_text(o.out, envelope("concentrate", o.src.seed, std::move(config), to_json(rep)).dump(2));
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hcube: Hamming cube subtype statistics and subcube extraction"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RatioOptions ro;
    auto* ratio = app.add_subcommand("ratio", "Subtype statistics over an (n, p) grid");
    add_source_flags(ratio, ro.src);
    add_cap_flags(ratio, ro.caps);
    ratio->add_option("--seed", ro.src.seed, "Seed for random maps");
    ratio->add_option("--n", ro.n, "Dimensions: 4, 2..8 or 2,4,6");
    ratio->add_option("--p", ro.p, "Exponents, comma separated");
    ratio->add_option("--kind", ro.kind, "a, b, e or all");
    ratio->add_option("--format", ro.format, "csv or json");
    ratio->add_option("--out", ro.out, "Output path, - for stdout");

    std::string cat_action, cat_name;
    auto* catalog = app.add_subcommand("catalog", "List or describe the built-in families");
    catalog->add_option("action", cat_action, "list or describe")->required();
    catalog->add_option("name", cat_name, "Family name for describe");

    ExtractOptions eo;
    auto* extract = app.add_subcommand("extract", "Subcube extraction through the interval tree");
    add_source_flags(extract, eo.src);
    add_cap_flags(extract, eo.caps);
    extract->add_option("--seed", eo.src.seed, "Seed for random maps and the rigidity estimate");
    extract->add_option("--tree", eo.tree, "Branching, e.g. 2,2,2");
    extract->add_option("--p", eo.p, "Moment exponent");
    extract->add_option("--D", eo.D, "Target distortion");
    extract->add_option("--Theta", eo.Theta, "Near-extremality level");
    extract->add_option("--lambda", eo.lambda, "Lipschitz bound of F (default: computed)");
    auto* vt = extract->add_option("--vartheta", eo.vartheta, "Scale comparison constant");
    extract->add_option("--theta-frac", eo.theta_frac, "vartheta as a fraction of Theta")->excludes(vt);
    extract->add_option("--mode", eo.mode, "empirical or paper_faithful");
    extract->add_option("--ledger", eo.ledger_path, "Ledger JSON (replaces the ledger flags)");
    extract->add_option("--a", eo.lf.a, "Rigidity constant");
    extract->add_option("--b", eo.lf.b, "Scale-drop slack b");
    extract->add_option("--nu", eo.lf.nu, "Target additivity slack nu");
    extract->add_option("--mu", eo.lf.mu, "Source additivity slack mu");
    extract->add_option("--M", eo.lf.M, "Level comparability bound M");
    extract->add_option("--Delta", eo.lf.Delta, "Level density threshold Delta");
    extract->add_option("--eta", eo.lf.eta, "Near-extremality slack eta");
    extract->add_option("--Phi", eo.lf.Phi, "Flatness threshold Phi");
    extract->add_option("--ledger-m", eo.lf.m, "Level-count bound m");
    extract->add_option("--ledger-d", eo.lf.d, "Tree depth d used by the ledger");
    extract->add_option("--bmw-trials", eo.lf.bmw_trials, "Trials for the rigidity estimate");
    extract->add_option("--out", eo.out, "Output path, - for stdout");

    Extract5Options x5;
    auto* extract5 = app.add_subcommand("extract5", "Subcube extraction through concentration");
    add_source_flags(extract5, x5.src);
    add_cap_flags(extract5, x5.caps);
    extract5->add_option("--seed", x5.src.seed, "Seed for random maps");
    extract5->add_option("--l", x5.params.l, "Block count");
    extract5->add_option("--k", x5.params.k, "Block size");
    extract5->add_option("--Theta", x5.params.Theta, "Near-extremality level");
    extract5->add_option("--D", x5.params.D, "Target distortion");
    extract5->add_option("--a", x5.params.a, "Rigidity constant");
    extract5->add_option("--mu", x5.params.mu, "Block mean slack");
    extract5->add_option("--eta", x5.params.eta, "Root mean slack");
    extract5->add_option("--t", x5.params.t, "Deviation width as a fraction of Lip(f)");
    extract5->add_option("--vartheta", x5.params.vartheta, "Scale comparison constant");
    extract5->add_option("--out", x5.out, "Output path, - for stdout");

    FlatOptions fo;
    auto* flat = app.add_subcommand("flat", "Flat-vector constant");
    flat->add_option("--p", fo.p, "Exponent p > 1");
    flat->add_option("--n", fo.n, "Vector length");
    flat->add_option("--Phi", fo.Phi, "Spread threshold, at least 1");
    flat->add_option("--method", fo.method, "opt, grid or sample");
    flat->add_option("--seed", fo.seed, "Seed for the sample method");
    flat->add_option("--samples", fo.samples, "Sample count for the sample method");
    flat->add_option("--out", fo.out, "Output path, - for stdout");

    RigidityOptions rg;
    auto* rigidity = app.add_subcommand("rigidity", "Near-extremal rigidity check or constant estimate");
    add_source_flags(rigidity, rg.src);
    rigidity->add_option("--seed", rg.src.seed, "Seed for random maps and trials");
    rigidity->add_option("--p", rg.p, "Exponent p > 1");
    rigidity->add_option("--l", rg.l, "Cube dimension");
    rigidity->add_option("--a", rg.a, "Near-extremality slack");
    rigidity->add_option("--D", rg.D, "Target distortion");
    rigidity->add_flag("--estimate", rg.estimate, "Estimate the largest admissible a instead");
    rigidity->add_option("--trials", rg.trials, "Trial maps for the estimate");
    rigidity->add_option("--out", rg.out, "Output path, - for stdout");

    ConcentrateOptions co;
    auto* concentrate = app.add_subcommand("concentrate", "Median and tail report of an interval displacement");
    add_source_flags(concentrate, co.src);
    add_cap_flags(concentrate, co.caps);
    concentrate->add_option("--seed", co.src.seed, "Seed for random maps");
    concentrate->add_option("--n", co.n, "Cube dimension");
    concentrate->add_option("--interval", co.interval, "lo,hi (default the whole range)");
    concentrate->add_option("--lambda1", co.lambda1, "Lipschitz bound (default: observed)");
    concentrate->add_option("--out", co.out, "Output path, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }

    try {
        if (*ratio) return cmd_ratio(ro);
        if (*catalog) return cmd_catalog(cat_action, cat_name);
        if (*extract) return cmd_extract(eo);
        if (*extract5) return cmd_extract5(x5);
        if (*flat) return cmd_flat(fo);
        if (*rigidity) return cmd_rigidity(rg);
        if (*concentrate) return cmd_concentrate(co);
    } catch (const Json::exception& e) {
        std::cerr << "error: invalid JSON: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
