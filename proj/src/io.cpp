#include "hcube/io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hcube {

namespace {

Json number_or_inf(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double read_number(const Json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw Error("expected a number or \"inf\", got \"" + s + "\"");
    }
    if (!j.is_number()) throw Error("expected a number");
    return j.get<double>();
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(std::string("missing field '") + key + "'");
    return j.at(key);
}

}  // namespace

Json space_to_json(const Space& s) {
    if (s.is_lp()) return Json{{"kind", "lp"}, {"m", s.lp().m}, {"q", number_or_inf(s.lp().q)}};
    const auto& t = s.tabulated();
    Json rows = Json::array();
    for (int i = 0; i < t.k; ++i) {
        Json row = Json::array();
        for (int j = 0; j < t.k; ++j) row.push_back(t.at(i, j));
        rows.push_back(std::move(row));
    }
    return Json{{"kind", "table"}, {"k", t.k}, {"distances", std::move(rows)}};
}

Space space_from_json(const Json& j) {
    const auto kind = field(j, "kind").get<std::string>();
    if (kind == "lp") return LpSpace(field(j, "m").get<int>(), read_number(field(j, "q")));
    if (kind == "table") {
        const int k = field(j, "k").get<int>();
        const auto& rows = field(j, "distances");
        if (!rows.is_array() || static_cast<int>(rows.size()) != k) throw Error("table must have k rows");
        std::vector<double> flat;
        for (const auto& row : rows) {
            if (!row.is_array() || static_cast<int>(row.size()) != k) throw Error("table rows must have k entries");
            for (const auto& x : row) flat.push_back(read_number(x));
        }
        return TabulatedSpace(k, std::move(flat));
    }
    throw Error("unknown space kind '" + kind + "'");
}

Json map_to_json(const MapOnCube& f) {
    Json images = Json::array();
    for (Mask v = 0; v < f.size(); ++v) {
        Json row = Json::array();
        for (double x : f.image(v)) row.push_back(x);
        images.push_back(std::move(row));
    }
    return Json{{"n", f.n()}, {"space", space_to_json(f.space())}, {"images", std::move(images)}};
}

MapOnCube map_from_json(const Json& j) {
    const int n = field(j, "n").get<int>();
    Space space = space_from_json(field(j, "space"));
    const auto& images = field(j, "images");
    if (!images.is_array()) throw Error("images must be an array");
    std::vector<Point> pts;
    pts.reserve(images.size());
    for (const auto& row : images) {
        if (!row.is_array()) throw Error("each image must be an array");
        Point p;
        for (const auto& x : row) p.push_back(read_number(x));
        pts.push_back(std::move(p));
    }
    return MapOnCube(n, std::move(space), pts);
}

Json to_json(const TypeStatistic& s) {
    return Json{{"kind", to_string(s.kind)}, {"p", s.p},           {"n", s.n},
                {"lhs", number_or_inf(s.lhs)}, {"rhs", number_or_inf(s.rhs)}, {"ratio", number_or_inf(s.ratio)}};
}

Json to_json(const FlatConstant& fc) {
    return Json{{"p", fc.p},          {"n", fc.n},          {"Phi", fc.Phi}, {"phi_star", fc.phi_star},
                {"interior", fc.interior}, {"method", to_string(fc.method)}};
}

Json to_json(const SharpEmbeddingReport& r) {
    return Json{{"l", r.l},
                {"a", r.a},
                {"D", r.D},
                {"lip", r.lip},
                {"min_antipodal", r.min_antipodal},
                {"hypothesis_holds", r.hypothesis_holds},
                {"distortion", number_or_inf(r.distortion)},
                {"proven_bound", number_or_inf(r.proven_bound)},
                {"conclusion_holds", r.conclusion_holds},
                {"consistent", r.consistent()}};
}

Json to_json(const RigidityCertificate& c) {
    return Json{{"l", c.l},
                {"p", c.p},
                {"a", c.a},
                {"D", c.D},
                {"lhs", c.lhs},
                {"rhs", c.rhs},
                {"hypothesis_ratio", number_or_inf(c.hypothesis_ratio)},
                {"hypothesis_holds", c.hypothesis_holds},
                {"T", c.T},
                {"min_scaled", c.min_scaled},
                {"max_scaled", c.max_scaled},
                {"pass", c.pass}};
}

Json to_json(const BmwEstimate& e) {
    Json j{{"p", e.p},
           {"l", e.l},
           {"D", e.D},
           {"trials", e.trials},
           {"seed", e.seed},
           {"a_estimate", e.a_estimate},
           {"counterexample_found", e.counterexample_found},
           {"failing_trials", e.failing_trials},
           {"degenerate", e.degenerate}};
    if (e.counterexample) {
        j["counterexample_trial"] = e.counterexample_trial;
        j["counterexample"] = map_to_json(*e.counterexample);
    }
    return j;
}

Json to_json(const ParameterLedger& g) {
    Json checks = Json::array();
    for (const auto& c : g.checks)
        checks.push_back(Json{{"name", c.name},
                              {"lhs", number_or_inf(c.lhs)},
                              {"rhs", number_or_inf(c.rhs)},
                              {"holds", c.holds},
                              {"size_dependent", c.size_dependent}});
    Json gaps = Json::array();
    for (const auto& s : g.gaps()) gaps.push_back(s);
    return Json{{"mode", to_string(g.mode)},
                {"p", g.p},
                {"lambda", g.lambda},
                {"Theta", g.Theta},
                {"vartheta", g.vartheta},
                {"D", g.D},
                {"l", g.l},
                {"b", g.b},
                {"nu", g.nu},
                {"a", g.a},
                {"a_source", g.a_source},
                {"mu", g.mu},
                {"M", g.M},
                {"Delta", g.Delta},
                {"m", g.m},
                {"d", g.d},
                {"Phi", g.Phi},
                {"log_N", g.log_N},
                {"log_flat_gap", number_or_inf(g.log_flat_gap)},
                {"phi", g.phi},
                {"log_eta", number_or_inf(g.log_eta)},
                {"eta", g.eta},
                {"checks", std::move(checks)},
                {"gaps", std::move(gaps)}};
}

Json to_json(const ExtractionCertificate& c) {
    Json stages = Json::array();
    for (const auto& s : c.stages) {
        Json values = Json::object();
        for (const auto& [k, v] : s.values) values[k] = number_or_inf(v);
        stages.push_back(Json{{"name", s.name}, {"ok", s.ok}, {"note", s.note}, {"values", std::move(values)}});
    }
    Json j{{"route", c.route}, {"verdict", c.pass ? "pass" : "fail"}, {"failed_stage", c.failed_stage},
           {"L", c.L},         {"l", c.l},                            {"alarms", c.alarms}};
    j["witness"] = c.witness ? Json(*c.witness) : Json(nullptr);
    j["r"] = c.r;
    j["s"] = c.s;
    j["scale_ratio"] = number_or_inf(c.scale_ratio);
    j["distortion_h"] = number_or_inf(c.distortion_h);
    j["distortion_Fh"] = number_or_inf(c.distortion_Fh);
    j["h"] = c.h ? map_to_json(*c.h) : Json(nullptr);
    j["stages"] = std::move(stages);
    return j;
}

Json to_json(const ConcentrationReport& r) {
    Json tails = Json::array();
    for (const auto& t : r.tails) tails.push_back(Json{{"t", t.t}, {"prob", t.prob}});
    return Json{{"id", r.id},
                {"n", r.n},
                {"median", r.median},
                {"mean", r.mean},
                {"lambda1", r.lambda1},
                {"observed_lip", r.observed_lip},
                {"tails", std::move(tails)},
                {"alpha", r.alpha},
                {"beta", r.beta},
                {"fit_points", r.fit_points},
                {"fit_ok", r.fit_ok}};
}

Json profile_to_json(const TreeProfile& pr) {
    Json nodes = Json::array();
    for (int j = 0; j < pr.tree.level_count(); ++j)
        for (int k = 0; k < pr.tree.level_size(j); ++k) {
            const auto& I = pr.tree.level(j)[k];
            nodes.push_back(Json{{"lo", I.lo}, {"hi", I.hi}, {"level", j}, {"r", pr.r[j][k]}, {"s", pr.s[j][k]}});
        }
    return Json{{"branching", pr.tree.branching()}, {"p", pr.p}, {"nodes", std::move(nodes)}};
}

ParameterLedger ledger_from_json(const Json& j) {
    auto get = [&](const char* key, double def) { return j.contains(key) ? read_number(j.at(key)) : def; };
    LedgerOverrides ov;
    auto opt = [&](const char* key, std::optional<double>& out) {
        if (j.contains(key)) out = read_number(j.at(key));
    };
    opt("b", ov.b);
    opt("nu", ov.nu);
    opt("a", ov.a);
    opt("mu", ov.mu);
    opt("M", ov.M);
    opt("Delta", ov.Delta);
    opt("eta", ov.eta);
    opt("Phi", ov.Phi);
    if (j.contains("m")) ov.m = j.at("m").get<long long>();
    if (j.contains("d")) ov.d = j.at("d").get<long long>();
    if (j.contains("bmw_trials")) ov.bmw_trials = j.at("bmw_trials").get<int>();
    if (j.contains("seed")) ov.seed = j.at("seed").get<std::uint64_t>();
    const auto mode = ledger_mode_from_string(j.value("mode", std::string("empirical")));
    return build_ledger(get("p", 2.0), get("lambda", 1.0), get("Theta", 1.0), get("vartheta", 0.5), get("D", 2.0),
                        j.contains("l") ? j.at("l").get<int>() : 2, mode, ov);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-" || path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text << '\n';
}

}  // namespace hcube
