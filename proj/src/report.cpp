#include "afx/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "afx/runtime.hpp"

namespace afx {

namespace {

nlohmann::json ssim_spec_json(const SsimSpec& s) {
    return {{"window", s.window}, {"sigma", s.sigma}, {"k1", s.k1}, {"k2", s.k2},
            {"data_range", s.data_range}};
}

}  // namespace

void write_report_json(const EvaluationReport& rep, const std::filesystem::path& path) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : rep.records)
        records.push_back({{"id", r.id},
                           {"pred_orig", r.pred_orig},
                           {"pred_expl", r.pred_expl},
                           {"ssim", r.ssim_val},
                           {"dist_orig", r.dist_orig},
                           {"dist_expl", r.dist_expl},
                           {"valid", r.valid}});
    nlohmann::json j = {{"mode", mode_name(rep.mode)},
                        {"n", rep.n},
                        {"validity_pct", rep.validity_pct},
                        {"mean_ssim", rep.mean_ssim},
                        {"mean_boundary_drift", rep.mean_boundary_drift},
                        {"ssim_spec", ssim_spec_json(rep.ssim_spec)},
                        {"records", records}};
    atomic_write_bytes(path, j.dump(2) + "\n");
}

void write_report_csv(const EvaluationReport& rep, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "id,pred_orig_0,pred_orig_1,pred_expl_0,pred_expl_1,target_class,ssim,"
           "dist_orig,dist_expl,valid\n";
    char buf[256];
    for (const auto& r : rep.records) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%.9g,%d\n", r.id,
                      r.pred_orig[0], r.pred_orig[1], r.pred_expl[0], r.pred_expl[1],
                      r.target_class, r.ssim_val, r.dist_orig, r.dist_expl, r.valid ? 1 : 0);
        out << buf;
    }
    atomic_write_bytes(path, out.str());
}

EvaluationReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("report not found: " + path.string());
    nlohmann::json j;
    in >> j;
    EvaluationReport rep;
    rep.mode = parse_mode(j.at("mode").get<std::string>());
    rep.n = j.at("n").get<int>();
    rep.validity_pct = j.at("validity_pct").get<double>();
    rep.mean_ssim = j.at("mean_ssim").get<double>();
    rep.mean_boundary_drift = j.at("mean_boundary_drift").get<double>();
    const auto& s = j.at("ssim_spec");
    rep.ssim_spec.window = s.at("window").get<int>();
    rep.ssim_spec.sigma = s.at("sigma").get<double>();
    rep.ssim_spec.k1 = s.at("k1").get<double>();
    rep.ssim_spec.k2 = s.at("k2").get<double>();
    rep.ssim_spec.data_range = s.at("data_range").get<double>();
    for (const auto& rj : j.at("records")) {
        ExplanationRecord r;
        r.id = rj.at("id").get<int>();
        r.pred_orig = rj.at("pred_orig").get<std::array<double, 2>>();
        r.pred_expl = rj.at("pred_expl").get<std::array<double, 2>>();
        r.ssim_val = rj.at("ssim").get<double>();
        r.dist_orig = rj.at("dist_orig").get<double>();
        r.dist_expl = rj.at("dist_expl").get<double>();
        r.valid = rj.at("valid").get<bool>();
        const int orig = r.pred_orig[1] >= r.pred_orig[0] ? 1 : 0;
        r.target_class = rep.mode == ExplainerMode::alterfactual ? orig : 1 - orig;
        rep.records.push_back(r);
    }
    return rep;
}

std::string report_summary_line(const EvaluationReport& rep) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "validity=%.2f ssim=%.2f", rep.validity_pct, rep.mean_ssim);
    return buf;
}

}  // namespace afx
