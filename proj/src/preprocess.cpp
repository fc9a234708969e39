#include "clinproj/preprocess.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace clinproj {

ClinicalScoreConfig ClinicalScoreConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open clinical scores config: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed clinical scores config " + path + ": " + e.what());
    }
    ClinicalScoreConfig cfg;
    auto ladder = [&](const char* key) {
        std::vector<Step> steps;
        for (const auto& row : doc.at("sofa").at(key))
            steps.push_back({row.at("threshold").get<double>(), row.at("score").get<int>()});
        return steps;
    };
    try {
        cfg.cardio_map_lt = ladder("cardiovascular_map_lt");
        cfg.coag_platelets_lt = ladder("coagulation_platelets_lt");
        cfg.liver_bilirubin_ge = ladder("liver_bilirubin_total_ge");
        cfg.renal_creatinine_ge = ladder("renal_creatinine_ge");
        cfg.resp_sf_ratio_lt = ladder("respiration_sf_ratio_lt");
        const auto& s = doc.at("sirs");
        cfg.temp_lo = s.at("temp_lo").get<double>();
        cfg.temp_hi = s.at("temp_hi").get<double>();
        cfg.heart_rate_gt = s.at("heart_rate_gt").get<double>();
        cfg.resp_gt = s.at("resp_gt").get<double>();
        cfg.paco2_lt = s.at("paco2_lt").get<double>();
        cfg.wbc_lo = s.at("wbc_lo").get<double>();
        cfg.wbc_hi = s.at("wbc_hi").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("clinical scores config " + path + ": " + e.what());
    }
    return cfg;
}

const ClinicalScoreConfig& standard_scores() {
    static ClinicalScoreConfig cfg =
        ClinicalScoreConfig::load(bundled_config_dir() + "/clinical_scores.json");
    return cfg;
}

PatientRecord impute(const PatientRecord& record, const VitalRegistry& registry) {
    if (record.hours() < 1) throw std::invalid_argument("impute: record has no hours");
    PatientRecord out = record;
    const int T = record.hours();
    for (int v = 0; v < static_cast<int>(registry.size()); ++v) {
        const VitalSpec& spec = registry.at(static_cast<std::size_t>(v));
        bool ffill_only = spec.name == "FiO2";
        double deflt = ffill_only ? 21.0 : spec.normal_mid_raw();

        std::vector<int> obs;
        for (int t = 0; t < T; ++t)
            if (std::isfinite(record.values(v, t))) obs.push_back(t);

        if (obs.empty()) {
            for (int t = 0; t < T; ++t) out.values(v, t) = deflt;
            continue;
        }
        for (int t = 0; t < obs.front(); ++t) out.values(v, t) = deflt;
        for (int t = obs.back() + 1; t < T; ++t) out.values(v, t) = record.values(v, obs.back());
        for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
            int a = obs[k], b = obs[k + 1];
            for (int t = a + 1; t < b; ++t) {
                if (ffill_only)
                    out.values(v, t) = record.values(v, a);
                else
                    out.values(v, t) = record.values(v, a) +
                                       (record.values(v, b) - record.values(v, a)) *
                                           static_cast<double>(t - a) / static_cast<double>(b - a);
            }
        }
    }
    return out;
}

namespace {

int ladder_lt(const std::vector<ClinicalScoreConfig::Step>& steps, double value) {
    int score = 0;
    for (const auto& s : steps)
        if (value < s.threshold) score = std::max(score, s.score);
    return score;
}

int ladder_ge(const std::vector<ClinicalScoreConfig::Step>& steps, double value) {
    int score = 0;
    for (const auto& s : steps)
        if (value >= s.threshold) score = std::max(score, s.score);
    return score;
}

double row_min(const Eigen::MatrixXd& w, int v) { return w.row(v).minCoeff(); }
double row_max(const Eigen::MatrixXd& w, int v) { return w.row(v).maxCoeff(); }

}  // namespace

int sofa_partial(const Eigen::MatrixXd& window_raw, const VitalRegistry& registry,
                 const ClinicalScoreConfig& cfg) {
    int total = 0;
    int map = registry.index_of("MAP");
    if (map >= 0) total += ladder_lt(cfg.cardio_map_lt, row_min(window_raw, map));
    int plt = registry.index_of("Platelets");
    if (plt >= 0) total += ladder_lt(cfg.coag_platelets_lt, row_min(window_raw, plt));
    int bil = registry.index_of("BilirubinTotal");
    if (bil >= 0) total += ladder_ge(cfg.liver_bilirubin_ge, row_max(window_raw, bil));
    int cre = registry.index_of("Creatinine");
    if (cre >= 0) total += ladder_ge(cfg.renal_creatinine_ge, row_max(window_raw, cre));
    int sao2 = registry.index_of("SaO2"), fio2 = registry.index_of("FiO2");
    if (sao2 >= 0 && fio2 >= 0) {
        // worst SF ratio over the window; FiO2 given as a percentage, floored
        // at room air
        double worst = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < window_raw.cols(); ++t) {
            double frac = std::max(window_raw(fio2, t), 21.0) / 100.0;
            worst = std::min(worst, window_raw(sao2, t) / frac);
        }
        total += ladder_lt(cfg.resp_sf_ratio_lt, worst);
    }
    return total;
}

int sirs(const Eigen::MatrixXd& window_raw, const VitalRegistry& registry,
         const ClinicalScoreConfig& cfg) {
    int count = 0;
    int temp = registry.index_of("Temp");
    if (temp >= 0 && (row_min(window_raw, temp) < cfg.temp_lo || row_max(window_raw, temp) > cfg.temp_hi))
        ++count;
    int hr = registry.index_of("HeartRate");
    if (hr >= 0 && row_max(window_raw, hr) > cfg.heart_rate_gt) ++count;
    int resp = registry.index_of("Resp"), paco2 = registry.index_of("PaCO2");
    bool resp_crit = (resp >= 0 && row_max(window_raw, resp) > cfg.resp_gt) ||
                     (paco2 >= 0 && row_min(window_raw, paco2) < cfg.paco2_lt);
    if (resp_crit) ++count;
    int wbc = registry.index_of("WBC");
    if (wbc >= 0 && (row_min(window_raw, wbc) < cfg.wbc_lo || row_max(window_raw, wbc) > cfg.wbc_hi))
        ++count;
    return count;
}

std::optional<double> derive_sepsis_onset(double t_suspicion, double t_sofa) {
    if (t_suspicion - 24.0 <= t_sofa && t_sofa <= t_suspicion + 12.0)
        return std::min(t_suspicion, t_sofa);
    return std::nullopt;
}

std::vector<SubPatient> make_subpatients(const PatientRecord& imputed,
                                         const VitalRegistry& registry, int window, int stride) {
    if (window < 1 || stride < 1 || stride >= window)
        throw std::invalid_argument("make_subpatients: need window > stride > 0");
    std::vector<SubPatient> out;
    const int T = imputed.hours();
    if (T < 2 * window) return out;

    int idx = 0;
    for (int start = 0; start + window <= T; start += stride, ++idx) {
        SubPatient sp;
        sp.patient_id = imputed.patient_id;
        sp.sub_id = imputed.patient_id + "#" + std::to_string(idx);
        sp.window_start = start;
        sp.age = imputed.age;
        sp.gender = imputed.gender;

        Eigen::MatrixXd raw = imputed.values.middleCols(start, window);
        sp.data.resize(raw.rows(), raw.cols());
        for (int v = 0; v < static_cast<int>(registry.size()); ++v) {
            const VitalSpec& spec = registry.at(static_cast<std::size_t>(v));
            for (int t = 0; t < window; ++t) sp.data(v, t) = spec.to_solve(raw(v, t));
        }
        sp.sofa = sofa_partial(raw, registry);
        sp.sirs = sirs(raw, registry);
        sp.label = 0;
        for (int t = start; t < start + window; ++t)
            if (imputed.sepsis_label[static_cast<std::size_t>(t)]) sp.label = 1;
        out.push_back(std::move(sp));
    }
    return out;
}

}  // namespace clinproj
