#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "clinproj/vitals.hpp"

namespace clinproj {

// Raw hourly record of one patient. values(v, t) is the measurement of
// registry vital v at hour t, NaN when missing.
struct PatientRecord {
    std::string patient_id;
    double age = 0.0;
    int gender = 0;  // 1 = male, 0 = female
    Eigen::MatrixXd values;          // vitals x hours
    std::vector<int> sepsis_label;   // per hour, 0/1

    int hours() const { return static_cast<int>(values.cols()); }
};

// One fixed-length window in solve space, plus identity and per-window scores.
struct SubPatient {
    std::string sub_id;
    std::string patient_id;
    int window_start = 0;
    Eigen::MatrixXd data;  // vitals x window, solve space
    double age = 0.0;
    int gender = 0;
    int sofa = 0;
    int sirs = 0;
    int label = 0;
};

// Threshold ladders for the clinical severity scores, loaded from the bundled
// scores config.
struct ClinicalScoreConfig {
    struct Step {
        double threshold;
        int score;
    };
    // SOFA organ sub-scores computable from the modeled vitals; CNS is not.
    std::vector<Step> cardio_map_lt;
    std::vector<Step> coag_platelets_lt;
    std::vector<Step> liver_bilirubin_ge;
    std::vector<Step> renal_creatinine_ge;
    std::vector<Step> resp_sf_ratio_lt;
    // SIRS criteria
    double temp_lo = 36, temp_hi = 38;
    double heart_rate_gt = 90;
    double resp_gt = 20, paco2_lt = 32;
    double wbc_lo = 4, wbc_hi = 12;

    static ClinicalScoreConfig load(const std::string& path);
};

const ClinicalScoreConfig& standard_scores();

// Fills every NaN: interior gaps by linear interpolation (FiO2: forward fill),
// leading gaps and all-missing series by the default value (FiO2: 21, others:
// normal-range mean), trailing gaps by carrying the last observation forward.
// Observed values are preserved exactly.
PatientRecord impute(const PatientRecord& record, const VitalRegistry& registry);

// Partial SOFA over one raw-space window: cardiovascular (MAP), coagulation
// (Platelets), liver (BilirubinTotal), renal (Creatinine), and respiration via
// the SaO2/FiO2 ratio standing in for PaO2/FiO2. Each organ is scored on its
// worst hour.
int sofa_partial(const Eigen::MatrixXd& window_raw, const VitalRegistry& registry,
                 const ClinicalScoreConfig& cfg = standard_scores());

// SIRS criteria count (0..4) over one raw-space window; a criterion counts if
// met at any hour.
int sirs(const Eigen::MatrixXd& window_raw, const VitalRegistry& registry,
         const ClinicalScoreConfig& cfg = standard_scores());

// Sepsis onset rule: min of the two timestamps when t_sofa falls within
// [t_suspicion - 24, t_suspicion + 12], otherwise no onset.
std::optional<double> derive_sepsis_onset(double t_suspicion, double t_sofa);

// Cuts an imputed record into fixed windows: starts at hour 0, `stride` hours
// apart, full windows only; records shorter than 2*window are discarded
// entirely. Window data is transformed into solve space; label is 1 iff the
// parent label is 1 anywhere in the window.
std::vector<SubPatient> make_subpatients(const PatientRecord& imputed,
                                         const VitalRegistry& registry, int window = 6,
                                         int stride = 3);

}  // namespace clinproj
