#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "clinproj/preprocess.hpp"
#include "clinproj/vitals.hpp"

namespace clinproj {

struct PsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Patient-level PSV: pipe-separated, header row, one row per hour, "NaN" for
// missing, final column SepsisLabel, patient id = filename stem. Reader
// accepts the PhysioNet spellings of vital names (HR, Hct, Bilirubin_direct,
// Bilirubin_total) and ignores unknown columns.
PatientRecord read_patient_psv(const std::string& path, const VitalRegistry& registry);
void write_patient_psv(const std::string& path, const PatientRecord& record,
                       const VitalRegistry& registry);

// All *.psv files in a directory, sorted by filename.
std::vector<PatientRecord> read_cohort_dir(const std::string& dir, const VitalRegistry& registry);
void write_cohort_dir(const std::string& dir, const std::vector<PatientRecord>& records,
                      const VitalRegistry& registry);

// Sub-patient table: one row per sub-patient, solve-space window values as
// <vital>_h<t> columns, SepsisLabel last. Projection output appends
// <vital>_physdist columns and trust output appends <vital>_trust columns;
// the reader picks up whichever blocks are present.
struct SubPatientTable {
    std::vector<SubPatient> rows;
    std::vector<Eigen::VectorXd> phys_dist;  // empty until projected
    std::vector<Eigen::VectorXd> trust;      // empty until trust-scored
};

void write_subpatient_table(const std::string& path, const SubPatientTable& table,
                            const VitalRegistry& registry);
SubPatientTable read_subpatient_table(const std::string& path, const VitalRegistry& registry);

// Lossless double formatting used across all text artifacts.
std::string format_double(double v);

}  // namespace clinproj
