#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clinproj/preprocess.hpp"
#include "clinproj/vitals.hpp"

namespace clinproj {

// Controlled damage applied on top of a feasible record. Probabilities are
// per cell (per hour for the logical pair). `bound_vitals` restricts
// out-of-range corruption; the default set is the vitals with no rate cap and
// no cross-vital row, so a box clamp alone recovers them.
struct CorruptionSpec {
    double p_out_of_range = 0.0;
    double p_rate_spike = 0.0;
    double p_logical_pair = 0.0;
    double p_missing = 0.0;
    std::vector<std::string> bound_vitals;  // empty = default uncoupled set
    std::uint64_t seed = 0;
};

struct CorruptionMask {
    struct Cell {
        int vital;
        int t;
        double original;
        std::string kind;  // "bound", "rate", "pair", "missing"
    };
    std::vector<Cell> cells;
};

// Vitals free of rate caps and cross-vital rows under the standard registry.
std::vector<std::string> uncoupled_vitals(const VitalRegistry& registry);

struct CohortParams {
    int n_patients = 100;
    int hours_lo = 18, hours_hi = 48;
    double sepsis_rate = 0.072;
    std::uint64_t seed = 1;
};

// Synthetic cohort with known-feasible physiology: smooth in-range
// trajectories for healthy hours; septic patients ramp a random subset of
// vitals out of their normal (but never physical) ranges starting at least
// six hours before the first labeled hour. Labels follow the six-hours-early
// convention. Every record is verified feasible before it is returned.
std::vector<PatientRecord> generate_cohort(const VitalRegistry& registry,
                                           const CohortParams& params);

std::pair<PatientRecord, CorruptionMask> corrupt(const PatientRecord& record,
                                                 const VitalRegistry& registry,
                                                 const CorruptionSpec& spec);

}  // namespace clinproj
