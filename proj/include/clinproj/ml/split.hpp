#pragma once

#include <cstdint>
#include <vector>

#include "clinproj/preprocess.hpp"

namespace clinproj::ml {

struct SplitResult {
    std::vector<int> train, test;  // indices into the sub-patient list
};

// Patient-level train/test split: septic and non-septic patients are each
// split `ratio`:(1-ratio) by patient count (rounded), and all windows of a
// patient land on the same side. A patient is septic when any of its windows
// is labeled. Throws when either class has fewer than two patients.
SplitResult patient_split(const std::vector<SubPatient>& subpatients, double ratio,
                          std::uint64_t seed);

}  // namespace clinproj::ml
