#include "clinproj/ml/split.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "clinproj/rng.hpp"

namespace clinproj::ml {

SplitResult patient_split(const std::vector<SubPatient>& subs, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("patient_split: ratio must be in (0,1)");

    std::map<std::string, bool> septic;  // ordered for determinism
    for (const auto& sp : subs) {
        auto [it, inserted] = septic.try_emplace(sp.patient_id, false);
        if (sp.label) it->second = true;
    }
    std::vector<std::string> pos, neg;
    for (const auto& [id, s] : septic) (s ? pos : neg).push_back(id);
    if (pos.size() < 2 || neg.size() < 2)
        throw std::invalid_argument("patient_split: need at least two patients per class");

    Rng rng(seed);
    auto shuffle = [&](std::vector<std::string>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[rng.uniform_index(i)]);
    };
    shuffle(pos);
    shuffle(neg);

    std::map<std::string, bool> in_train;
    auto cut = [&](const std::vector<std::string>& v) {
        auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(v.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, v.size() - 1);
        for (std::size_t i = 0; i < v.size(); ++i) in_train[v[i]] = i < n_train;
    };
    cut(pos);
    cut(neg);

    SplitResult out;
    for (std::size_t i = 0; i < subs.size(); ++i)
        (in_train.at(subs[i].patient_id) ? out.train : out.test).push_back(static_cast<int>(i));
    return out;
}

}  // namespace clinproj::ml
