#include "clinproj/datagen.hpp"

#include <mutex>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "clinproj/constraints.hpp"
#include "clinproj/rng.hpp"

namespace clinproj {

namespace {

struct HealthyBand {
    double center, lo, hi, sigma;
};

// solve-space bands for healthy wandering; BaseExcess stays at or above raw 0
// so the acid-source rule never binds
HealthyBand healthy_band(const std::string& name) {
    if (name == "BaseExcess") return {0.65, 0.51, 0.92, 0.05};
    if (name == "FiO2") return {1.08, 1.05, 1.32, 0.02};
    return {0.5, 0.08, 0.92, 0.08};
}

// Out-of-normal amplitudes shared by healthy wobble and sick excursions:
// solve-space (1.05, 1.6) above the range, (-0.6, -0.05) below it. A single
// out-of-range hour is therefore ambiguous; the classes differ in where the
// deviations concentrate. Healthy patients scatter them across many vitals at
// a patient-specific rate, septic patients park a small vital subset outside
// its range for most hours. The windowed per-vital squared excess reads that
// concentration directly, in either direction.
constexpr double kDevHiLo = 1.05, kDevHiHi = 1.6;
constexpr double kDevLoLo = -0.6, kDevLoHi = -0.05;

struct Excursion {
    std::string name;
    bool can_high, can_low;
    bool ramp_only;  // rate-capped vitals ramp instead of flickering
};

// Vitals feeding the partial-SOFA ladders (MAP, Platelets, BilirubinTotal,
// Creatinine, SaO2/FiO2) are deliberately absent so the SOFA >= 2 detector
// stays an honest baseline rather than a readout of the generator; likewise
// Temp and Resp, whose healthy paths never leave their normal ranges, would
// turn the SIRS count into a class label.
const std::vector<Excursion>& excursions() {
    static const std::vector<Excursion> ex = {
        {"HeartRate", true, true, false},  // tachy- or bradycardia
        {"O2Sat", false, true, false},     // saturation only falls
        {"Lactate", true, false, false},   // stays far below the acid rule
        {"WBC", true, true, false},        // leukocytosis or leukopenia
        {"Magnesium", true, true, false},
        {"PTT", true, true, false},
    };
    return ex;
}

const ConstraintSet& physical_set_for(const VitalRegistry& reg, int T) {
    static std::map<int, ConstraintSet> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(T);
    if (it == cache.end()) it = cache.emplace(T, build_physical(reg, T)).first;
    return it->second;
}

}  // namespace

std::vector<std::string> uncoupled_vitals(const VitalRegistry& registry) {
    static const std::set<std::string> coupled = {
        "Temp", "Resp", "EtCO2", "BaseExcess", "Glucose",          // rate caps
        "MAP",  "DBP",  "SBP",   "BilirubinDirect", "BilirubinTotal",
        "HCT",  "Hgb",  "HCO3",  "Lactate", "pH", "PaCO2", "FiO2",
    };
    std::vector<std::string> out;
    for (const auto& s : registry.specs())
        if (!coupled.count(s.name)) out.push_back(s.name);
    return out;
}

std::vector<PatientRecord> generate_cohort(const VitalRegistry& reg, const CohortParams& p) {
    if (!(p.sepsis_rate > 0.0 && p.sepsis_rate < 1.0))
        throw std::invalid_argument("generate_cohort: sepsis_rate must be in (0,1)");
    if (p.hours_lo < 16 || p.hours_hi < p.hours_lo)
        throw std::invalid_argument("generate_cohort: need hours_hi >= hours_lo >= 16");

    const int V = static_cast<int>(reg.size());
    int map_i = reg.index_of("MAP"), dbp_i = reg.index_of("DBP"), sbp_i = reg.index_of("SBP");
    int bd_i = reg.index_of("BilirubinDirect"), bt_i = reg.index_of("BilirubinTotal");

    Rng master(p.seed);
    std::vector<PatientRecord> cohort;
    cohort.reserve(static_cast<std::size_t>(p.n_patients));

    for (int pi = 0; pi < p.n_patients; ++pi) {
        Rng rng = master.fork(static_cast<std::uint64_t>(pi));
        PatientRecord rec;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%05d", pi);
        rec.patient_id = buf;
        rec.age = std::floor(rng.uniform(20.0, 91.0));
        rec.gender = rng.bernoulli(0.56) ? 1 : 0;

        const int T = p.hours_lo + static_cast<int>(rng.uniform_index(
                                       static_cast<std::uint64_t>(p.hours_hi - p.hours_lo + 1)));
        rec.values.resize(V, T);
        rec.sepsis_label.assign(static_cast<std::size_t>(T), 0);

        bool septic = rng.bernoulli(p.sepsis_rate);
        int onset = -1, excursion_start = -1;
        std::set<std::string> sick;
        if (septic) {
            onset = 13 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(T - 13)));
            excursion_start = onset - 12;
            for (int t = std::max(0, onset - 6); t < T; ++t)
                rec.sepsis_label[static_cast<std::size_t>(t)] = 1;
            int n_sick = 2 + static_cast<int>(rng.uniform_index(3));  // 2..4 excursions
            std::vector<std::size_t> order(excursions().size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng.uniform_index(i)]);
            for (int k = 0; k < n_sick; ++k) sick.insert(excursions()[order[static_cast<std::size_t>(k)]].name);
        }

        // healthy solve-space paths, AR(1) around each band center
        Eigen::MatrixXd solve(V, T);
        for (int v = 0; v < V; ++v) {
            const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
            HealthyBand band = healthy_band(s.name);
            double sigma = band.sigma;
            if (auto r = s.solve_rate()) sigma = std::min(sigma, *r / 4.0);
            double x = band.center + rng.normal() * sigma;
            for (int t = 0; t < T; ++t) {
                x += 0.25 * (band.center - x) + rng.normal() * sigma;
                x = std::clamp(x, band.lo, band.hi);
                solve(v, t) = x;
            }
        }

        // scattered out-of-normal wobble at a patient-specific proneness:
        // every patient throws isolated deviant hours across the uncoupled
        // vitals, at the same amplitudes sick excursions use, so neither a
        // single cell nor a global deviation count identifies the class
        {
            std::vector<int> pool;
            for (const auto& name : uncoupled_vitals(reg))
                if (!sick.count(name)) pool.push_back(reg.index_of(name));
            double proneness = rng.uniform(0.4, 2.2);  // deviant cells per hour
            for (int t = 0; t < T; ++t) {
                int hits = static_cast<int>(proneness) +
                           (rng.bernoulli(proneness - std::floor(proneness)) ? 1 : 0);
                for (int h = 0; h < hits && !pool.empty(); ++h) {
                    int v = pool[rng.uniform_index(pool.size())];
                    const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
                    double box_lo = s.solve_lo(), box_hi = s.solve_hi();
                    bool up = rng.bernoulli(0.5);
                    if (up && box_hi > kDevHiLo + 0.02)
                        solve(v, t) = rng.uniform(kDevHiLo, std::min(kDevHiHi, box_hi));
                    else if (!up && box_lo < kDevLoHi - 0.02)
                        solve(v, t) = rng.uniform(std::max(kDevLoLo, box_lo), kDevLoHi);
                }
            }
        }

        // sick excursions: the chosen vitals ramp onto a fixed per-patient
        // target and then hold near it for most hours (flicker-free for
        // rate-capped vitals)
        for (const auto& ex : excursions()) {
            if (!sick.count(ex.name)) continue;
            int v = reg.index_of(ex.name);
            bool low_side = ex.can_low && (!ex.can_high || rng.bernoulli(0.5));
            double target = low_side ? rng.uniform(kDevLoLo, kDevLoHi)
                                     : rng.uniform(kDevHiLo, kDevHiHi);
            for (int t = excursion_start; t < T; ++t) {
                double ramp = std::min(1.0, (t - excursion_start + 1) / 6.0);
                if (!ex.ramp_only && rng.bernoulli(0.35)) continue;  // flicker hour
                double held = target + rng.normal(0.0, 0.07);
                held = low_side ? std::min(held, kDevLoHi) : std::max(held, kDevHiLo);
                solve(v, t) = solve(v, t) + ramp * (held - solve(v, t));
            }
        }

        // safety clamp into the solve-space box; componentwise clamping is
        // non-expansive, so rate caps survive it
        for (int v = 0; v < V; ++v) {
            const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
            for (int t = 0; t < T; ++t)
                solve(v, t) = std::clamp(solve(v, t), s.solve_lo(), s.solve_hi());
        }

        // blood pressures: derive MAP from the weighted pressure mean so the
        // cross-vital row always holds
        bool bp_sick = false;
        for (int t = 0; t < T; ++t) {
            bool sick_now = bp_sick && t >= excursion_start;
            double dbp_solve = sick_now ? rng.uniform(-0.9, -0.2) : rng.uniform(0.05, 0.30);
            double sbp_solve = sick_now ? rng.uniform(-0.45, -0.05) : rng.uniform(0.05, 0.20);
            solve(dbp_i, t) = dbp_solve;
            solve(sbp_i, t) = sbp_solve;
            const VitalSpec& md = reg.at(static_cast<std::size_t>(dbp_i));
            const VitalSpec& ms = reg.at(static_cast<std::size_t>(sbp_i));
            const VitalSpec& mm = reg.at(static_cast<std::size_t>(map_i));
            double base = 2.0 / 3.0 * md.to_raw(dbp_solve) + 1.0 / 3.0 * ms.to_raw(sbp_solve);
            double raw_map = base * rng.uniform(0.97, 1.0);
            if (!sick_now) raw_map = std::min(raw_map, 75.0);
            solve(map_i, t) = mm.to_solve(raw_map);
        }

        // direct bilirubin as a fraction of total; the total's normal range
        // dips below its physical floor, so clamp to the floor side
        for (int t = 0; t < T; ++t) {
            const VitalSpec& sbt = reg.at(static_cast<std::size_t>(bt_i));
            const VitalSpec& sbd = reg.at(static_cast<std::size_t>(bd_i));
            double bt_lo = sbt.solve_lo() + 1e-9;
            double raw_bt = sbt.to_raw(std::clamp(solve(bt_i, t), bt_lo, 0.8));
            solve(bt_i, t) = sbt.to_solve(raw_bt);
            double raw_bd = std::min(raw_bt * rng.uniform(0.1, 0.5), 0.4);
            solve(bd_i, t) = sbd.to_solve(raw_bd);
        }

        for (int v = 0; v < V; ++v)
            for (int t = 0; t < T; ++t)
                rec.values(v, t) = reg.at(static_cast<std::size_t>(v)).to_raw(solve(v, t));

        const ConstraintSet& cs = physical_set_for(reg, T);
        Eigen::VectorXd flat(cs.n_vars());
        for (int v = 0; v < V; ++v)
            for (int t = 0; t < T; ++t) flat[cs.var(v, t)] = solve(v, t);
        auto bad = cs.verify_feasibility(flat, 1e-9);
        if (!bad.empty())
            throw std::logic_error("generate_cohort: infeasible trajectory for " + rec.patient_id +
                                   " at " + bad.front().label);
        cohort.push_back(std::move(rec));
    }
    return cohort;
}

std::pair<PatientRecord, CorruptionMask> corrupt(const PatientRecord& record,
                                                 const VitalRegistry& reg,
                                                 const CorruptionSpec& spec) {
    Rng rng(spec.seed ^ fnv1a(record.patient_id.data(), record.patient_id.size()));
    PatientRecord out = record;
    CorruptionMask mask;
    const int T = record.hours();

    std::set<std::pair<int, int>> touched;
    auto mark = [&](int v, int t, const std::string& kind) {
        mask.cells.push_back({v, t, record.values(v, t), kind});
        touched.insert({v, t});
    };

    // cross-vital pair: low bicarbonate with positive base excess
    int hco3 = reg.index_of("HCO3"), be = reg.index_of("BaseExcess");
    if (spec.p_logical_pair > 0.0 && hco3 >= 0 && be >= 0) {
        for (int t = 0; t < T; ++t) {
            if (!rng.bernoulli(spec.p_logical_pair)) continue;
            mark(hco3, t, "pair");
            mark(be, t, "pair");
            out.values(hco3, t) = rng.uniform(2.0, 9.0);
            out.values(be, t) = rng.uniform(2.0, 15.0);
        }
    }

    std::vector<std::string> bound_names =
        spec.bound_vitals.empty() ? uncoupled_vitals(reg) : spec.bound_vitals;
    std::set<int> bound_set;
    for (const auto& n : bound_names) bound_set.insert(reg.index_of(n));

    for (int v = 0; v < static_cast<int>(reg.size()); ++v) {
        const VitalSpec& s = reg.at(static_cast<std::size_t>(v));
        double span = s.phys_hi - s.phys_lo;
        for (int t = 0; t < T; ++t) {
            if (touched.count({v, t})) continue;
            if (bound_set.count(v) && rng.bernoulli(spec.p_out_of_range)) {
                mark(v, t, "bound");
                if (rng.bernoulli(0.5)) {
                    out.values(v, t) = s.phys_hi + rng.uniform(0.05, 0.5) * span;
                } else {
                    double lo_val = s.phys_lo - rng.uniform(0.05, 0.5) * span;
                    if (s.log_transformed) lo_val = std::max(lo_val, -0.9);
                    out.values(v, t) = lo_val;
                }
                continue;
            }
            if (s.max_hourly_change && t >= 1 && rng.bernoulli(spec.p_rate_spike)) {
                double cap = *s.max_hourly_change;
                double prev = out.values(v, t - 1);
                double spike = prev + (rng.bernoulli(0.5) ? 1.0 : -1.0) * cap * rng.uniform(1.5, 2.5);
                spike = std::clamp(spike, s.phys_lo, s.phys_hi);
                if (std::abs(spike - prev) > cap) {
                    mark(v, t, "rate");
                    out.values(v, t) = spike;
                }
                continue;
            }
            if (rng.bernoulli(spec.p_missing)) {
                mark(v, t, "missing");
                out.values(v, t) = std::nan("");
            }
        }
    }
    return {out, mask};
}

}  // namespace clinproj
